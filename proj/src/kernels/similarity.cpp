// Copyright 2026 The ArtContext Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <omp.h>

#include "artcontext/error.hpp"
#include "artcontext/kernels.hpp"

namespace artcontext::kernels {
namespace {

double QueryNorm(std::span<const float> query, std::size_t dim) {
  if (query.size() != dim || dim == 0) {
    throw Error(ErrorCode::kDimMismatch,
                "query has " + std::to_string(query.size()) +
                    " entries, matrix dim is " + std::to_string(dim));
  }
  const double norm = std::sqrt(SquaredNorm(query));
  if (norm < kMinNorm) throw Error(ErrorCode::kZeroVector, "query norm < 1e-12");
  return norm;
}

}  // namespace

std::vector<double> CosineScoresSerial(std::span<const float> query,
                                       std::span<const float> rows,
                                       std::size_t dim) {
  const double qn = QueryNorm(query, dim);
  const std::size_t n = rows.size() / dim;
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = CosineFromStats(DotAndNorm(query, rows.subspan(i * dim, dim)), qn);
  }
  return scores;
}

std::vector<double> CosineScoresOmp(std::span<const float> query,
                                    std::span<const float> rows,
                                    std::size_t dim) {
  const double qn = QueryNorm(query, dim);
  const auto n = static_cast<std::ptrdiff_t>(rows.size() / dim);
  std::vector<double> scores(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    scores[u] = CosineFromStats(DotAndNorm(query, rows.subspan(u * dim, dim)), qn);
  }
  return scores;
}

int MaxThreads() { return omp_get_max_threads(); }

}  // namespace artcontext::kernels
