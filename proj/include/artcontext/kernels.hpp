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

#ifndef ARTCONTEXT_KERNELS_HPP_
#define ARTCONTEXT_KERNELS_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP variant; rows are computed independently with the same
// accumulation order, so the two agree bit-for-bit.
namespace artcontext::kernels {

inline constexpr double kMinNorm = 1e-12;

struct RowStats {
  double dot = 0.0;
  double norm_sq = 0.0;
};

inline RowStats DotAndNorm(std::span<const float> q, std::span<const float> row) {
  RowStats s;
  for (std::size_t k = 0; k < row.size(); ++k) {
    const double a = q[k];
    const double b = row[k];
    s.dot += a * b;
    s.norm_sq += b * b;
  }
  return s;
}

inline double SquaredNorm(std::span<const float> v) {
  double s = 0.0;
  for (const float x : v) s += static_cast<double>(x) * x;
  return s;
}

// dot / (|q| |row|) clamped to [-1, 1]; NaN when the row is degenerate.
inline double CosineFromStats(const RowStats& s, double query_norm) {
  const double row_norm = std::sqrt(s.norm_sq);
  if (row_norm < kMinNorm) return std::nan("");
  const double c = s.dot / (query_norm * row_norm);
  return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

// Cosine of `query` against each row of a row-major matrix. Throws
// ZeroVector when the query is degenerate.
std::vector<double> CosineScoresSerial(std::span<const float> query,
                                       std::span<const float> rows,
                                       std::size_t dim);
std::vector<double> CosineScoresOmp(std::span<const float> query,
                                    std::span<const float> rows,
                                    std::size_t dim);

// out[n x d_out] = x[n x d_in] * w[d_out x d_in]^T, double accumulation.
void ProjectRowsSerial(std::span<const float> x, std::size_t n,
                       std::span<const float> w, std::size_t d_out,
                       std::size_t d_in, std::span<float> out);
void ProjectRowsOmp(std::span<const float> x, std::size_t n,
                    std::span<const float> w, std::size_t d_out,
                    std::size_t d_in, std::span<float> out);

// Adapted projection out = x W^T + scale * (x A^T) B^T with A [rank x d_in]
// and B [d_out x rank]. Accumulates in double; when the low-rank term is
// exactly zero the output equals ProjectRows bit-for-bit.
struct LowRank {
  std::span<const float> a;
  std::span<const float> b;
  std::size_t rank = 0;
  double scale = 0.0;
};
void ProjectRowsLoraSerial(std::span<const float> x, std::size_t n,
                           std::span<const float> w, std::size_t d_out,
                           std::size_t d_in, const LowRank& lr,
                           std::span<float> out);
void ProjectRowsLoraOmp(std::span<const float> x, std::size_t n,
                        std::span<const float> w, std::size_t d_out,
                        std::size_t d_in, const LowRank& lr,
                        std::span<float> out);
// Single-vector form; `x_lr` feeds only the low-rank branch (dropout).
void ProjectVectorLora(std::span<const float> x, std::span<const float> x_lr,
                       std::span<const float> w, std::size_t d_out,
                       std::size_t d_in, const LowRank& lr, std::span<float> out);

int MaxThreads();

}  // namespace artcontext::kernels

#endif  // ARTCONTEXT_KERNELS_HPP_
