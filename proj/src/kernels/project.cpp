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

#include "artcontext/error.hpp"
#include "artcontext/kernels.hpp"

namespace artcontext::kernels {
namespace {

void CheckShapes(std::span<const float> x, std::size_t n,
                 std::span<const float> w, std::size_t d_out, std::size_t d_in,
                 std::span<float> out) {
  if (x.size() != n * d_in || w.size() != d_out * d_in ||
      out.size() != n * d_out) {
    throw Error(ErrorCode::kDimMismatch, "ProjectRows shape mismatch");
  }
}

inline void ProjectOne(const float* x, const float* w, std::size_t d_out,
                       std::size_t d_in, float* y) {
  for (std::size_t o = 0; o < d_out; ++o) {
    const float* wr = w + o * d_in;
    double acc = 0.0;
    for (std::size_t k = 0; k < d_in; ++k) acc += static_cast<double>(wr[k]) * x[k];
    y[o] = static_cast<float>(acc);
  }
}

void CheckLowRank(const LowRank& lr, std::size_t d_out, std::size_t d_in) {
  if (lr.a.size() != lr.rank * d_in || lr.b.size() != d_out * lr.rank) {
    throw Error(ErrorCode::kDimMismatch, "low-rank factors do not match head");
  }
}

// `x` is the frozen-path input, `x_lr` the (possibly dropped-out) input of
// the low-rank branch.
inline void ProjectOneLora(const float* x, const float* x_lr, const float* w,
                           std::size_t d_out, std::size_t d_in,
                           const LowRank& lr, double* scratch, float* y) {
  for (std::size_t k = 0; k < lr.rank; ++k) {
    const float* ar = lr.a.data() + k * d_in;
    double acc = 0.0;
    for (std::size_t c = 0; c < d_in; ++c) acc += static_cast<double>(ar[c]) * x_lr[c];
    scratch[k] = acc;
  }
  for (std::size_t o = 0; o < d_out; ++o) {
    const float* wr = w + o * d_in;
    double acc = 0.0;
    for (std::size_t c = 0; c < d_in; ++c) acc += static_cast<double>(wr[c]) * x[c];
    const float* br = lr.b.data() + o * lr.rank;
    double delta = 0.0;
    for (std::size_t k = 0; k < lr.rank; ++k) delta += static_cast<double>(br[k]) * scratch[k];
    delta *= lr.scale;
    // Skipping a zero update keeps the sign of a -0.0 frozen output.
    if (delta != 0.0) acc += delta;
    y[o] = static_cast<float>(acc);
  }
}

}  // namespace

void ProjectRowsLoraSerial(std::span<const float> x, std::size_t n,
                           std::span<const float> w, std::size_t d_out,
                           std::size_t d_in, const LowRank& lr,
                           std::span<float> out) {
  CheckShapes(x, n, w, d_out, d_in, out);
  CheckLowRank(lr, d_out, d_in);
  std::vector<double> scratch(lr.rank);
  for (std::size_t i = 0; i < n; ++i) {
    const float* xi = x.data() + i * d_in;
    ProjectOneLora(xi, xi, w.data(), d_out, d_in, lr, scratch.data(),
                   out.data() + i * d_out);
  }
}

void ProjectRowsLoraOmp(std::span<const float> x, std::size_t n,
                        std::span<const float> w, std::size_t d_out,
                        std::size_t d_in, const LowRank& lr,
                        std::span<float> out) {
  CheckShapes(x, n, w, d_out, d_in, out);
  CheckLowRank(lr, d_out, d_in);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel
  {
    std::vector<double> scratch(lr.rank);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      const float* xi = x.data() + static_cast<std::size_t>(i) * d_in;
      ProjectOneLora(xi, xi, w.data(), d_out, d_in, lr, scratch.data(),
                     out.data() + static_cast<std::size_t>(i) * d_out);
    }
  }
}

void ProjectVectorLora(std::span<const float> x, std::span<const float> x_lr,
                       std::span<const float> w, std::size_t d_out,
                       std::size_t d_in, const LowRank& lr, std::span<float> out) {
  CheckShapes(x, 1, w, d_out, d_in, out);
  CheckLowRank(lr, d_out, d_in);
  if (x_lr.size() != d_in) throw Error(ErrorCode::kDimMismatch, "x_lr length");
  std::vector<double> scratch(lr.rank);
  ProjectOneLora(x.data(), x_lr.data(), w.data(), d_out, d_in, lr,
                 scratch.data(), out.data());
}

void ProjectRowsSerial(std::span<const float> x, std::size_t n,
                       std::span<const float> w, std::size_t d_out,
                       std::size_t d_in, std::span<float> out) {
  CheckShapes(x, n, w, d_out, d_in, out);
  for (std::size_t i = 0; i < n; ++i) {
    ProjectOne(x.data() + i * d_in, w.data(), d_out, d_in, out.data() + i * d_out);
  }
}

void ProjectRowsOmp(std::span<const float> x, std::size_t n,
                    std::span<const float> w, std::size_t d_out,
                    std::size_t d_in, std::span<float> out) {
  CheckShapes(x, n, w, d_out, d_in, out);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto u = static_cast<std::size_t>(i);
    ProjectOne(x.data() + u * d_in, w.data(), d_out, d_in, out.data() + u * d_out);
  }
}

}  // namespace artcontext::kernels
