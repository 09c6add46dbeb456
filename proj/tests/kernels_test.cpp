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

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <random>

#include "artcontext/kernels.hpp"
#include "support.hpp"

namespace artcontext::kernels {
namespace {

std::vector<float> Random(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

template <typename T>
bool BitEqual(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

TEST(CosineScores, SerialMatchesOmpBitForBit) {
  for (const std::size_t rows : {0u, 1u, 7u, 513u}) {
    const std::size_t dim = 19;
    const auto q = Random(dim, 1);
    const auto m = Random(rows * dim, 2 + rows);
    EXPECT_TRUE(BitEqual(CosineScoresSerial(q, m, dim), CosineScoresOmp(q, m, dim)));
  }
}

TEST(CosineScores, MatchesDirectFormulaAndFlagsZeroRows) {
  const std::vector<float> q{1, 2, 2};
  const std::vector<float> m{2, 1, 2, 0, 0, 0, -1, -2, -2};
  const auto s = CosineScoresSerial(q, m, 3);
  EXPECT_NEAR(s[0], 8.0 / 9.0, 1e-12);
  EXPECT_TRUE(std::isnan(s[1]));
  EXPECT_DOUBLE_EQ(s[2], -1.0);
}

TEST(ProjectRows, SerialMatchesOmpAndNaiveProduct) {
  const std::size_t n = 37, d_in = 11, d_out = 5;
  const auto x = Random(n * d_in, 3);
  const auto w = Random(d_out * d_in, 4);
  std::vector<float> serial(n * d_out), omp(n * d_out);
  ProjectRowsSerial(x, n, w, d_out, d_in, serial);
  ProjectRowsOmp(x, n, w, d_out, d_in, omp);
  EXPECT_TRUE(BitEqual(serial, omp));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < d_out; ++o) {
      double acc = 0;
      for (std::size_t k = 0; k < d_in; ++k) acc += double{w[o * d_in + k]} * x[i * d_in + k];
      EXPECT_NEAR(serial[i * d_out + o], acc, 1e-4);
    }
  }
}

TEST(ProjectRowsLora, SerialMatchesOmpAndMergedProduct) {
  const std::size_t n = 23, d_in = 9, d_out = 6, r = 3;
  const auto x = Random(n * d_in, 5);
  const auto w = Random(d_out * d_in, 6);
  const auto a = Random(r * d_in, 7);
  const auto b = Random(d_out * r, 8);
  const LowRank lr{a, b, r, 32.0 / 3.0};
  std::vector<float> serial(n * d_out), omp(n * d_out);
  ProjectRowsLoraSerial(x, n, w, d_out, d_in, lr, serial);
  ProjectRowsLoraOmp(x, n, w, d_out, d_in, lr, omp);
  EXPECT_TRUE(BitEqual(serial, omp));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < d_out; ++o) {
      double acc = 0;
      for (std::size_t k = 0; k < d_in; ++k) {
        double delta = 0;
        for (std::size_t j = 0; j < r; ++j) delta += double{b[o * r + j]} * a[j * d_in + k];
        acc += (w[o * d_in + k] + lr.scale * delta) * x[i * d_in + k];
      }
      EXPECT_NEAR(serial[i * d_out + o], acc, 1e-3 * (1 + std::abs(acc)));
    }
  }
}

TEST(ProjectRowsLora, ZeroBReducesToFrozenProjection) {
  const std::size_t n = 8, d_in = 5, d_out = 4, r = 2;
  const auto x = Random(n * d_in, 9);
  const auto w = Random(d_out * d_in, 10);
  const auto a = Random(r * d_in, 11);
  const std::vector<float> b(d_out * r, 0.0f);
  std::vector<float> frozen(n * d_out), adapted(n * d_out);
  ProjectRowsSerial(x, n, w, d_out, d_in, frozen);
  ProjectRowsLoraSerial(x, n, w, d_out, d_in, {a, b, r, 16.0}, adapted);
  EXPECT_TRUE(BitEqual(frozen, adapted));
}

TEST(MaxThreads, Positive) { EXPECT_GE(MaxThreads(), 1); }

}  // namespace
}  // namespace artcontext::kernels
