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
#include <limits>
#include <random>

#include "artcontext/embed.hpp"
#include "artcontext/error.hpp"
#include "artcontext/io.hpp"
#include "support.hpp"

namespace artcontext::embed {
namespace {

using testing::TempDir;

double Cos(std::vector<float> u, std::vector<float> v) { return Cosine(u, v); }

TEST(Cosine, Examples) {
  EXPECT_DOUBLE_EQ(Cos({3, 4}, {3, 4}), 1.0);
  EXPECT_DOUBLE_EQ(Cos({1, 0}, {0, 1}), 0.0);
  EXPECT_NEAR(Cos({1, 2, 2}, {2, 1, 2}), 8.0 / 9.0, 1e-12);
}

TEST(Cosine, ZeroVectorAndDimMismatch) {
  try {
    Cos({0, 0}, {1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroVector);
  }
  try {
    Cos({1, 0, 0}, {1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimMismatch);
  }
}

TEST(Cosine, SymmetricBoundedAndScaleInvariant) {
  std::mt19937_64 rng(5);
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (int t = 0; t < 200; ++t) {
    std::vector<float> u(7), v(7);
    for (auto& x : u) x = n(rng);
    for (auto& x : v) x = n(rng);
    const double c = Cosine(u, v);
    EXPECT_EQ(c, Cosine(v, u));
    EXPECT_LE(c, 1.0);
    EXPECT_GE(c, -1.0);
    std::vector<float> scaled = u;
    for (auto& x : scaled) x *= 4.0f;
    EXPECT_NEAR(Cosine(scaled, v), c, 1e-9);
  }
}

TEST(ArgmaxSimilarity, ExactMatch) {
  EmbeddingMatrix m(2);
  m.Append("a", std::vector<float>{0, 1});
  m.Append("b", std::vector<float>{1, 0});
  m.Append("c", std::vector<float>{0.9f, 0.1f});
  const auto best = ArgmaxSimilarity(std::vector<float>{1, 0}, m);
  EXPECT_EQ(best.index, 1u);
  EXPECT_DOUBLE_EQ(best.score, 1.0);
}

TEST(ArgmaxSimilarity, TieGoesToLowestIndex) {
  EmbeddingMatrix m(2);
  m.Append("a", std::vector<float>{1, 0});
  m.Append("b", std::vector<float>{2, 0});
  EXPECT_EQ(ArgmaxSimilarity(std::vector<float>{1, 0}, m).index, 0u);
}

TEST(ArgmaxSimilarity, SkipsDegenerateRowsAndFailsWhenAllAre) {
  EmbeddingMatrix m(2);
  m.Append("z", std::vector<float>{0, 0});
  m.Append("a", std::vector<float>{0, 1});
  EXPECT_EQ(ArgmaxSimilarity(std::vector<float>{0, 1}, m).index, 1u);
  EmbeddingMatrix bad(2);
  bad.Append("z", std::vector<float>{0, 0});
  try {
    ArgmaxSimilarity(std::vector<float>{1, 0}, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAllDegenerate);
  }
  try {
    ArgmaxSimilarity(std::vector<float>{1, 0}, EmbeddingMatrix(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCandidates);
  }
}

TEST(ArgmaxSimilarity, MatchesBruteForce) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (int t = 0; t < 300; ++t) {
    EmbeddingMatrix m(2);
    for (int i = 0; i < 5; ++i) {
      m.Append("r" + std::to_string(i), std::vector<float>{u(rng), u(rng)});
    }
    const std::vector<float> q{1, 1};
    std::size_t best = 0;
    double best_score = -2.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const auto r = m.row(i);
      const double c = (double{r[0]} + r[1]) /
                       (std::sqrt(2.0) * std::hypot(double{r[0]}, double{r[1]}));
      if (c > best_score + 1e-12) {
        best_score = c;
        best = i;
      }
    }
    const auto got = ArgmaxSimilarity(q, m);
    EXPECT_EQ(got.index, best);
    EXPECT_NEAR(got.score, best_score, 1e-9);
  }
}

bool BitEqual(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(a[i]) != std::bit_cast<std::uint32_t>(b[i])) return false;
  }
  return true;
}

TEST(EmbFormat, RoundTripIsBitExact) {
  EmbeddingMatrix m(3);
  m.Append("first", std::vector<float>{1.5f, -0.0f, std::numeric_limits<float>::denorm_min()});
  m.Append("sécond", std::vector<float>{-2.25f, 3e-38f, std::numeric_limits<float>::max()});
  TempDir dir;
  SaveMatrix(m, dir / "m.emb");
  const auto back = LoadMatrix(dir / "m.emb");
  EXPECT_EQ(back.ids, m.ids);
  EXPECT_EQ(back.dim, m.dim);
  EXPECT_TRUE(BitEqual(back.data, m.data));
}

TEST(EmbFormat, EmptyMatrixIsHeaderOnly) {
  const std::string bytes = EncodeMatrix(EmbeddingMatrix(5));
  EXPECT_EQ(bytes.size(), kEmbHeaderBytes);
  EXPECT_EQ(bytes.size(), 24u);
  const auto back = DecodeMatrix(bytes);
  EXPECT_EQ(back.rows(), 0u);
  EXPECT_EQ(back.dim, 5u);
}

TEST(EmbFormat, ExactSizeFromLayout) {
  EmbeddingMatrix m(2);
  m.Append("ab", std::vector<float>{1, 2});
  m.Append("xyz", std::vector<float>{3, 4});
  EXPECT_EQ(EncodeMatrix(m).size(), 24u + (4 + 2) + (4 + 3) + 4 * 4);
}

TEST(EmbFormat, CorruptMagicReportsOffsetZero) {
  EmbeddingMatrix m(2);
  m.Append("a", std::vector<float>{1, 2});
  std::string bytes = EncodeMatrix(m);
  bytes[0] = 'X';
  try {
    DecodeMatrix(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
}

TEST(EmbFormat, VersionAndTruncation) {
  EmbeddingMatrix m(2);
  m.Append("a", std::vector<float>{1, 2});
  std::string bytes = EncodeMatrix(m);
  std::string future = bytes;
  future[4] = 9;
  try {
    DecodeMatrix(future);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedVersion);
  }
  EXPECT_THROW(DecodeMatrix(bytes.substr(0, bytes.size() - 1)), FormatError);
  EXPECT_THROW(DecodeMatrix(bytes + "x"), FormatError);
  EXPECT_THROW(DecodeMatrix(bytes.substr(0, 10)), FormatError);
}

TEST(EmbeddingMatrix, RejectsDuplicateIdsAndWrongWidth) {
  EmbeddingMatrix m(2);
  m.Append("a", std::vector<float>{1, 2});
  EXPECT_THROW(m.Append("b", std::vector<float>{1, 2, 3}), Error);
  m.ids.push_back("a");
  m.data.insert(m.data.end(), {3, 4});
  EXPECT_THROW(m.Validate(), Error);
}

std::vector<extract::ContextUnit> MakeContexts(std::size_t n) {
  std::vector<extract::ContextUnit> out;
  for (std::size_t i = 0; i < n; ++i) {
    extract::ContextUnit c;
    c.work_id = "W" + std::to_string(i / 10);
    c.index = i % 10;
    c.sentence = "sentence number " + std::to_string(i) + " here.";
    c.window_text = "window " + c.sentence;
    out.push_back(c);
  }
  return out;
}

TEST(EmbedContexts, DeterministicUnitRows) {
  HashEmbeddingProvider p(16);
  const auto a = EmbedContexts(p, MakeContexts(3));
  const auto b = EmbedContexts(p, MakeContexts(3));
  ASSERT_EQ(a.rows(), 3u);
  EXPECT_EQ(a.dim, 16u);
  EXPECT_EQ(EncodeMatrix(a), EncodeMatrix(b));
  EXPECT_EQ(a.ids[0], "W0#0");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0;
    for (const float x : a.row(i)) s += double{x} * x;
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(EmbedContexts, EmptyInput) {
  HashEmbeddingProvider p(8);
  const auto m = EmbedContexts(p, {});
  EXPECT_EQ(m.rows(), 0u);
  EXPECT_EQ(EncodeMatrix(m).size(), kEmbHeaderBytes);
}

TEST(EmbedContexts, BatchSizeDoesNotChangeBytes) {
  HashEmbeddingProvider p(32);
  const auto contexts = MakeContexts(130);
  EXPECT_EQ(EncodeMatrix(EmbedContexts(p, contexts, 64)),
            EncodeMatrix(EmbedContexts(p, contexts, 130)));
  EXPECT_EQ(EncodeMatrix(EmbedContexts(p, contexts, 1)),
            EncodeMatrix(EmbedContexts(p, contexts, 130)));
  EXPECT_THROW(EmbedContexts(p, contexts, 0), Error);
}

TEST(HashUnitVector, SameTextSameVector) {
  EXPECT_EQ(HashUnitVector("a painting", 12), HashUnitVector("a painting", 12));
  EXPECT_NE(HashUnitVector("a painting", 12), HashUnitVector("a drawing", 12));
}

TEST(FileEmbeddingProvider, LooksUpRowsById) {
  EmbeddingMatrix m(2);
  m.Append("x", std::vector<float>{1, 2});
  m.Append("y", std::vector<float>{3, 4});
  TempDir dir;
  SaveMatrix(m, dir / "v.emb");
  auto provider = MakeProvider("file:" + (dir / "v.emb").string());
  EXPECT_EQ(provider->dim(), 2u);
  const std::vector<TextItem> items = {{"y", "ignored"}, {"x", ""}};
  const auto out = provider->Embed(items);
  EXPECT_EQ(out.ids, (std::vector<std::string>{"y", "x"}));
  EXPECT_EQ(out.data, (std::vector<float>{3, 4, 1, 2}));
  const std::vector<TextItem> missing = {{"nope", ""}};
  EXPECT_THROW(provider->Embed(missing), Error);
}

TEST(MakeProvider, Specs) {
  EXPECT_EQ(MakeProvider("test")->dim(), 64u);
  EXPECT_EQ(MakeProvider("test:12")->dim(), 12u);
  EXPECT_THROW(MakeProvider("test:0"), Error);
  EXPECT_THROW(MakeProvider("sbert"), Error);
}

}  // namespace
}  // namespace artcontext::embed
