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

#include <random>

#include "artcontext/align.hpp"
#include "artcontext/error.hpp"
#include "artcontext/io.hpp"
#include "support.hpp"

namespace artcontext::align {
namespace {

using testing::TempDir;

const char kCafeTerrace[] =
    "Café Terrace at Night is a 1888 painting by Vincent van Gogh depicting platform, "
    "gas burner, La Cité, lamp, sett, Arles, coffeehouse, chair, table, tree, night, sky, "
    "star, human";

PaintingRecord CafeTerrace() {
  for (const auto& j : ReadJsonl(testing::FixtureDir() / "paintings.jsonl")) {
    if (j.at("qid") == "Q9000001") return PaintingFromJson(j);
  }
  throw std::runtime_error("fixture missing Q9000001");
}

PaintingRecord Minimal(std::string title, std::string creator) {
  PaintingRecord p;
  p.qid = "Q1";
  p.title = std::move(title);
  p.creator_name = std::move(creator);
  return p;
}

TEST(RenderQuery, CafeTerraceRecord) { EXPECT_EQ(RenderQuery(CafeTerrace()), kCafeTerrace); }

TEST(RenderQuery, OptionalClausesDropped) {
  EXPECT_EQ(RenderQuery(Minimal("X", "Y")), "X is a painting by Y");
  PaintingRecord p = Minimal("X", "Y");
  p.year = 1700;
  p.depicts = {"dog"};
  EXPECT_EQ(RenderQuery(p), "X is a 1700 painting by Y depicting dog");
  p.year.reset();
  p.depicts = {"b", "a"};
  EXPECT_EQ(RenderQuery(p), "X is a painting by Y depicting b, a");
}

TEST(BuildLabel, Examples) {
  EXPECT_EQ(BuildLabel(CafeTerrace(), "Scholars note the star field."),
            std::string(kCafeTerrace) + " — Scholars note the star field.");
  EXPECT_EQ(BuildLabel(Minimal("X", "Y"), "S."), "X is a painting by Y — S.");
  EXPECT_EQ(BuildLabel(Minimal("X", "Y"), ""), "X is a painting by Y");
}

TEST(PaintingRecord, JsonRoundTrip) {
  const auto p = CafeTerrace();
  EXPECT_EQ(ToJson(PaintingFromJson(ToJson(p))), ToJson(p));
}

extract::ContextUnit Unit(std::string work, std::size_t index, std::string window,
                          std::string artist) {
  extract::ContextUnit c;
  c.work_id = std::move(work);
  c.index = index;
  c.sentence = window;
  c.window_text = std::move(window);
  c.token_count = 4;
  c.artist_ids = {"A"};
  c.artist_names = {std::move(artist)};
  return c;
}

ArtistContexts Group(const std::vector<extract::ContextUnit>& units,
                     embed::EmbeddingProvider& provider) {
  ArtistContexts g;
  g.units = units;
  g.vectors = embed::EmbedContexts(provider, units);
  return g;
}

TEST(AlignPainting, IdenticalTextSelectedWithSimilarityOne) {
  embed::HashEmbeddingProvider provider(32);
  const PaintingRecord p = Minimal("Sunflowers", "Vincent van Gogh");
  const auto g = Group({Unit("W1", 0, "Some other text here.", "Vincent van Gogh"),
                        Unit("W1", 1, RenderQuery(p), "Vincent van Gogh"),
                        Unit("W2", 0, "Unrelated words in a row.", "Vincent van Gogh")},
                       provider);
  const auto aligned = AlignPainting(p, g, provider);
  EXPECT_EQ(aligned.pair.context_id, "W1#1");
  EXPECT_NEAR(aligned.pair.similarity, 1.0, 1e-6);
  EXPECT_EQ(aligned.pair.label_text, RenderQuery(p) + " — " + RenderQuery(p));
}

TEST(AlignPainting, NoContexts) {
  embed::HashEmbeddingProvider provider(8);
  try {
    AlignPainting(Minimal("X", "Y"), ArtistContexts{}, provider);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoContexts);
  }
}

TEST(AlignPainting, MatchesBruteForceScan) {
  embed::HashEmbeddingProvider provider(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<extract::ContextUnit> units;
    for (std::size_t i = 0; i < 10; ++i) {
      units.push_back(Unit("W" + std::to_string(trial), i,
                           "context " + std::to_string(trial * 10 + i) + " text here.", "Y"));
    }
    const auto g = Group(units, provider);
    PaintingRecord p = Minimal("Painting " + std::to_string(trial), "Y");
    const auto q = embed::HashUnitVector(RenderQuery(p), 6);
    std::size_t best = 0;
    double best_score = -2;
    for (std::size_t i = 0; i < g.vectors.rows(); ++i) {
      const double c = embed::Cosine(q, g.vectors.row(i));
      if (c > best_score) {
        best_score = c;
        best = i;
      }
    }
    const auto aligned = AlignPainting(p, g, provider);
    EXPECT_EQ(aligned.pair.context_id, units[best].Id());
    EXPECT_DOUBLE_EQ(aligned.pair.similarity, best_score);
  }
}

TEST(AlignAll, OnePairPerPaintingAndUnmatchedReasons) {
  embed::HashEmbeddingProvider provider(16);
  const std::vector<extract::ContextUnit> units = {
      Unit("W1", 0, "A painter of the south.", "Vincent van Gogh"),
      Unit("W1", 1, "Night scenes with stars.", "Vincent van Gogh"),
      Unit("W2", 0, "Portraits in dark tones.", "Rembrandt van Rijn"),
  };
  const auto vectors = embed::EmbedContexts(provider, units);
  std::vector<PaintingRecord> paintings = {Minimal("B", "vincent VAN gogh"),
                                           Minimal("A", "Rembrandt van Rijn"),
                                           Minimal("C", "Johannes Vermeer"),
                                           Minimal("D", "Vincent van Gogh")};
  paintings[0].qid = "Q3";
  paintings[1].qid = "Q1";
  paintings[2].qid = "Q2";
  paintings[3].qid = "Q3";
  const auto r = AlignAll(paintings, units, vectors, provider);
  EXPECT_EQ(r.paintings_in, 4u);
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.pairs[0].qid, "Q1");
  EXPECT_EQ(r.pairs[0].context_id, "W2#0");
  EXPECT_EQ(r.pairs[1].qid, "Q3");
  EXPECT_EQ(r.pairs[1].context_id.substr(0, 3), "W1#");
  ASSERT_EQ(r.unmatched.size(), 2u);
  EXPECT_EQ(r.unmatched[0].qid, "Q2");
  EXPECT_EQ(r.unmatched[0].reason, "no_contexts");
  EXPECT_EQ(r.unmatched[1].reason, "duplicate_qid");
  EXPECT_EQ(r.query_vectors.ids, (std::vector<std::string>{"Q1", "Q3"}));
  EXPECT_EQ(r.pairs.size() + r.unmatched.size(), r.paintings_in);
}

TEST(AlignAll, MinSimilarityMovesPairsToUnmatched) {
  embed::HashEmbeddingProvider provider(16);
  const std::vector<extract::ContextUnit> units = {Unit("W1", 0, "Words words words words.", "Y")};
  const auto vectors = embed::EmbedContexts(provider, units);
  const auto r = AlignAll({Minimal("X", "Y")}, units, vectors, provider, {1.01});
  EXPECT_TRUE(r.pairs.empty());
  ASSERT_EQ(r.unmatched.size(), 1u);
  EXPECT_EQ(r.unmatched[0].reason, "below_min_sim");
}

TEST(AlignAll, DeterministicOutputFiles) {
  embed::HashEmbeddingProvider provider(16);
  const std::vector<extract::ContextUnit> units = {
      Unit("W1", 0, "A painter of the south.", "Y"), Unit("W1", 1, "Night scenes.", "Y")};
  const auto vectors = embed::EmbedContexts(provider, units);
  const std::vector<PaintingRecord> paintings = {Minimal("X", "Y")};
  TempDir a, b;
  WriteAlignment(AlignAll(paintings, units, vectors, provider), a.path());
  WriteAlignment(AlignAll(paintings, units, vectors, provider), b.path());
  for (const char* f : {"aligned_pairs.jsonl", "unmatched.jsonl", "queries.emb"}) {
    EXPECT_EQ(ReadFile(a / f), ReadFile(b / f)) << f;
  }
}

}  // namespace
}  // namespace artcontext::align
