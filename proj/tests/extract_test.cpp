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

#include <fstream>
#include <random>

#include "artcontext/extract.hpp"
#include "artcontext/io.hpp"
#include "artcontext/text.hpp"
#include "support.hpp"

namespace artcontext::extract {
namespace {

using testing::TempDir;

std::string Squeeze(std::string_view s) {
  std::string out;
  for (const char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

TEST(AcceptDocument, StrictSizeBoundary) {
  DocumentText d;
  d.byte_size = 10'485'760;
  EXPECT_FALSE(AcceptDocument(d));
  d.byte_size = 10'485'759;
  EXPECT_TRUE(AcceptDocument(d));
  d.byte_size = 0;
  EXPECT_TRUE(AcceptDocument(d));
  d.byte_size = 100;
  EXPECT_FALSE(AcceptDocument(d, 100));
}

TEST(LoadDocument, RepairsInvalidUtf8) {
  TempDir dir;
  std::ofstream(dir / "W1.md", std::ios::binary) << "Caf\xC3\xA9 ok. Bad \xFF byte.";
  const auto doc = LoadDocument(dir / "W1.md", "W1");
  EXPECT_EQ(doc.utf8_replacements, 1u);
  EXPECT_NE(doc.markdown.find("Caf\xC3\xA9"), std::string::npos);
  EXPECT_NE(doc.markdown.find("\xEF\xBF\xBD"), std::string::npos);
  EXPECT_EQ(doc.byte_size, 21u);
}

TEST(StripNonTextual, HeadingIsDropped) {
  EXPECT_EQ(StripNonTextual("# Title\n\nBody text."), "Body text.");
}

TEST(StripNonTextual, Empty) { EXPECT_EQ(StripNonTextual(""), ""); }

TEST(StripNonTextual, ImageAndTableRemoved) {
  EXPECT_EQ(StripNonTextual("A ![fig](u.png) B | c | d |"), "A B");
}

TEST(StripNonTextual, LinksKeepTheirText) {
  const std::string out = StripNonTextual("See [the catalogue](https://x.org/c) and https://y.org now.");
  EXPECT_EQ(out.find("https"), std::string::npos);
  EXPECT_NE(out.find("the catalogue"), std::string::npos);
}

TEST(StripNonTextual, CodeBlocksAndEmphasis) {
  const std::string out = StripNonTextual("```\nint x;\n```\n\nA *bold* claim [12].");
  EXPECT_EQ(out.find("int x"), std::string::npos);
  EXPECT_EQ(out.find('*'), std::string::npos);
  EXPECT_NE(out.find("bold"), std::string::npos);
  EXPECT_EQ(out.find("[12]"), std::string::npos);
}

TEST(StripNonTextual, Idempotent) {
  const std::string once = StripNonTextual("# H\n\nA ![i](x) **b** c.\n\n| t |\n|---|\n\nD e.");
  EXPECT_EQ(StripNonTextual(once), once);
}

TEST(RuleSegmenter, TwoSimpleSentences) {
  EXPECT_EQ(RuleSegmenter().Segment("It rains. He paints."),
            (std::vector<std::string>{"It rains.", "He paints."}));
}

TEST(RuleSegmenter, AbbreviationBlocksSplit) {
  EXPECT_EQ(RuleSegmenter().Segment("Painted ca. 1523 in Venice."),
            (std::vector<std::string>{"Painted ca. 1523 in Venice."}));
  EXPECT_EQ(RuleSegmenter().Segment("Dr. Smith arrived. He sat."),
            (std::vector<std::string>{"Dr. Smith arrived.", "He sat."}));
}

TEST(RuleSegmenter, DecimalGuard) {
  EXPECT_EQ(RuleSegmenter().Segment("Room 3.4 holds it. Go."),
            (std::vector<std::string>{"Room 3.4 holds it.", "Go."}));
}

TEST(RuleSegmenter, InitialsDoNotSplit) {
  EXPECT_EQ(RuleSegmenter().Segment("J. M. W. Turner painted it. Then he left.").size(), 2u);
}

TEST(RuleSegmenter, EmptyAndWhitespace) {
  EXPECT_TRUE(RuleSegmenter().Segment("").empty());
  EXPECT_TRUE(RuleSegmenter().Segment("  \n\n ").empty());
}

TEST(RuleSegmenter, WithoutAbbreviationListSplitsAfterCa) {
  const RuleSegmenter bare{std::set<std::string>{}};
  EXPECT_EQ(bare.Segment("Made ca. Venice later.").size(), 2u);
}

TEST(RuleSegmenter, LosslessOnNonWhitespace) {
  const std::vector<std::string> words = {"The",  "painter", "e.g.", "Dr.", "3.5", "left.",
                                          "Why?", "Now!",    "ca.",  "St.", "Ivo", "and"};
  std::mt19937_64 rng(11);
  const RuleSegmenter seg;
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) {
      text += words[rng() % words.size()];
      text += (rng() % 5 == 0) ? "\n" : " ";
    }
    std::string joined;
    for (const auto& s : seg.Segment(text)) {
      EXPECT_FALSE(s.empty());
      EXPECT_EQ(s, text::Trim(s));
      joined += s;
    }
    EXPECT_EQ(Squeeze(joined), Squeeze(text)) << text;
  }
}

TEST(Abbreviations, ShippedFileMatchesBuiltInList) {
  const auto from_file = RuleSegmenter::FromFile(fs::path(ARTCONTEXT_DATA) / "abbreviations.txt");
  EXPECT_EQ(from_file.abbreviations(), DefaultAbbreviations());
  EXPECT_TRUE(DefaultAbbreviations().count("ca."));
  for (const auto& a : DefaultAbbreviations()) EXPECT_EQ(a.back(), '.');
}

TEST(BuildContexts, ShortCenterIsSkippedButServesAsNeighbor) {
  const auto units = BuildContexts("W1", {"A B C D.", "E F.", "G H I J."});
  ASSERT_EQ(units.size(), 2u);
  EXPECT_EQ(units[0].index, 0u);
  EXPECT_EQ(units[0].window_text, "A B C D. E F.");
  EXPECT_EQ(units[1].index, 2u);
  EXPECT_EQ(units[1].window_text, "E F. G H I J.");
  EXPECT_EQ(units[1].Id(), "W1#2");
  EXPECT_EQ(units[0].token_count, 4u);
}

TEST(BuildContexts, EmptyDocument) { EXPECT_TRUE(BuildContexts("W1", {}).empty()); }

TEST(BuildContexts, SingleSentenceWindowIsSentence) {
  const auto units = BuildContexts("W1", {"One two three four."});
  ASSERT_EQ(units.size(), 1u);
  EXPECT_EQ(units[0].window_text, units[0].sentence);
}

TEST(BuildContexts, EveryUnitMeetsTokenMinimum) {
  std::vector<std::string> sentences;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    std::string s;
    const int n = 1 + static_cast<int>(rng() % 7);
    for (int k = 0; k < n; ++k) s += (k ? " w" : "w") + std::to_string(k);
    sentences.push_back(s + ".");
  }
  const auto units = BuildContexts("W", sentences);
  std::size_t expected = 0;
  for (const auto& s : sentences) expected += text::SplitWhitespace(s).size() >= kMinTokens;
  EXPECT_EQ(units.size(), expected);
  for (const auto& u : units) {
    EXPECT_GE(u.token_count, kMinTokens);
    EXPECT_EQ(u.sentence, sentences[u.index]);
    EXPECT_NE(u.window_text.find(u.sentence), std::string::npos);
  }
}

TEST(ExtractDocument, OversizedDocumentYieldsNothing) {
  DocumentText d{"W1", "One two three four.", 200, 0};
  EXPECT_TRUE(ExtractDocument(d, RuleSegmenter(), {100, false}).empty());
  EXPECT_EQ(ExtractDocument(d, RuleSegmenter(), {201, false}).size(), 1u);
}

TEST(ExtractDocument, DedupDropsRepeatedWindows) {
  DocumentText d{"W1", "One two three four. One two three four. One two three four. One two three four.", 10, 0};
  EXPECT_EQ(ExtractDocument(d, RuleSegmenter(), {kDefaultMaxBytes, false}).size(), 4u);
  EXPECT_EQ(ExtractDocument(d, RuleSegmenter(), {kDefaultMaxBytes, true}).size(), 2u);
}

TEST(ExtractCorpus, DeterministicAndCountsMissing) {
  const fs::path corpus = testing::FixtureDir() / "corpus";
  const std::vector<Json> works = {
      {{"work_id", "W101"}, {"artist_id", "A5000000001"}, {"artist_name", "Vincent van Gogh"}},
      {{"work_id", "W105"}, {"artist_id", "A5000000001"}, {"artist_name", "Vincent van Gogh"}},
      {{"work_id", "W201"}, {"artist_id", "A5000000002"}, {"artist_name", "Rembrandt van Rijn"}},
  };
  ExtractStats s1, s2;
  const auto a = ExtractCorpus(corpus, works, RuleSegmenter(), {}, &s1);
  const auto b = ExtractCorpus(corpus, works, RuleSegmenter(), {}, &s2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(s1.documents_in, 3u);
  EXPECT_EQ(s1.documents_missing, 1u);
  EXPECT_EQ(s1.documents_accepted, 2u);
  EXPECT_EQ(s1.contexts, a.size());
  EXPECT_FALSE(a.empty());
}

TEST(ContextUnitJson, RoundTrip) {
  ContextUnit c{"W1", 3, "A b c d.", "Z. A b c d.", 4, {"A1"}, {"Titian"}};
  EXPECT_EQ(ContextFromJson(ToJson(c)), c);
}

}  // namespace
}  // namespace artcontext::extract
