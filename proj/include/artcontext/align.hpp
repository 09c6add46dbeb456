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

#ifndef ARTCONTEXT_ALIGN_HPP_
#define ARTCONTEXT_ALIGN_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "artcontext/embed.hpp"
#include "artcontext/extract.hpp"
#include "artcontext/io.hpp"

// Metadata-guided alignment of paintings to artist-scoped contexts.
namespace artcontext::align {

struct PaintingRecord {
  std::string qid;
  std::string title;
  std::string creator_name;
  std::string creator_qid;
  std::optional<int> year;
  std::vector<std::string> depicts;
  std::optional<std::string> movement;
  std::int64_t link_count = 0;
  std::string image_ref;
};

PaintingRecord PaintingFromJson(const Json& j);
Json ToJson(const PaintingRecord& p);

struct AlignedPair {
  std::string qid;
  std::string context_id;
  std::string sentence;
  double similarity = 0.0;
  std::string label_text;
  std::string image_ref;
};

Json ToJson(const AlignedPair& p);
AlignedPair PairFromJson(const Json& j);

inline constexpr std::string_view kLabelSeparator = " — ";

// "[Title] is a [Year] painting by [Creator] depicting [a, b, ...]", with the
// year and depicting clauses dropped when absent.
std::string RenderQuery(const PaintingRecord& p);

// RenderQuery(p) + kLabelSeparator + sentence; the separator is omitted for an empty
// sentence.
std::string BuildLabel(const PaintingRecord& p, std::string_view sentence);

// Contexts of one artist and their vectors, row-aligned.
struct ArtistContexts {
  std::vector<extract::ContextUnit> units;
  embed::EmbeddingMatrix vectors;
};

struct AlignedQuery {
  AlignedPair pair;
  std::vector<float> query_vector;
};

// Embeds the painting's rendered query and picks the most similar context.
// Throws NoContexts when the artist has none.
AlignedQuery AlignPainting(const PaintingRecord& p, const ArtistContexts& contexts,
                           embed::EmbeddingProvider& provider);

struct Unmatched {
  std::string qid;
  std::string reason;
};

struct AlignOptions {
  std::optional<double> min_similarity;
};

struct AlignmentResult {
  std::vector<AlignedPair> pairs;  // sorted by qid
  std::vector<Unmatched> unmatched;
  embed::EmbeddingMatrix query_vectors;  // keyed by qid
  std::size_t paintings_in = 0;
};

// Groups contexts by artist name (NFC + case fold) and aligns every painting
// whose creator matches a group.
AlignmentResult AlignAll(const std::vector<PaintingRecord>& paintings,
                         const std::vector<extract::ContextUnit>& contexts,
                         const embed::EmbeddingMatrix& context_vectors,
                         embed::EmbeddingProvider& provider,
                         const AlignOptions& options = {});

// aligned_pairs.jsonl, unmatched.jsonl and queries.emb.
void WriteAlignment(const AlignmentResult& result, const fs::path& out_dir);

}  // namespace artcontext::align

#endif  // ARTCONTEXT_ALIGN_HPP_
