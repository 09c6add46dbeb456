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

#ifndef ARTCONTEXT_EXTRACT_HPP_
#define ARTCONTEXT_EXTRACT_HPP_

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "artcontext/io.hpp"

// Turns converted article Markdown into retrievable context windows.
namespace artcontext::extract {

inline constexpr std::uint64_t kDefaultMaxBytes = 10ull * 1024 * 1024;
inline constexpr std::size_t kMinTokens = 4;

struct DocumentText {
  std::string work_id;
  std::string markdown;
  std::uint64_t byte_size = 0;
  std::size_t utf8_replacements = 0;
};

struct ContextUnit {
  std::string work_id;
  std::size_t index = 0;
  std::string sentence;
  std::string window_text;
  std::size_t token_count = 0;
  // Artists whose harvest produced this work (usually one).
  std::vector<std::string> artist_ids;
  std::vector<std::string> artist_names;

  std::string Id() const { return work_id + "#" + std::to_string(index); }
  bool operator==(const ContextUnit&) const = default;
};

Json ToJson(const ContextUnit& c);
ContextUnit ContextFromJson(const Json& j);

// Reads a document from disk, recording its size and repairing bad UTF-8.
DocumentText LoadDocument(const fs::path& path, std::string work_id);

bool AcceptDocument(const DocumentText& doc,
                    std::uint64_t max_bytes = kDefaultMaxBytes);

// Removes code, images, tables, URLs, headings, emphasis, citation markers
// and rules. Paragraphs come back separated by one blank line.
std::string StripNonTextual(std::string_view markdown);

class SentenceSegmenter {
 public:
  virtual ~SentenceSegmenter() = default;
  virtual std::vector<std::string> Segment(std::string_view text) const = 0;
};

// Splits at . ! ? followed by whitespace and an uppercase letter (or end of
// text), except after listed abbreviations, single-letter initials, and
// inside decimals.
class RuleSegmenter : public SentenceSegmenter {
 public:
  RuleSegmenter();
  explicit RuleSegmenter(std::set<std::string> abbreviations);
  static RuleSegmenter FromFile(const fs::path& path);

  std::vector<std::string> Segment(std::string_view text) const override;
  const std::set<std::string>& abbreviations() const { return abbrevs_; }

 private:
  bool IsAbbreviation(std::string_view word) const;
  std::set<std::string> abbrevs_;
};

inline constexpr int kAbbreviationListVersion = 1;
// Built-in list; lower-case, each entry ends with '.'.
const std::set<std::string>& DefaultAbbreviations();

std::vector<ContextUnit> BuildContexts(std::string_view work_id,
                                       const std::vector<std::string>& sentences);

struct ExtractOptions {
  std::uint64_t max_bytes = kDefaultMaxBytes;
  bool dedup = false;
};

// Strip, segment (per paragraph) and window one accepted document.
std::vector<ContextUnit> ExtractDocument(const DocumentText& doc,
                                         const SentenceSegmenter& segmenter,
                                         const ExtractOptions& options = {});

struct ExtractStats {
  std::size_t documents_in = 0;
  std::size_t documents_accepted = 0;
  std::size_t documents_rejected_size = 0;
  std::size_t documents_missing = 0;
  std::size_t contexts = 0;
  std::size_t utf8_replacements = 0;
  Json ToJson() const;
};

// Runs extraction over <corpus>/<work_id>.md for each work in `works`
// (harvest JSONL rows). With an empty list every .md in the directory is
// used. Output is ordered by work_id.
std::vector<ContextUnit> ExtractCorpus(const fs::path& corpus_dir,
                                       const std::vector<Json>& works,
                                       const SentenceSegmenter& segmenter,
                                       const ExtractOptions& options,
                                       ExtractStats* stats);

}  // namespace artcontext::extract

#endif  // ARTCONTEXT_EXTRACT_HPP_
