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

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "artcontext/error.hpp"
#include "artcontext/extract.hpp"
#include "artcontext/text.hpp"

namespace artcontext::extract {

Json ToJson(const ContextUnit& c) {
  return Json{{"work_id", c.work_id},
              {"index", c.index},
              {"sentence", c.sentence},
              {"window_text", c.window_text},
              {"token_count", c.token_count},
              {"artist_ids", c.artist_ids},
              {"artist_names", c.artist_names}};
}

ContextUnit ContextFromJson(const Json& j) {
  ContextUnit c;
  c.work_id = j.at("work_id").get<std::string>();
  c.index = j.at("index").get<std::size_t>();
  c.sentence = j.at("sentence").get<std::string>();
  c.window_text = j.at("window_text").get<std::string>();
  c.token_count = j.at("token_count").get<std::size_t>();
  if (j.contains("artist_ids")) {
    c.artist_ids = j.at("artist_ids").get<std::vector<std::string>>();
  }
  if (j.contains("artist_names")) {
    c.artist_names = j.at("artist_names").get<std::vector<std::string>>();
  }
  return c;
}

DocumentText LoadDocument(const fs::path& path, std::string work_id) {
  const std::string raw = ReadFile(path);
  DocumentText doc;
  doc.work_id = std::move(work_id);
  doc.byte_size = raw.size();
  auto repaired = text::RepairUtf8(raw);
  doc.markdown = std::move(repaired.text);
  doc.utf8_replacements = repaired.replacements;
  return doc;
}

bool AcceptDocument(const DocumentText& doc, std::uint64_t max_bytes) {
  return doc.byte_size < max_bytes;
}

std::vector<ContextUnit> BuildContexts(std::string_view work_id,
                                       const std::vector<std::string>& sentences) {
  std::vector<ContextUnit> out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const std::size_t tokens = text::SplitWhitespace(sentences[i]).size();
    if (tokens < kMinTokens) continue;
    ContextUnit c;
    c.work_id = std::string(work_id);
    c.index = i;
    c.sentence = sentences[i];
    c.token_count = tokens;
    if (i > 0) c.window_text = sentences[i - 1] + " ";
    c.window_text += sentences[i];
    if (i + 1 < sentences.size()) c.window_text += " " + sentences[i + 1];
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<ContextUnit> ExtractDocument(const DocumentText& doc,
                                         const SentenceSegmenter& segmenter,
                                         const ExtractOptions& options) {
  if (!AcceptDocument(doc, options.max_bytes)) return {};
  const std::string prose = StripNonTextual(doc.markdown);
  std::vector<std::string> sentences;
  std::size_t start = 0;
  while (start <= prose.size()) {
    std::size_t end = prose.find("\n\n", start);
    if (end == std::string::npos) end = prose.size();
    for (auto& s : segmenter.Segment(std::string_view(prose).substr(start, end - start))) {
      sentences.push_back(std::move(s));
    }
    start = end + 2;
  }
  auto units = BuildContexts(doc.work_id, sentences);
  if (options.dedup) {
    std::set<std::string> seen;
    std::erase_if(units, [&](const ContextUnit& c) {
      return !seen.insert(c.window_text).second;
    });
  }
  return units;
}

Json ExtractStats::ToJson() const {
  return Json{{"documents_in", documents_in},
              {"documents_accepted", documents_accepted},
              {"documents_rejected_size", documents_rejected_size},
              {"documents_missing", documents_missing},
              {"contexts", contexts},
              {"utf8_replacements", utf8_replacements},
              {"size_gate_applies_to", "markdown input file"}};
}

std::vector<ContextUnit> ExtractCorpus(const fs::path& corpus_dir,
                                       const std::vector<Json>& works,
                                       const SentenceSegmenter& segmenter,
                                       const ExtractOptions& options,
                                       ExtractStats* stats) {
  struct Owners {
    std::vector<std::string> ids;
    std::vector<std::string> names;
  };
  std::map<std::string, Owners> docs;
  if (works.empty()) {
    if (!fs::is_directory(corpus_dir)) {
      throw Error(ErrorCode::kIO, "corpus directory not found: " +
                                      corpus_dir.string());
    }
    for (const auto& entry : fs::directory_iterator(corpus_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".md") {
        docs[entry.path().stem().string()];
      }
    }
  } else {
    for (const auto& w : works) {
      auto& owners = docs[w.at("work_id").get<std::string>()];
      const std::string id = w.value("artist_id", "");
      if (!id.empty() &&
          std::find(owners.ids.begin(), owners.ids.end(), id) == owners.ids.end()) {
        owners.ids.push_back(id);
        owners.names.push_back(w.value("artist_name", ""));
      }
    }
  }

  ExtractStats local;
  std::vector<ContextUnit> out;
  for (const auto& [work_id, owners] : docs) {
    ++local.documents_in;
    const fs::path path = corpus_dir / (work_id + ".md");
    if (!fs::exists(path)) {
      ++local.documents_missing;
      continue;
    }
    // Gate on the on-disk size before reading oversized files into memory.
    DocumentText probe;
    probe.byte_size = fs::file_size(path);
    if (!AcceptDocument(probe, options.max_bytes)) {
      ++local.documents_rejected_size;
      continue;
    }
    const DocumentText doc = LoadDocument(path, work_id);
    local.utf8_replacements += doc.utf8_replacements;
    ++local.documents_accepted;
    for (auto& unit : ExtractDocument(doc, segmenter, options)) {
      unit.artist_ids = owners.ids;
      unit.artist_names = owners.names;
      out.push_back(std::move(unit));
    }
  }
  local.contexts = out.size();
  if (stats != nullptr) *stats = local;
  return out;
}

}  // namespace artcontext::extract
