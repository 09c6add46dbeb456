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

#include <sstream>

#include "artcontext/error.hpp"
#include "artcontext/extract.hpp"
#include "artcontext/text.hpp"

namespace artcontext::extract {
namespace {

bool IsTerminal(char c) { return c == '.' || c == '!' || c == '?'; }

// Closing quotes and brackets that may trail a sentence terminator.
std::size_t CloserLength(std::string_view s, std::size_t i) {
  if (i >= s.size()) return 0;
  const char c = s[i];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  for (const std::string_view closer : {"”", "’", "»"}) {
    if (s.substr(i, closer.size()) == closer) return closer.size();
  }
  return 0;
}

std::size_t OpenerLength(std::string_view s, std::size_t i) {
  if (i >= s.size()) return 0;
  const char c = s[i];
  if (c == '"' || c == '\'' || c == '(' || c == '[') return 1;
  for (const std::string_view opener : {"“", "‘", "«"}) {
    if (s.substr(i, opener.size()) == opener) return opener.size();
  }
  return 0;
}

}  // namespace

const std::set<std::string>& DefaultAbbreviations() {
  // Version kAbbreviationListVersion; data/abbreviations.txt mirrors it.
  static const std::set<std::string> kList = {
      "al.",    "approx.", "b.",    "c.",     "ca.",   "capt.", "cat.",
      "cf.",    "ch.",     "chap.", "cit.",   "co.",   "col.",  "corp.",
      "d.",     "dept.",   "dr.",   "e.g.",   "ed.",   "eds.",  "esp.",
      "fig.",   "figs.",   "fl.",   "fol.",   "fols.", "gen.",  "gov.",
      "hon.",   "i.e.",    "ibid.", "ill.",   "inc.",  "inv.",  "jr.",
      "lt.",    "ltd.",    "mr.",   "mrs.",   "ms.",   "mss.",  "mt.",
      "no.",    "nos.",    "op.",   "p.",     "pl.",   "pp.",   "pres.",
      "prof.",  "repr.",   "rev.",  "sec.",   "sgt.",  "sr.",   "st.",
      "ste.",   "trans.",  "univ.", "viz.",   "vol.",  "vols.", "vs.",
      "jan.",   "feb.",    "mar.",  "apr.",   "jun.",  "jul.",  "aug.",
      "sep.",   "sept.",   "oct.",  "nov.",   "dec.",
  };
  return kList;
}

RuleSegmenter::RuleSegmenter() : abbrevs_(DefaultAbbreviations()) {}

RuleSegmenter::RuleSegmenter(std::set<std::string> abbreviations)
    : abbrevs_(std::move(abbreviations)) {}

RuleSegmenter RuleSegmenter::FromFile(const fs::path& path) {
  std::set<std::string> list;
  std::istringstream in(ReadFile(path));
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = text::Trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.back() != '.') {
      throw Error(ErrorCode::kFormat,
                  path.string() + ": abbreviation must end with '.': " + t);
    }
    list.insert(text::ToLowerAscii(t));
  }
  return RuleSegmenter(std::move(list));
}

bool RuleSegmenter::IsAbbreviation(std::string_view word) const {
  while (!word.empty()) {
    const std::size_t n = OpenerLength(word, 0);
    if (n == 0) break;
    word.remove_prefix(n);
  }
  if (abbrevs_.count(text::ToLowerAscii(word)) != 0) return true;
  // Single-letter initial such as "J." or "É.".
  std::size_t pos = 0;
  const char32_t cp = text::DecodeAt(word, pos);
  return pos + 1 == word.size() && word.back() == '.' && text::IsAlpha(cp);
}

std::vector<std::string> RuleSegmenter::Segment(std::string_view text) const {
  std::vector<std::string> out;
  auto emit = [&](std::size_t from, std::size_t to) {
    std::string s = text::Trim(text.substr(from, to - from));
    if (!s.empty()) out.push_back(std::move(s));
  };

  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!IsTerminal(text[i])) {
      ++i;
      continue;
    }
    const std::size_t term = i;
    std::size_t j = i + 1;
    for (;;) {
      if (j < text.size() && IsTerminal(text[j])) {
        ++j;
      } else if (const std::size_t n = CloserLength(text, j); n > 0) {
        j += n;
      } else {
        break;
      }
    }
    bool boundary = false;
    if (j >= text.size()) {
      boundary = true;
    } else if (text::IsSpace(text[j])) {
      std::size_t k = j;
      while (k < text.size() && text::IsSpace(text[k])) ++k;
      if (k >= text.size()) {
        boundary = true;
      } else {
        while (const std::size_t n = OpenerLength(text, k)) k += n;
        std::size_t pos = k;
        boundary = text::IsUpper(text::DecodeAt(text, pos));
      }
    }
    if (boundary && text[term] == '.') {
      std::size_t w = term;
      while (w > start && !text::IsSpace(text[w - 1])) --w;
      if (IsAbbreviation(text.substr(w, term + 1 - w))) boundary = false;
    }
    if (boundary) {
      emit(start, j);
      start = j;
    }
    i = std::max(j, i + 1);
  }
  emit(start, text.size());
  return out;
}

}  // namespace artcontext::extract
