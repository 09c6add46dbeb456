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

#include <cctype>
#include <sstream>

#include "artcontext/extract.hpp"
#include "artcontext/text.hpp"

namespace artcontext::extract {
namespace {

bool IsAlnumAscii(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

bool IsIndented(std::string_view line) {
  return StartsWith(line, "    ") || StartsWith(line, "\t");
}

bool IsFence(std::string_view trimmed) {
  return StartsWith(trimmed, "```") || StartsWith(trimmed, "~~~");
}

bool IsHeading(std::string_view trimmed) {
  std::size_t n = 0;
  while (n < trimmed.size() && trimmed[n] == '#') ++n;
  return n >= 1 && n <= 6 && (n == trimmed.size() || trimmed[n] == ' ');
}

// Thematic breaks and setext underlines.
bool IsRule(std::string_view trimmed) {
  std::size_t markers = 0;
  for (const char c : trimmed) {
    if (c == '-' || c == '*' || c == '_' || c == '=') {
      ++markers;
    } else if (c != ' ') {
      return false;
    }
  }
  return markers >= 3;
}

std::string_view StripBlockMarkers(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && line[i] == ' ') ++i;
  while (i < line.size() && line[i] == '>') {
    ++i;
    while (i < line.size() && line[i] == ' ') ++i;
  }
  line.remove_prefix(i);
  if (line.size() >= 2 && (line[0] == '-' || line[0] == '*' || line[0] == '+') &&
      line[1] == ' ') {
    line.remove_prefix(2);
  } else {
    std::size_t d = 0;
    while (d < line.size() && d < 3 && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
    if (d >= 1 && d <= 2 && d + 1 < line.size() &&
        (line[d] == '.' || line[d] == ')') && line[d + 1] == ' ') {
      line.remove_prefix(d + 2);
    }
  }
  return line;
}

// Index of the ']' matching the '[' at `open`, or npos.
std::size_t MatchBracket(std::string_view s, std::size_t open, char lhs,
                         char rhs) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == lhs) ++depth;
    if (s[i] == rhs && --depth == 0) return i;
  }
  return std::string_view::npos;
}

bool IsCitationBody(std::string_view body) {
  if (body.empty()) return false;
  if (body[0] == '^') return true;
  bool digit = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c == ',' || c == ';' || c == ' ' || c == '-') {
    } else if (body.substr(i, 3) == "–" || body.substr(i, 3) == "—") {
      i += 2;
    } else {
      return false;
    }
  }
  return digit;
}

// Images, links, citation brackets.
std::string StripBrackets(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const bool image = s[i] == '!' && i + 1 < s.size() && s[i + 1] == '[';
    if (s[i] == '[' || image) {
      const std::size_t open = image ? i + 1 : i;
      const std::size_t close = MatchBracket(s, open, '[', ']');
      if (close != std::string_view::npos) {
        const std::string_view label = s.substr(open + 1, close - open - 1);
        std::size_t after = close + 1;
        bool has_target = false;
        if (after < s.size() && (s[after] == '(' || s[after] == '[')) {
          const char lhs = s[after];
          const char rhs = lhs == '(' ? ')' : ']';
          const std::size_t end = MatchBracket(s, after, lhs, rhs);
          if (end != std::string_view::npos) {
            after = end + 1;
            has_target = true;
          }
        }
        if (image) {
          i = after;
          continue;
        }
        if (has_target) {
          out += StripBrackets(label);
          i = after;
          continue;
        }
        if (IsCitationBody(label)) {
          while (!out.empty() && text::IsSpace(out.back())) out.pop_back();
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

std::string StripTags(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '<' && i + 1 < s.size() &&
        (std::isalpha(static_cast<unsigned char>(s[i + 1])) || s[i + 1] == '/' ||
         s[i + 1] == '!')) {
      const std::size_t close = s.find('>', i);
      if (close != std::string_view::npos) {
        i = close + 1;
        continue;
      }
    }
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

std::string StripUrls(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const bool token_start = i == 0 || text::IsSpace(s[i - 1]) || s[i - 1] == '(';
    const std::string_view rest = s.substr(i);
    if (token_start && (StartsWith(rest, "http://") ||
                        StartsWith(rest, "https://") || StartsWith(rest, "www."))) {
      std::size_t end = i;
      while (end < s.size() && !text::IsSpace(s[end])) ++end;
      // Keep sentence punctuation that trails the URL.
      std::size_t keep = end;
      while (keep > i && std::string_view(".,;:!?)").find(s[keep - 1]) !=
                             std::string_view::npos) {
        --keep;
      }
      out.append(s.substr(keep, end - keep));
      i = end;
      continue;
    }
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

std::string StripEmphasis(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '*' || c == '`') continue;
    if (c == '~' && i + 1 < s.size() && s[i + 1] == '~') {
      ++i;
      continue;
    }
    if (c == '_') {
      const bool prev_word = i > 0 && IsAlnumAscii(s[i - 1]);
      const bool next_word = i + 1 < s.size() && IsAlnumAscii(s[i + 1]);
      if (!(prev_word && next_word)) continue;
    }
    out.push_back(c);
  }
  return out;
}

std::string CleanLine(std::string_view line) {
  std::string s = StripBrackets(line);
  std::size_t pipes = 0;
  for (const char c : s) pipes += c == '|';
  if (pipes >= 2) s.erase(s.find('|'));
  s = StripTags(s);
  s = StripUrls(s);
  return StripEmphasis(s);
}

// Collapse whitespace and drop spaces left in front of punctuation by the
// removals above.
std::string FinishParagraph(std::string_view raw) {
  const std::string collapsed = text::CollapseWhitespace(raw);
  std::string out;
  for (std::size_t i = 0; i < collapsed.size(); ++i) {
    if (collapsed[i] == ' ' && i + 1 < collapsed.size() &&
        std::string_view(".,;:!?").find(collapsed[i + 1]) != std::string_view::npos) {
      continue;
    }
    out.push_back(collapsed[i]);
  }
  return out;
}

}  // namespace

std::string StripNonTextual(std::string_view markdown) {
  std::vector<std::string> paragraphs;
  std::string current;
  bool in_fence = false;
  bool in_code = false;

  auto flush = [&] {
    std::string p = FinishParagraph(current);
    if (!p.empty()) paragraphs.push_back(std::move(p));
    current.clear();
  };

  std::istringstream in{std::string(markdown)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string trimmed = text::Trim(line);
    if (IsFence(trimmed)) {
      flush();
      in_fence = !in_fence;
      continue;
    }
    if (in_fence) continue;
    if (trimmed.empty()) {
      flush();
      continue;
    }
    if (IsIndented(line) && (in_code || current.empty())) {
      in_code = true;
      continue;
    }
    in_code = false;
    if (IsHeading(trimmed) || IsRule(trimmed) ||
        (StartsWith(trimmed, "[^") && trimmed.find("]:") != std::string::npos)) {
      flush();
      continue;
    }
    current += CleanLine(StripBlockMarkers(line));
    current.push_back(' ');
  }
  flush();

  std::string out;
  for (const auto& p : paragraphs) {
    if (!out.empty()) out += "\n\n";
    out += p;
  }
  return out;
}

}  // namespace artcontext::extract
