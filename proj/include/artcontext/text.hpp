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

#ifndef ARTCONTEXT_TEXT_HPP_
#define ARTCONTEXT_TEXT_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace artcontext::text {

struct Utf8Repair {
  std::string text;
  std::size_t replacements = 0;
};

// Replaces invalid UTF-8 sequences with U+FFFD.
Utf8Repair RepairUtf8(std::string_view bytes);

// NFC normalization followed by full Unicode case folding. Used as the
// artist-name join key.
std::string NameKey(std::string_view name);

// Decodes the code point starting at `pos` (advancing it); returns U+FFFD on
// malformed input.
char32_t DecodeAt(std::string_view s, std::size_t& pos);
bool IsUpper(char32_t cp);
bool IsAlpha(char32_t cp);
bool IsSpace(char c);

std::vector<std::string> SplitWhitespace(std::string_view s);
std::string Trim(std::string_view s);
std::string CollapseWhitespace(std::string_view s);
std::string ToLowerAscii(std::string_view s);

}  // namespace artcontext::text

#endif  // ARTCONTEXT_TEXT_HPP_
