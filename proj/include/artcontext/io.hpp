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

#ifndef ARTCONTEXT_IO_HPP_
#define ARTCONTEXT_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace artcontext {

namespace fs = std::filesystem;
using Json = nlohmann::json;

std::string ReadFile(const fs::path& path);

// Writes through a sibling temp file and renames it over `path`, so readers
// never observe a partially written artifact.
void WriteFileAtomic(const fs::path& path, std::string_view contents);

std::string Sha256Hex(std::string_view bytes);
std::string Sha256File(const fs::path& path);

// One JSON document per line. Blank lines are skipped; a parse failure
// raises kFormat naming the 1-based line.
std::vector<Json> ReadJsonl(const fs::path& path);
std::string ToJsonl(const std::vector<Json>& rows);

std::string NowIso8601();

// Little-endian primitive codec shared by the .emb and .lora formats.
class ByteWriter {
 public:
  void U8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F32(float v);
  void Bytes(std::string_view b) { buf_.append(b); }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}
  std::uint8_t U8();
  std::uint32_t U32();
  std::uint64_t U64();
  float F32();
  std::string_view Bytes(std::size_t n);
  std::uint64_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void Need(std::size_t n) const;
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace artcontext

#endif  // ARTCONTEXT_IO_HPP_
