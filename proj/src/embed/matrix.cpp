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

#include <cstring>
#include <unordered_set>

#include "artcontext/embed.hpp"
#include "artcontext/error.hpp"
#include "artcontext/kernels.hpp"

namespace artcontext::embed {

void EmbeddingMatrix::Append(std::string id, std::span<const float> values) {
  if (values.size() != dim) {
    throw Error(ErrorCode::kDimMismatch, "row for '" + id + "' has " +
                                             std::to_string(values.size()) +
                                             " values, expected " +
                                             std::to_string(dim));
  }
  ids.push_back(std::move(id));
  data.insert(data.end(), values.begin(), values.end());
}

void EmbeddingMatrix::Validate() const {
  if (dim == 0) throw Error(ErrorCode::kValidation, "matrix dim must be positive");
  if (ids.size() * dim != data.size()) {
    throw Error(ErrorCode::kValidation, "matrix payload does not match ids x dim");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kValidation, "duplicate row id: " + id);
    }
  }
}

std::unordered_map<std::string, std::size_t> EmbeddingMatrix::Index() const {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
  return index;
}

EmbeddingMatrix EmbeddingMatrix::Select(std::span<const std::size_t> rows) const {
  EmbeddingMatrix out(dim);
  out.ids.reserve(rows.size());
  out.data.reserve(rows.size() * dim);
  for (const std::size_t r : rows) out.Append(ids.at(r), row(r));
  return out;
}

std::string EncodeMatrix(const EmbeddingMatrix& m) {
  m.Validate();
  ByteWriter w;
  w.Bytes(std::string_view(kEmbMagic, 4));
  w.U32(kEmbVersion);
  w.U64(m.rows());
  w.U32(static_cast<std::uint32_t>(m.dim));
  w.U8(0);  // dtype float32
  w.U8(0);
  w.U8(0);
  w.U8(0);
  for (const auto& id : m.ids) {
    w.U32(static_cast<std::uint32_t>(id.size()));
    w.Bytes(id);
  }
  for (const float v : m.data) w.F32(v);
  return w.str();
}

EmbeddingMatrix DecodeMatrix(std::string_view bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kEmbMagic, 4) != 0) {
    throw FormatError(0, "bad magic, expected \"AEMB\"");
  }
  r.Bytes(4);
  const std::uint32_t version = r.U32();
  if (version != kEmbVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                ".emb version " + std::to_string(version) + " (reader supports " +
                    std::to_string(kEmbVersion) + ")");
  }
  const std::uint64_t rows = r.U64();
  const std::uint64_t dim_offset = r.offset();
  const std::uint32_t dim = r.U32();
  if (dim == 0) throw FormatError(dim_offset, "dim must be positive");
  const std::uint64_t dtype_offset = r.offset();
  if (r.U8() != 0) throw FormatError(dtype_offset, "unsupported dtype");
  for (int i = 0; i < 3; ++i) {
    const std::uint64_t off = r.offset();
    if (r.U8() != 0) throw FormatError(off, "non-zero header padding");
  }
  // Each id costs at least 4 bytes; reject impossible counts before
  // allocating.
  if (rows > r.remaining() / 4) {
    throw FormatError(8, "row count " + std::to_string(rows) +
                             " exceeds what the file can hold");
  }
  EmbeddingMatrix m(dim);
  m.ids.reserve(rows);
  std::unordered_set<std::string> seen;
  for (std::uint64_t i = 0; i < rows; ++i) {
    const std::uint64_t off = r.offset();
    const std::uint32_t len = r.U32();
    std::string id(r.Bytes(len));
    if (!seen.insert(id).second) throw FormatError(off, "duplicate id '" + id + "'");
    m.ids.push_back(std::move(id));
  }
  const std::uint64_t payload = rows * dim * 4;
  if (r.remaining() != payload) {
    throw FormatError(r.offset(),
                      "payload has " + std::to_string(r.remaining()) +
                          " bytes, id table implies " + std::to_string(payload));
  }
  m.data.resize(rows * dim);
  for (auto& v : m.data) v = r.F32();
  return m;
}

void SaveMatrix(const EmbeddingMatrix& m, const fs::path& path) {
  WriteFileAtomic(path, EncodeMatrix(m));
}

EmbeddingMatrix LoadMatrix(const fs::path& path) {
  return DecodeMatrix(ReadFile(path));
}

double Cosine(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size() || u.empty()) {
    throw Error(ErrorCode::kDimMismatch, "cosine of vectors with lengths " +
                                             std::to_string(u.size()) + " and " +
                                             std::to_string(v.size()));
  }
  const double un = std::sqrt(kernels::SquaredNorm(u));
  const kernels::RowStats s = kernels::DotAndNorm(u, v);
  if (un < kernels::kMinNorm || std::sqrt(s.norm_sq) < kernels::kMinNorm) {
    throw Error(ErrorCode::kZeroVector, "cosine of a near-zero vector");
  }
  return kernels::CosineFromStats(s, un);
}

Match ArgmaxSimilarity(std::span<const float> query, const EmbeddingMatrix& m) {
  if (m.rows() == 0) throw Error(ErrorCode::kEmptyCandidates, "no candidate rows");
  const std::vector<double> scores = kernels::CosineScoresOmp(query, m.data, m.dim);
  std::optional<Match> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) continue;
    if (!best || scores[i] > best->score) best = Match{i, scores[i]};
  }
  if (!best) throw Error(ErrorCode::kAllDegenerate, "every candidate row is degenerate");
  return *best;
}

}  // namespace artcontext::embed
