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

#ifndef ARTCONTEXT_EMBED_HPP_
#define ARTCONTEXT_EMBED_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "artcontext/extract.hpp"
#include "artcontext/io.hpp"

namespace artcontext::embed {

// Row-major float32 matrix with one string id per row. This is the exchange
// format for every vector artifact in the pipeline (.emb files).
struct EmbeddingMatrix {
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<float> data;

  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(std::size_t d) : dim(d) {}

  std::size_t rows() const { return ids.size(); }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(data).subspan(i * dim, dim);
  }
  std::span<float> row(std::size_t i) {
    return std::span<float>(data).subspan(i * dim, dim);
  }
  void Append(std::string id, std::span<const float> values);

  // Throws kValidation on shape mismatch or duplicate ids.
  void Validate() const;
  // id -> row index.
  std::unordered_map<std::string, std::size_t> Index() const;
  EmbeddingMatrix Select(std::span<const std::size_t> rows) const;
};

inline constexpr char kEmbMagic[4] = {'A', 'E', 'M', 'B'};
inline constexpr std::uint32_t kEmbVersion = 1;
inline constexpr std::size_t kEmbHeaderBytes = 24;

std::string EncodeMatrix(const EmbeddingMatrix& m);
EmbeddingMatrix DecodeMatrix(std::string_view bytes);
void SaveMatrix(const EmbeddingMatrix& m, const fs::path& path);
EmbeddingMatrix LoadMatrix(const fs::path& path);

// u.v / (|u||v|) in double precision, clamped to [-1, 1]. Throws ZeroVector
// if either norm is below 1e-12 and DimMismatch on unequal lengths.
double Cosine(std::span<const float> u, std::span<const float> v);

struct Match {
  std::size_t index = 0;
  double score = 0.0;
};

// Best-scoring row by cosine; ties go to the lowest index and degenerate
// rows are skipped.
Match ArgmaxSimilarity(std::span<const float> query, const EmbeddingMatrix& m);

struct TextItem {
  std::string id;
  std::string text;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string model_name() const = 0;
  virtual std::size_t dim() const = 0;
  // One row per item, same order, row id = item id.
  virtual EmbeddingMatrix Embed(std::span<const TextItem> items) = 0;
};

// Deterministic stand-in for a sentence encoder: each text maps to a unit
// vector drawn from a generator seeded by a hash of its bytes. Identical
// texts get identical vectors; nothing else is preserved.
class HashEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dim = 64) : dim_(dim) {}
  std::string model_name() const override;
  std::size_t dim() const override { return dim_; }
  EmbeddingMatrix Embed(std::span<const TextItem> items) override;

 private:
  std::size_t dim_;
};

std::vector<float> HashUnitVector(std::string_view text, std::size_t dim);

// Looks vectors up by id in a pre-exported .emb file.
class FileEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(const fs::path& path);
  std::string model_name() const override { return "file:" + path_; }
  std::size_t dim() const override { return matrix_.dim; }
  EmbeddingMatrix Embed(std::span<const TextItem> items) override;

 private:
  std::string path_;
  EmbeddingMatrix matrix_;
  std::unordered_map<std::string, std::size_t> index_;
};

// "test", "test:<dim>" or "file:<path>".
std::unique_ptr<EmbeddingProvider> MakeProvider(std::string_view spec);

inline constexpr std::size_t kDefaultEmbedBatch = 64;

// Embeds window_text of each context with id "<work_id>#<index>". Provider
// failures are rethrown as ProviderError naming the failing batch range.
EmbeddingMatrix EmbedContexts(EmbeddingProvider& provider,
                              const std::vector<extract::ContextUnit>& contexts,
                              std::size_t batch_size = kDefaultEmbedBatch);

}  // namespace artcontext::embed

#endif  // ARTCONTEXT_EMBED_HPP_
