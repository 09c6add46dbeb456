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

#include <cmath>
#include <numbers>

#include "artcontext/embed.hpp"
#include "artcontext/error.hpp"

namespace artcontext::embed {
namespace {

std::uint64_t Fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t SplitMix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Uniform in (0, 1].
double Uniform(std::uint64_t& state) {
  return (static_cast<double>(SplitMix64(state) >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

std::vector<float> HashUnitVector(std::string_view text, std::size_t dim) {
  std::uint64_t state = Fnv1a64(text);
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < dim; i += 2) {
    const double radius = std::sqrt(-2.0 * std::log(Uniform(state)));
    const double angle = 2.0 * std::numbers::pi * Uniform(state);
    v[i] = radius * std::cos(angle);
    if (i + 1 < dim) v[i + 1] = radius * std::sin(angle);
  }
  double norm = 0.0;
  for (const double x : v) norm += x * x;
  norm = std::sqrt(norm);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

std::string HashEmbeddingProvider::model_name() const {
  return "test-hash-" + std::to_string(dim_);
}

EmbeddingMatrix HashEmbeddingProvider::Embed(std::span<const TextItem> items) {
  EmbeddingMatrix m(dim_);
  for (const auto& item : items) m.Append(item.id, HashUnitVector(item.text, dim_));
  return m;
}

FileEmbeddingProvider::FileEmbeddingProvider(const fs::path& path)
    : path_(path.string()), matrix_(LoadMatrix(path)), index_(matrix_.Index()) {}

EmbeddingMatrix FileEmbeddingProvider::Embed(std::span<const TextItem> items) {
  EmbeddingMatrix m(matrix_.dim);
  for (const auto& item : items) {
    const auto it = index_.find(item.id);
    if (it == index_.end()) {
      throw Error(ErrorCode::kProvider, path_ + " has no vector for id '" +
                                            item.id + "'");
    }
    m.Append(item.id, matrix_.row(it->second));
  }
  return m;
}

std::unique_ptr<EmbeddingProvider> MakeProvider(std::string_view spec) {
  if (spec == "test") return std::make_unique<HashEmbeddingProvider>();
  if (spec.starts_with("test:")) {
    const std::string dim(spec.substr(5));
    std::size_t parsed = 0;
    try {
      parsed = std::stoul(dim);
    } catch (const std::exception&) {
    }
    if (parsed == 0) {
      throw Error(ErrorCode::kValidation, "bad test provider dim: " + dim);
    }
    return std::make_unique<HashEmbeddingProvider>(parsed);
  }
  if (spec.starts_with("file:")) {
    return std::make_unique<FileEmbeddingProvider>(fs::path(spec.substr(5)));
  }
  throw Error(ErrorCode::kValidation,
              "unknown provider '" + std::string(spec) +
                  "' (expected test, test:<dim> or file:<path>)");
}

EmbeddingMatrix EmbedContexts(EmbeddingProvider& provider,
                              const std::vector<extract::ContextUnit>& contexts,
                              std::size_t batch_size) {
  if (batch_size == 0) throw Error(ErrorCode::kValidation, "batch size must be positive");
  EmbeddingMatrix out(provider.dim());
  out.ids.reserve(contexts.size());
  out.data.reserve(contexts.size() * provider.dim());
  for (std::size_t begin = 0; begin < contexts.size(); begin += batch_size) {
    const std::size_t end = std::min(contexts.size(), begin + batch_size);
    std::vector<TextItem> batch;
    batch.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back({contexts[i].Id(), contexts[i].window_text});
    }
    EmbeddingMatrix part;
    try {
      part = provider.Embed(batch);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kProvider, "batch [" + std::to_string(begin) + ", " +
                                            std::to_string(end) + "): " + e.what());
    }
    if (part.dim != out.dim || part.rows() != batch.size()) {
      throw Error(ErrorCode::kProvider,
                  "batch [" + std::to_string(begin) + ", " + std::to_string(end) +
                      "): provider returned wrong shape");
    }
    for (std::size_t i = 0; i < part.rows(); ++i) {
      out.Append(batch[i].id, part.row(i));
    }
  }
  return out;
}

}  // namespace artcontext::embed
