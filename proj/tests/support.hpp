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

#ifndef ARTCONTEXT_TESTS_SUPPORT_HPP_
#define ARTCONTEXT_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "artcontext/embed.hpp"
#include "artcontext/eval.hpp"
#include "artcontext/lora.hpp"

namespace artcontext::testing {

inline std::filesystem::path FixtureDir() { return ARTCONTEXT_FIXTURES; }

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("artcontext-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline MatrixF RandomMatrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  MatrixF m(rows, cols);
  for (float& v : m.data()) v = static_cast<float>(normal(rng));
  return m;
}

inline MatrixD RandomMatrixD(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                             double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  MatrixD m(rows, cols);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

inline embed::EmbeddingMatrix ToEmbedding(const MatrixF& m, const std::string& prefix) {
  embed::EmbeddingMatrix out(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) out.Append(prefix + std::to_string(r), m.row(r));
  return out;
}

// Paired features sharing a latent cluster structure: both modalities are
// fixed random linear maps of (cluster center + independent noise).
struct SyntheticSet {
  lora::PairFeatures pairs;
  std::vector<int> cluster;
  lora::ProjectionHead image_head;
  lora::ProjectionHead text_head;
};

inline SyntheticSet MakeSyntheticSet(std::size_t n, std::size_t clusters,
                                     std::size_t latent, std::size_t d_img,
                                     std::size_t d_txt, std::size_t d_embed,
                                     std::uint64_t seed, double noise = 0.3) {
  std::mt19937_64 rng(seed);
  const MatrixF centers = RandomMatrix(clusters, latent, rng);
  const MatrixF map_img = RandomMatrix(d_img, latent, rng, 1.0 / std::sqrt(latent));
  const MatrixF map_txt = RandomMatrix(d_txt, latent, rng, 1.0 / std::sqrt(latent));
  std::normal_distribution<double> normal(0.0, noise);
  SyntheticSet s;
  s.pairs.image = MatrixF(n, d_img);
  s.pairs.text = MatrixF(n, d_txt);
  const auto emit = [&](const MatrixF& map, std::size_t k, std::span<float> out) {
    std::vector<double> z(latent);
    for (std::size_t j = 0; j < latent; ++j) z[j] = centers(k, j) + normal(rng);
    for (std::size_t i = 0; i < out.size(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < latent; ++j) acc += map(i, j) * z[j];
      out[i] = static_cast<float>(acc);
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % clusters;
    s.cluster.push_back(static_cast<int>(k));
    s.pairs.keys.push_back("p" + std::to_string(i));
    emit(map_img, k, s.pairs.image.row(i));
    emit(map_txt, k, s.pairs.text.row(i));
  }
  s.image_head = {"visual", RandomMatrix(d_embed, d_img, rng, 1.0 / std::sqrt(d_img))};
  s.text_head = {"text", RandomMatrix(d_embed, d_txt, rng, 1.0 / std::sqrt(d_txt))};
  return s;
}

inline lora::PairFeatures SliceRows(const lora::PairFeatures& p, std::size_t begin,
                                    std::size_t end) {
  lora::PairFeatures out;
  out.image = MatrixF(end - begin, p.image.cols());
  out.text = MatrixF(end - begin, p.text.cols());
  for (std::size_t r = begin; r < end; ++r) {
    out.keys.push_back(p.keys[r]);
    std::ranges::copy(p.image.row(r), out.image.row(r - begin).begin());
    std::ranges::copy(p.text.row(r), out.text.row(r - begin).begin());
  }
  return out;
}

// Mean AP of image->text retrieval where same-cluster texts are relevant.
inline double ClusterMeanAp(const lora::PairFeatures& p, const std::vector<int>& cluster,
                            const lora::ProjectionHead& image_head,
                            const lora::ProjectionHead& text_head,
                            const lora::LoraAdapter& image_adapter,
                            const lora::LoraAdapter& text_adapter) {
  const MatrixF img = lora::ProjectBatch(image_head, image_adapter, p.image, false);
  const MatrixF txt = lora::ProjectBatch(text_head, text_adapter, p.text, false);
  double total = 0.0;
  for (std::size_t q = 0; q < img.rows(); ++q) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t c = 0; c < txt.rows(); ++c) {
      scores.push_back(embed::Cosine(img.row(q), txt.row(c)));
      labels.push_back(cluster[q] == cluster[c] ? 1 : 0);
    }
    total += eval::AveragePrecision(scores, labels);
  }
  return total / static_cast<double>(img.rows());
}

}  // namespace artcontext::testing

#endif  // ARTCONTEXT_TESTS_SUPPORT_HPP_
