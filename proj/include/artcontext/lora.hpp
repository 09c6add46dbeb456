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

#ifndef ARTCONTEXT_LORA_HPP_
#define ARTCONTEXT_LORA_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "artcontext/embed.hpp"
#include "artcontext/io.hpp"
#include "artcontext/matrix.hpp"

// Low-rank adaptation of frozen projection heads, trained with a symmetric
// contrastive objective. All gradients are analytic.
namespace artcontext::lora {

inline constexpr std::size_t kDefaultRank = 16;
inline constexpr float kDefaultAlpha = 32.0f;
inline constexpr float kDefaultDropout = 0.05f;

struct ProjectionHead {
  std::string name;  // "visual" or "text"
  MatrixF weight;    // d_out x d_in, never modified

  std::size_t d_in() const { return weight.cols(); }
  std::size_t d_out() const { return weight.rows(); }
};

// Head weights ship as .emb files with one row per output dimension.
ProjectionHead LoadHead(const fs::path& path, std::string name);
embed::EmbeddingMatrix HeadToMatrix(const ProjectionHead& head);

using Digest = std::array<std::uint8_t, 32>;

struct LoraAdapter {
  std::string head_name;
  MatrixF a;  // rank x d_in
  MatrixF b;  // d_out x rank
  std::size_t rank = 0;
  float alpha = kDefaultAlpha;
  float dropout_p = kDefaultDropout;
  std::uint64_t seed = 0;
  Digest config_digest{};

  std::size_t d_in() const { return a.cols(); }
  std::size_t d_out() const { return b.rows(); }
  // Effective update is scale() * B * A.
  double scale() const { return static_cast<double>(alpha) / static_cast<double>(rank); }
  bool operator==(const LoraAdapter&) const = default;
};

// Portable generator: mt19937_64 with explicit uniform/normal transforms so
// draws do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double Uniform();  // [0, 1)
  double Normal();
  std::size_t Below(std::size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

LoraAdapter InitAdapter(std::size_t d_in, std::size_t d_out,
                        std::size_t rank = kDefaultRank,
                        float alpha = kDefaultAlpha,
                        float dropout_p = kDefaultDropout, std::uint64_t seed = 0,
                        std::string head_name = "");

// W x + (alpha/r) B A x~, where x~ is x with inverted dropout in train mode
// and x itself in eval mode. The frozen path never sees dropout.
std::vector<float> Project(const ProjectionHead& head, const LoraAdapter& adapter,
                           std::span<const float> x, bool train_mode, Rng& rng);

// Eval-mode projection of every row of `x` (n x d_in). The parallel flag
// selects the OpenMP kernel; results are identical either way.
MatrixF ProjectBatch(const ProjectionHead& head, const LoraAdapter& adapter,
                     const MatrixF& x, bool parallel = true);
// Frozen projection only (the baseline model).
MatrixF ProjectFrozen(const ProjectionHead& head, const MatrixF& x,
                      bool parallel = true);

std::vector<double> L2Normalize(std::span<const double> v);
std::vector<float> L2Normalize(std::span<const float> v);

inline const double kDefaultLogitScale = std::log(1.0 / 0.07);

// 0.5 * (row CE + column CE) of exp(logit_scale) * img * txt^T against the
// diagonal. Rows of both inputs are expected to be unit vectors.
double ContrastiveLoss(const MatrixD& img_emb, const MatrixD& txt_emb,
                       double logit_scale);

struct TrainBatch {
  MatrixF image_feats;  // n x d_in(visual)
  MatrixF text_feats;   // n x d_in(text)
};

// Double-precision copy of a head and its adapter, the working state for
// gradient computation.
struct HeadParams {
  MatrixD w;
  MatrixD a;
  MatrixD b;
  double scale = 0.0;
};
HeadParams ToParams(const ProjectionHead& head, const LoraAdapter& adapter);

// Per-sample multipliers applied to the low-rank branch input (0 or
// 1/(1-p)). Empty matrices mean no dropout.
struct DropoutMasks {
  MatrixD image;
  MatrixD text;
};

struct LossAndGrads {
  double loss = 0.0;
  MatrixD grad_a_image;
  MatrixD grad_b_image;
  MatrixD grad_a_text;
  MatrixD grad_b_text;
};

// Loss and exact gradients w.r.t. both adapters' A and B. Backpropagates
// through the softmax cross-entropies, the logit matrix, the normalization
// Jacobian (I - e e^T)/|z| and the low-rank branch.
LossAndGrads LossAndGradients(const MatrixD& image_feats, const MatrixD& text_feats,
                              const HeadParams& image, const HeadParams& text,
                              double logit_scale,
                              const DropoutMasks* masks = nullptr);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  double learning_rate = 1e-2;
  std::uint64_t seed = 7;
  double logit_scale = kDefaultLogitScale;
  bool momentum = false;
  double momentum_coef = 0.9;
  std::size_t rank = kDefaultRank;
  float alpha = kDefaultAlpha;
  float dropout_p = kDefaultDropout;

  Json ToJson() const;
  Digest Fingerprint() const;
};

// Public gradient entry point working from float adapters.
LossAndGrads Gradients(const TrainBatch& batch, const ProjectionHead& image_head,
                       const ProjectionHead& text_head,
                       const LoraAdapter& image_adapter,
                       const LoraAdapter& text_adapter, const TrainConfig& config,
                       const DropoutMasks* masks = nullptr);

// Aligned feature rows: row i of `image` and `text` belong to keys[i].
struct PairFeatures {
  std::vector<std::string> keys;
  MatrixF image;
  MatrixF text;
};

// Joins two feature files on `keys`; keys missing from either side are
// returned in `missing` and left out.
PairFeatures JoinFeatures(const std::vector<std::string>& keys,
                          const embed::EmbeddingMatrix& image,
                          const embed::EmbeddingMatrix& text,
                          std::vector<std::string>* missing);

struct TrainResult {
  LoraAdapter image_adapter;
  LoraAdapter text_adapter;
  // Dropout-free loss over fixed-order batches: before training, then after
  // each epoch (epochs + 1 entries).
  std::vector<double> loss_history;
  // Mean in-batch training loss per epoch (with dropout, shuffled batches).
  std::vector<double> epoch_batch_loss;
};

double EvaluateLoss(const PairFeatures& pairs, const ProjectionHead& image_head,
                    const ProjectionHead& text_head,
                    const LoraAdapter& image_adapter,
                    const LoraAdapter& text_adapter, const TrainConfig& config);

// Single-threaded SGD over shuffled in-batch-negative batches. The last
// batch is dropped if it has fewer than two pairs.
TrainResult Train(const PairFeatures& pairs, const ProjectionHead& image_head,
                  const ProjectionHead& text_head, const TrainConfig& config);

// W + (alpha/r) B A, materialized.
MatrixF Merge(const ProjectionHead& head, const LoraAdapter& adapter);

inline constexpr char kLoraMagic[4] = {'A', 'L', 'R', 'A'};
inline constexpr std::uint32_t kLoraVersion = 1;

std::string EncodeAdapter(const LoraAdapter& adapter);
LoraAdapter DecodeAdapter(std::string_view bytes);
void SaveAdapter(const LoraAdapter& adapter, const fs::path& path);
LoraAdapter LoadAdapter(const fs::path& path);

}  // namespace artcontext::lora

#endif  // ARTCONTEXT_LORA_HPP_
