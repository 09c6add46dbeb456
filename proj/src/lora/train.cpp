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
#include <numeric>

#include "artcontext/error.hpp"
#include "artcontext/lora.hpp"

namespace artcontext::lora {
namespace {

MatrixD GatherRows(const MatrixF& src, std::span<const std::size_t> rows) {
  MatrixD out(rows.size(), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto from = src.row(rows[i]);
    auto to = out.row(i);
    for (std::size_t c = 0; c < from.size(); ++c) to[c] = from[c];
  }
  return out;
}

MatrixD SampleMask(std::size_t n, std::size_t d, double p, Rng& rng) {
  MatrixD mask(n, d);
  const double keep = 1.0 / (1.0 - p);
  for (double& m : mask.data()) m = rng.Uniform() < p ? 0.0 : keep;
  return mask;
}

// Batches of `size` over `order`; a trailing batch with < 2 rows is dropped.
std::vector<std::span<const std::size_t>> Batches(const std::vector<std::size_t>& order,
                                                  std::size_t size) {
  std::vector<std::span<const std::size_t>> out;
  for (std::size_t begin = 0; begin < order.size(); begin += size) {
    const std::size_t len = std::min(size, order.size() - begin);
    if (len < 2) break;
    out.emplace_back(order.data() + begin, len);
  }
  return out;
}

struct SgdState {
  MatrixD velocity;
};

void Step(MatrixF& param, const MatrixD& grad, const TrainConfig& config,
          SgdState& state) {
  if (config.momentum) {
    if (state.velocity.empty()) state.velocity = MatrixD(grad.rows(), grad.cols(), 0.0);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      double& v = state.velocity.data()[i];
      v = config.momentum_coef * v + grad.data()[i];
      param.data()[i] =
          static_cast<float>(param.data()[i] - config.learning_rate * v);
    }
  } else {
    for (std::size_t i = 0; i < grad.size(); ++i) {
      param.data()[i] = static_cast<float>(param.data()[i] -
                                           config.learning_rate * grad.data()[i]);
    }
  }
}

void CheckHeads(const ProjectionHead& image_head, const ProjectionHead& text_head,
                const PairFeatures& pairs) {
  if (image_head.d_out() != text_head.d_out()) {
    throw Error(ErrorCode::kDimMismatch, "visual and text heads project to different dims");
  }
  if (pairs.image.cols() != image_head.d_in() || pairs.text.cols() != text_head.d_in()) {
    throw Error(ErrorCode::kDimMismatch, "feature dims do not match head inputs");
  }
  if (pairs.image.rows() != pairs.text.rows()) {
    throw Error(ErrorCode::kDimMismatch, "unequal image/text pair counts");
  }
}

}  // namespace

Json TrainConfig::ToJson() const {
  return Json{{"epochs", epochs},
              {"batch_size", batch_size},
              {"learning_rate", learning_rate},
              {"seed", seed},
              {"logit_scale", logit_scale},
              {"momentum", momentum},
              {"momentum_coef", momentum_coef},
              {"rank", rank},
              {"alpha", alpha},
              {"dropout_p", dropout_p}};
}

Digest TrainConfig::Fingerprint() const {
  const std::string hex = Sha256Hex(ToJson().dump());
  Digest d{};
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = static_cast<std::uint8_t>(std::stoi(hex.substr(2 * i, 2), nullptr, 16));
  }
  return d;
}

PairFeatures JoinFeatures(const std::vector<std::string>& keys,
                          const embed::EmbeddingMatrix& image,
                          const embed::EmbeddingMatrix& text,
                          std::vector<std::string>* missing) {
  const auto img_index = image.Index();
  const auto txt_index = text.Index();
  std::vector<std::size_t> img_rows;
  std::vector<std::size_t> txt_rows;
  PairFeatures out;
  for (const auto& key : keys) {
    const auto i = img_index.find(key);
    const auto t = txt_index.find(key);
    if (i == img_index.end() || t == txt_index.end()) {
      if (missing != nullptr) missing->push_back(key);
      continue;
    }
    out.keys.push_back(key);
    img_rows.push_back(i->second);
    txt_rows.push_back(t->second);
  }
  out.image = MatrixF(out.keys.size(), image.dim);
  out.text = MatrixF(out.keys.size(), text.dim);
  for (std::size_t r = 0; r < out.keys.size(); ++r) {
    std::ranges::copy(image.row(img_rows[r]), out.image.row(r).begin());
    std::ranges::copy(text.row(txt_rows[r]), out.text.row(r).begin());
  }
  return out;
}

double EvaluateLoss(const PairFeatures& pairs, const ProjectionHead& image_head,
                    const ProjectionHead& text_head,
                    const LoraAdapter& image_adapter,
                    const LoraAdapter& text_adapter, const TrainConfig& config) {
  CheckHeads(image_head, text_head, pairs);
  std::vector<std::size_t> order(pairs.image.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const HeadParams img = ToParams(image_head, image_adapter);
  const HeadParams txt = ToParams(text_head, text_adapter);
  double total = 0.0;
  std::size_t count = 0;
  for (const auto batch : Batches(order, config.batch_size)) {
    const MatrixD xi = GatherRows(pairs.image, batch);
    const MatrixD xt = GatherRows(pairs.text, batch);
    total += LossAndGradients(xi, xt, img, txt, config.logit_scale).loss;
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::kInsufficientData, "no batch of >= 2 pairs");
  return total / static_cast<double>(count);
}

TrainResult Train(const PairFeatures& pairs, const ProjectionHead& image_head,
                  const ProjectionHead& text_head, const TrainConfig& config) {
  CheckHeads(image_head, text_head, pairs);
  if (config.batch_size < 2) {
    throw Error(ErrorCode::kValidation, "batch_size must be >= 2");
  }
  if (!(config.learning_rate >= 0.0)) {
    throw Error(ErrorCode::kValidation, "learning_rate must be non-negative");
  }
  const std::size_t n = pairs.image.rows();
  if (n < 2 * config.batch_size) {
    throw Error(ErrorCode::kInsufficientData,
                std::to_string(n) + " pairs, need at least 2 x batch_size = " +
                    std::to_string(2 * config.batch_size));
  }

  Rng rng(config.seed);
  TrainResult result;
  const Digest digest = config.Fingerprint();
  result.image_adapter =
      InitAdapter(image_head.d_in(), image_head.d_out(), config.rank, config.alpha,
                  config.dropout_p, config.seed, image_head.name);
  result.text_adapter =
      InitAdapter(text_head.d_in(), text_head.d_out(), config.rank, config.alpha,
                  config.dropout_p, config.seed + 1, text_head.name);
  result.image_adapter.config_digest = digest;
  result.text_adapter.config_digest = digest;

  result.loss_history.push_back(EvaluateLoss(pairs, image_head, text_head,
                                             result.image_adapter,
                                             result.text_adapter, config));
  SgdState s_ai, s_bi, s_at, s_bt;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.Below(i + 1)]);
    double total = 0.0;
    std::size_t count = 0;
    for (const auto batch : Batches(order, config.batch_size)) {
      const MatrixD xi = GatherRows(pairs.image, batch);
      const MatrixD xt = GatherRows(pairs.text, batch);
      DropoutMasks masks;
      if (config.dropout_p > 0.0f) {
        masks.image = SampleMask(batch.size(), xi.cols(), config.dropout_p, rng);
        masks.text = SampleMask(batch.size(), xt.cols(), config.dropout_p, rng);
      }
      const LossAndGrads lg = LossAndGradients(
          xi, xt, ToParams(image_head, result.image_adapter),
          ToParams(text_head, result.text_adapter), config.logit_scale, &masks);
      Step(result.image_adapter.a, lg.grad_a_image, config, s_ai);
      Step(result.image_adapter.b, lg.grad_b_image, config, s_bi);
      Step(result.text_adapter.a, lg.grad_a_text, config, s_at);
      Step(result.text_adapter.b, lg.grad_b_text, config, s_bt);
      total += lg.loss;
      ++count;
    }
    result.epoch_batch_loss.push_back(total / static_cast<double>(count));
    result.loss_history.push_back(EvaluateLoss(pairs, image_head, text_head,
                                               result.image_adapter,
                                               result.text_adapter, config));
  }
  return result;
}

}  // namespace artcontext::lora
