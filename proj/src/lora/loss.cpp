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

#include <algorithm>
#include <limits>

#include "artcontext/error.hpp"
#include "artcontext/kernels.hpp"
#include "artcontext/lora.hpp"

namespace artcontext::lora {
namespace {

// Forward state of one modality, kept for the backward pass.
struct Forward {
  MatrixD x_lr;     // n x d_in, input of the low-rank branch
  MatrixD hidden;   // n x r, A x~
  MatrixD emb;      // n x d_e, unit rows
  std::vector<double> norms;
};

Forward RunHead(const MatrixD& x, const HeadParams& p, const MatrixD* mask) {
  const std::size_t n = x.rows();
  const std::size_t d_in = p.w.cols();
  const std::size_t d_out = p.w.rows();
  const std::size_t rank = p.a.rows();
  if (x.cols() != d_in || p.a.cols() != d_in || p.b.rows() != d_out ||
      p.b.cols() != rank) {
    throw Error(ErrorCode::kDimMismatch, "features/head/adapter shapes disagree");
  }
  Forward f;
  f.x_lr = x;
  if (mask != nullptr && !mask->empty()) {
    if (mask->rows() != n || mask->cols() != d_in) {
      throw Error(ErrorCode::kDimMismatch, "dropout mask shape");
    }
    for (std::size_t i = 0; i < f.x_lr.size(); ++i) f.x_lr.data()[i] *= mask->data()[i];
  }
  f.hidden = MatrixD(n, rank);
  f.emb = MatrixD(n, d_out);
  f.norms.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < rank; ++k) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d_in; ++c) acc += p.a(k, c) * f.x_lr(i, c);
      f.hidden(i, k) = acc;
    }
    double sq = 0.0;
    for (std::size_t o = 0; o < d_out; ++o) {
      double z = 0.0;
      for (std::size_t c = 0; c < d_in; ++c) z += p.w(o, c) * x(i, c);
      double delta = 0.0;
      for (std::size_t k = 0; k < rank; ++k) delta += p.b(o, k) * f.hidden(i, k);
      z += p.scale * delta;
      f.emb(i, o) = z;
      sq += z * z;
    }
    const double norm = std::sqrt(sq);
    if (norm < kernels::kMinNorm) {
      throw Error(ErrorCode::kZeroVector, "projected embedding has zero norm");
    }
    f.norms[i] = norm;
    for (std::size_t o = 0; o < d_out; ++o) f.emb(i, o) /= norm;
  }
  return f;
}

// Row-softmax probabilities of `logits` and the mean row cross-entropy
// against the diagonal. With transpose=true works on columns instead.
double SoftmaxCE(const MatrixD& logits, bool transpose, MatrixD* probs) {
  const std::size_t n = logits.rows();
  auto at = [&](std::size_t i, std::size_t j) {
    return transpose ? logits(j, i) : logits(i, j);
  };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, at(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(at(i, j) - mx);
    const double lse = mx + std::log(sum);
    total += lse - at(i, i);
    if (probs != nullptr) {
      for (std::size_t j = 0; j < n; ++j) {
        const double p = std::exp(at(i, j) - lse);
        if (transpose) {
          (*probs)(j, i) = p;
        } else {
          (*probs)(i, j) = p;
        }
      }
    }
  }
  return total / static_cast<double>(n);
}

MatrixD Logits(const MatrixD& img, const MatrixD& txt, double logit_scale) {
  const std::size_t n = img.rows();
  const double c = std::exp(logit_scale);
  MatrixD s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < img.cols(); ++k) dot += img(i, k) * txt(j, k);
      s(i, j) = c * dot;
    }
  }
  return s;
}

void CheckPairShapes(const MatrixD& img, const MatrixD& txt) {
  if (img.rows() != txt.rows()) {
    throw Error(ErrorCode::kDimMismatch, "image and text batches differ in size");
  }
  if (img.cols() != txt.cols()) {
    throw Error(ErrorCode::kDimMismatch, "image and text embedding dims differ");
  }
  if (img.rows() < 2) {
    throw Error(ErrorCode::kBatchTooSmall, "contrastive loss needs n >= 2");
  }
}

// dL/dz from dL/de through e = z/|z|.
void NormalizeBackward(const Forward& f, MatrixD& grad) {
  for (std::size_t i = 0; i < grad.rows(); ++i) {
    double proj = 0.0;
    for (std::size_t o = 0; o < grad.cols(); ++o) proj += f.emb(i, o) * grad(i, o);
    for (std::size_t o = 0; o < grad.cols(); ++o) {
      grad(i, o) = (grad(i, o) - f.emb(i, o) * proj) / f.norms[i];
    }
  }
}

void AdapterBackward(const Forward& f, const HeadParams& p, const MatrixD& grad_z,
                     MatrixD& grad_a, MatrixD& grad_b) {
  const std::size_t n = grad_z.rows();
  const std::size_t rank = p.a.rows();
  grad_a = MatrixD(rank, p.a.cols(), 0.0);
  grad_b = MatrixD(p.b.rows(), rank, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < p.b.rows(); ++o) {
      for (std::size_t k = 0; k < rank; ++k) {
        grad_b(o, k) += p.scale * grad_z(i, o) * f.hidden(i, k);
      }
    }
    for (std::size_t k = 0; k < rank; ++k) {
      double gh = 0.0;
      for (std::size_t o = 0; o < p.b.rows(); ++o) gh += grad_z(i, o) * p.b(o, k);
      gh *= p.scale;
      for (std::size_t c = 0; c < p.a.cols(); ++c) grad_a(k, c) += gh * f.x_lr(i, c);
    }
  }
}

}  // namespace

double ContrastiveLoss(const MatrixD& img_emb, const MatrixD& txt_emb,
                       double logit_scale) {
  CheckPairShapes(img_emb, txt_emb);
  const MatrixD logits = Logits(img_emb, txt_emb, logit_scale);
  return 0.5 * (SoftmaxCE(logits, false, nullptr) + SoftmaxCE(logits, true, nullptr));
}

HeadParams ToParams(const ProjectionHead& head, const LoraAdapter& adapter) {
  return {head.weight.Cast<double>(), adapter.a.Cast<double>(),
          adapter.b.Cast<double>(), adapter.scale()};
}

LossAndGrads LossAndGradients(const MatrixD& image_feats, const MatrixD& text_feats,
                              const HeadParams& image, const HeadParams& text,
                              double logit_scale, const DropoutMasks* masks) {
  if (image_feats.rows() != text_feats.rows()) {
    throw Error(ErrorCode::kDimMismatch, "image and text batches differ in size");
  }
  if (image_feats.rows() < 2) {
    throw Error(ErrorCode::kBatchTooSmall, "contrastive loss needs n >= 2");
  }
  const Forward fi = RunHead(image_feats, image, masks ? &masks->image : nullptr);
  const Forward ft = RunHead(text_feats, text, masks ? &masks->text : nullptr);
  CheckPairShapes(fi.emb, ft.emb);

  const std::size_t n = image_feats.rows();
  const std::size_t d_e = fi.emb.cols();
  const MatrixD logits = Logits(fi.emb, ft.emb, logit_scale);
  MatrixD p_row(n, n);
  MatrixD p_col(n, n);
  LossAndGrads out;
  out.loss = 0.5 * (SoftmaxCE(logits, false, &p_row) + SoftmaxCE(logits, true, &p_col));

  // dL/dS = ((P_row - I) + (P_col - I)) / (2n)
  MatrixD g(n, n);
  const double inv = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      g(i, j) = inv * (p_row(i, j) + p_col(i, j) - (i == j ? 2.0 : 0.0));
    }
  }
  const double c = std::exp(logit_scale);
  MatrixD ge_img(n, d_e, 0.0);
  MatrixD ge_txt(n, d_e, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double gij = c * g(i, j);
      for (std::size_t k = 0; k < d_e; ++k) {
        ge_img(i, k) += gij * ft.emb(j, k);
        ge_txt(j, k) += gij * fi.emb(i, k);
      }
    }
  }
  NormalizeBackward(fi, ge_img);
  NormalizeBackward(ft, ge_txt);
  AdapterBackward(fi, image, ge_img, out.grad_a_image, out.grad_b_image);
  AdapterBackward(ft, text, ge_txt, out.grad_a_text, out.grad_b_text);
  return out;
}

LossAndGrads Gradients(const TrainBatch& batch, const ProjectionHead& image_head,
                       const ProjectionHead& text_head,
                       const LoraAdapter& image_adapter,
                       const LoraAdapter& text_adapter, const TrainConfig& config,
                       const DropoutMasks* masks) {
  return LossAndGradients(batch.image_feats.Cast<double>(),
                          batch.text_feats.Cast<double>(),
                          ToParams(image_head, image_adapter),
                          ToParams(text_head, text_adapter), config.logit_scale, masks);
}

}  // namespace artcontext::lora
