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
#include <numbers>

#include "artcontext/error.hpp"
#include "artcontext/kernels.hpp"
#include "artcontext/lora.hpp"

namespace artcontext::lora {
namespace {

kernels::LowRank LowRankOf(const LoraAdapter& adapter) {
  return {adapter.a.data(), adapter.b.data(), adapter.rank, adapter.scale()};
}

void CheckAdapter(const ProjectionHead& head, const LoraAdapter& adapter) {
  if (adapter.d_in() != head.d_in() || adapter.d_out() != head.d_out() ||
      adapter.a.rows() != adapter.rank || adapter.b.cols() != adapter.rank) {
    throw Error(ErrorCode::kDimMismatch,
                "adapter (" + std::to_string(adapter.d_out()) + "x" +
                    std::to_string(adapter.d_in()) + ", r=" +
                    std::to_string(adapter.rank) + ") does not fit head '" +
                    head.name + "' (" + std::to_string(head.d_out()) + "x" +
                    std::to_string(head.d_in()) + ")");
  }
}

}  // namespace

double Rng::Uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - Uniform();  // (0, 1]
  const double u2 = Uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::Below(std::size_t n) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v = 0;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<std::size_t>(v % n);
}

ProjectionHead LoadHead(const fs::path& path, std::string name) {
  const embed::EmbeddingMatrix m = embed::LoadMatrix(path);
  ProjectionHead head;
  head.name = std::move(name);
  head.weight = MatrixF(m.rows(), m.dim);
  head.weight.data() = m.data;
  return head;
}

embed::EmbeddingMatrix HeadToMatrix(const ProjectionHead& head) {
  embed::EmbeddingMatrix m(head.d_in());
  for (std::size_t r = 0; r < head.d_out(); ++r) {
    m.Append("row" + std::to_string(r), head.weight.row(r));
  }
  return m;
}

LoraAdapter InitAdapter(std::size_t d_in, std::size_t d_out, std::size_t rank,
                        float alpha, float dropout_p, std::uint64_t seed,
                        std::string head_name) {
  if (rank == 0 || rank > std::min(d_in, d_out)) {
    throw Error(ErrorCode::kRankTooLarge,
                "rank " + std::to_string(rank) + " must be in [1, min(" +
                    std::to_string(d_in) + ", " + std::to_string(d_out) + ")]");
  }
  if (!(alpha > 0.0f)) throw Error(ErrorCode::kValidation, "alpha must be positive");
  if (!(dropout_p >= 0.0f && dropout_p < 1.0f)) {
    throw Error(ErrorCode::kValidation, "dropout must be in [0, 1)");
  }
  LoraAdapter adapter;
  adapter.head_name = std::move(head_name);
  adapter.rank = rank;
  adapter.alpha = alpha;
  adapter.dropout_p = dropout_p;
  adapter.seed = seed;
  adapter.a = MatrixF(rank, d_in);
  adapter.b = MatrixF(d_out, rank, 0.0f);
  Rng rng(seed);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(rank));
  for (float& v : adapter.a.data()) v = static_cast<float>(stddev * rng.Normal());
  return adapter;
}

std::vector<float> Project(const ProjectionHead& head, const LoraAdapter& adapter,
                           std::span<const float> x, bool train_mode, Rng& rng) {
  CheckAdapter(head, adapter);
  if (x.size() != head.d_in()) {
    throw Error(ErrorCode::kDimMismatch, "input has " + std::to_string(x.size()) +
                                             " entries, head expects " +
                                             std::to_string(head.d_in()));
  }
  std::vector<float> dropped;
  std::span<const float> x_lr = x;
  if (train_mode && adapter.dropout_p > 0.0f) {
    const double keep_scale = 1.0 / (1.0 - adapter.dropout_p);
    dropped.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      dropped[i] = rng.Uniform() < adapter.dropout_p
                       ? 0.0f
                       : static_cast<float>(x[i] * keep_scale);
    }
    x_lr = dropped;
  }
  std::vector<float> out(head.d_out());
  kernels::ProjectVectorLora(x, x_lr, head.weight.data(), head.d_out(), head.d_in(),
                             LowRankOf(adapter), out);
  return out;
}

MatrixF ProjectBatch(const ProjectionHead& head, const LoraAdapter& adapter,
                     const MatrixF& x, bool parallel) {
  CheckAdapter(head, adapter);
  if (x.cols() != head.d_in()) {
    throw Error(ErrorCode::kDimMismatch, "feature dim does not match head");
  }
  MatrixF out(x.rows(), head.d_out());
  if (parallel) {
    kernels::ProjectRowsLoraOmp(x.data(), x.rows(), head.weight.data(), head.d_out(),
                                head.d_in(), LowRankOf(adapter), out.data());
  } else {
    kernels::ProjectRowsLoraSerial(x.data(), x.rows(), head.weight.data(),
                                   head.d_out(), head.d_in(), LowRankOf(adapter),
                                   out.data());
  }
  return out;
}

MatrixF ProjectFrozen(const ProjectionHead& head, const MatrixF& x, bool parallel) {
  if (x.cols() != head.d_in()) {
    throw Error(ErrorCode::kDimMismatch, "feature dim does not match head");
  }
  MatrixF out(x.rows(), head.d_out());
  if (parallel) {
    kernels::ProjectRowsOmp(x.data(), x.rows(), head.weight.data(), head.d_out(),
                            head.d_in(), out.data());
  } else {
    kernels::ProjectRowsSerial(x.data(), x.rows(), head.weight.data(), head.d_out(),
                               head.d_in(), out.data());
  }
  return out;
}

std::vector<double> L2Normalize(std::span<const double> v) {
  double sq = 0.0;
  for (const double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm < kernels::kMinNorm) throw Error(ErrorCode::kZeroVector, "norm < 1e-12");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return out;
}

std::vector<float> L2Normalize(std::span<const float> v) {
  const double norm = std::sqrt(kernels::SquaredNorm(v));
  if (norm < kernels::kMinNorm) throw Error(ErrorCode::kZeroVector, "norm < 1e-12");
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(v[i]) / norm);
  }
  return out;
}

MatrixF Merge(const ProjectionHead& head, const LoraAdapter& adapter) {
  CheckAdapter(head, adapter);
  MatrixF merged = head.weight;
  const double scale = adapter.scale();
  for (std::size_t o = 0; o < head.d_out(); ++o) {
    for (std::size_t c = 0; c < head.d_in(); ++c) {
      double delta = 0.0;
      for (std::size_t k = 0; k < adapter.rank; ++k) {
        delta += static_cast<double>(adapter.b(o, k)) * adapter.a(k, c);
      }
      delta *= scale;
      if (delta != 0.0) {
        merged(o, c) = static_cast<float>(static_cast<double>(head.weight(o, c)) + delta);
      }
    }
  }
  return merged;
}

std::string EncodeAdapter(const LoraAdapter& adapter) {
  ByteWriter w;
  w.Bytes(std::string_view(kLoraMagic, 4));
  w.U32(kLoraVersion);
  w.U32(static_cast<std::uint32_t>(adapter.head_name.size()));
  w.Bytes(adapter.head_name);
  w.U32(static_cast<std::uint32_t>(adapter.d_in()));
  w.U32(static_cast<std::uint32_t>(adapter.d_out()));
  w.U32(static_cast<std::uint32_t>(adapter.rank));
  w.F32(adapter.alpha);
  w.F32(adapter.dropout_p);
  w.U64(adapter.seed);
  w.Bytes(std::string_view(reinterpret_cast<const char*>(adapter.config_digest.data()),
                           adapter.config_digest.size()));
  for (const float v : adapter.a.data()) w.F32(v);
  for (const float v : adapter.b.data()) w.F32(v);
  return w.str();
}

LoraAdapter DecodeAdapter(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kLoraMagic, 4) != 0) {
    throw FormatError(0, "bad magic, expected \"ALRA\"");
  }
  ByteReader r(bytes);
  r.Bytes(4);
  const std::uint32_t version = r.U32();
  if (version != kLoraVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                ".lora version " + std::to_string(version) + " (reader supports " +
                    std::to_string(kLoraVersion) + ")");
  }
  LoraAdapter adapter;
  const std::uint32_t name_len = r.U32();
  adapter.head_name = std::string(r.Bytes(name_len));
  const std::uint64_t dims_offset = r.offset();
  const std::uint32_t d_in = r.U32();
  const std::uint32_t d_out = r.U32();
  const std::uint32_t rank = r.U32();
  if (rank == 0 || rank > std::min(d_in, d_out)) {
    throw FormatError(dims_offset, "inconsistent dims/rank in adapter header");
  }
  adapter.rank = rank;
  adapter.alpha = r.F32();
  adapter.dropout_p = r.F32();
  adapter.seed = r.U64();
  const std::string_view digest = r.Bytes(adapter.config_digest.size());
  std::memcpy(adapter.config_digest.data(), digest.data(), digest.size());
  const std::uint64_t payload = (std::uint64_t{rank} * d_in + std::uint64_t{d_out} * rank) * 4;
  if (r.remaining() != payload) {
    throw FormatError(r.offset(), "payload has " + std::to_string(r.remaining()) +
                                      " bytes, header implies " +
                                      std::to_string(payload));
  }
  adapter.a = MatrixF(rank, d_in);
  adapter.b = MatrixF(d_out, rank);
  for (float& v : adapter.a.data()) v = r.F32();
  for (float& v : adapter.b.data()) v = r.F32();
  return adapter;
}

void SaveAdapter(const LoraAdapter& adapter, const fs::path& path) {
  WriteFileAtomic(path, EncodeAdapter(adapter));
}

LoraAdapter LoadAdapter(const fs::path& path) { return DecodeAdapter(ReadFile(path)); }

}  // namespace artcontext::lora
