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
#include <limits>
#include <set>
#include <sstream>
#include <unordered_set>

#include "artcontext/error.hpp"
#include "artcontext/kernels.hpp"
#include "artcontext/pipeline.hpp"
#include "artcontext/text.hpp"

namespace artcontext::pipeline {
namespace {

MatrixF ToMatrix(const embed::EmbeddingMatrix& m) {
  MatrixF x(m.rows(), m.dim);
  x.data() = m.data;
  return x;
}

embed::EmbeddingMatrix SelectIds(const embed::EmbeddingMatrix& m,
                                 const std::vector<std::string>& ids,
                                 std::string_view what) {
  const auto index = m.Index();
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = index.find(id);
    if (it == index.end()) {
      throw Error(ErrorCode::kValidation, "no " + std::string(what) + " for " + id);
    }
    rows.push_back(it->second);
  }
  return m.Select(rows);
}

double Score(std::span<const float> q, std::span<const float> c) {
  const double qn = std::sqrt(kernels::SquaredNorm(q));
  const double s = qn < kernels::kMinNorm
                       ? std::nan("")
                       : kernels::CosineFromStats(kernels::DotAndNorm(q, c), qn);
  return std::isnan(s) ? -std::numeric_limits<double>::infinity() : s;
}

}  // namespace

Heads LoadHeads(const fs::path& img_proj, const fs::path& txt_proj) {
  return {lora::LoadHead(img_proj, "visual"), lora::LoadHead(txt_proj, "text")};
}

Adapters LoadAdapters(const fs::path& dir) {
  return {lora::LoadAdapter(dir / "visual.lora"), lora::LoadAdapter(dir / "text.lora")};
}

void SaveAdapters(const Adapters& adapters, const fs::path& dir) {
  lora::SaveAdapter(adapters.image, dir / "visual.lora");
  lora::SaveAdapter(adapters.text, dir / "text.lora");
}

embed::EmbeddingMatrix EmbedWithHead(const embed::EmbeddingMatrix& features,
                                     const lora::ProjectionHead& head,
                                     const lora::LoraAdapter* adapter) {
  if (features.dim != head.d_in()) {
    throw Error(ErrorCode::kDimMismatch,
                "features have dim " + std::to_string(features.dim) + ", head " +
                    head.name + " expects " + std::to_string(head.d_in()));
  }
  const MatrixF x = ToMatrix(features);
  const MatrixF y = adapter != nullptr ? lora::ProjectBatch(head, *adapter, x)
                                       : lora::ProjectFrozen(head, x);
  embed::EmbeddingMatrix out(head.d_out());
  out.ids = features.ids;
  out.data = y.data();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const auto row = out.row(r);
    if (std::sqrt(kernels::SquaredNorm(row)) < kernels::kMinNorm) continue;
    const auto unit = lora::L2Normalize(std::span<const float>(row));
    std::ranges::copy(unit, row.begin());
  }
  return out;
}

embed::EmbeddingMatrix ScoreQueries(const std::vector<eval::EvalQuery>& queries,
                                    const embed::EmbeddingMatrix& image_feats,
                                    const embed::EmbeddingMatrix& text_feats,
                                    const Heads& heads, const Adapters* adapters) {
  std::vector<std::string> qids;
  std::vector<std::string> cands;
  std::unordered_set<std::string> seen_q;
  std::unordered_set<std::string> seen_c;
  for (const auto& q : queries) {
    if (seen_q.insert(q.qid).second) qids.push_back(q.qid);
    for (const auto& c : q.candidate_ids) {
      if (seen_c.insert(c).second) cands.push_back(c);
    }
  }
  const auto img = EmbedWithHead(SelectIds(image_feats, qids, "image features"),
                                 heads.image, adapters ? &adapters->image : nullptr);
  const auto txt = EmbedWithHead(SelectIds(text_feats, cands, "text features"),
                                 heads.text, adapters ? &adapters->text : nullptr);
  if (img.dim != txt.dim) {
    throw Error(ErrorCode::kDimMismatch, "image and text heads project to different dims");
  }
  const auto img_index = img.Index();
  const auto txt_index = txt.Index();
  embed::EmbeddingMatrix scores(1);
  std::unordered_set<std::string> written;
  for (const auto& q : queries) {
    const auto qrow = img.row(img_index.at(q.qid));
    for (const auto& c : q.candidate_ids) {
      std::string key = eval::ScoreKey(q.qid, c);
      if (!written.insert(key).second) continue;
      const float s = static_cast<float>(Score(qrow, txt.row(txt_index.at(c))));
      scores.Append(std::move(key), std::span<const float>(&s, 1));
    }
  }
  return scores;
}

Json Retrieval::ToJson() const {
  Json j;
  j["qid"] = qid;
  j["query_text"] = query_text;
  j["mode"] = mode;
  j["sentences"] = Json::array();
  for (const auto& s : sentences) {
    j["sentences"].push_back({{"rank", s.rank},
                              {"context_id", s.context_id},
                              {"score", s.score},
                              {"sentence", s.sentence}});
  }
  return j;
}

std::string Retrieval::ToText() const {
  std::ostringstream out;
  out << qid << "  " << query_text << "  [" << mode << "]\n";
  for (const auto& s : sentences) {
    char score[32];
    std::snprintf(score, sizeof(score), "%.4f", s.score);
    out << "  " << s.rank << ". (" << score << ") " << s.sentence << "  ["
        << s.context_id << "]\n";
  }
  return out.str();
}

Retrieval RetrieveTopK(std::string_view qid, std::size_t k, const RetrieveInputs& inputs) {
  std::optional<align::PaintingRecord> painting;
  for (const auto& j : ReadJsonl(inputs.paintings)) {
    auto p = align::PaintingFromJson(j);
    if (p.qid == qid) {
      painting = std::move(p);
      break;
    }
  }
  if (!painting) throw Error(ErrorCode::kUnknownPainting, "unknown painting " + std::string(qid));

  const std::string key = text::NameKey(painting->creator_name);
  std::vector<extract::ContextUnit> units;
  for (const auto& j : ReadJsonl(inputs.contexts)) {
    auto unit = extract::ContextFromJson(j);
    for (const auto& name : unit.artist_names) {
      if (text::NameKey(name) == key) {
        units.push_back(std::move(unit));
        break;
      }
    }
  }
  if (units.empty()) {
    throw Error(ErrorCode::kNoContexts, "no contexts for " + painting->creator_name);
  }
  std::vector<std::string> ids;
  ids.reserve(units.size());
  for (const auto& u : units) ids.push_back(u.Id());

  Retrieval result;
  result.qid = painting->qid;
  result.query_text = align::RenderQuery(*painting);
  std::vector<float> query;
  embed::EmbeddingMatrix candidates;
  if (inputs.img_feats) {
    const Heads heads = LoadHeads(inputs.img_proj, inputs.txt_proj);
    std::optional<Adapters> adapters;
    if (inputs.adapters) adapters = LoadAdapters(*inputs.adapters);
    result.mode = adapters ? "clip-adapted" : "clip-baseline";
    const auto image = SelectIds(embed::LoadMatrix(*inputs.img_feats), {result.qid},
                                 "image features");
    const auto q = EmbedWithHead(image, heads.image, adapters ? &adapters->image : nullptr);
    query.assign(q.data.begin(), q.data.end());
    candidates = EmbedWithHead(
        SelectIds(embed::LoadMatrix(inputs.txt_feats), ids, "text features"), heads.text,
        adapters ? &adapters->text : nullptr);
  } else {
    result.mode = "text";
    auto provider = embed::MakeProvider(inputs.provider);
    const embed::TextItem item{result.qid, result.query_text};
    const auto q = provider->Embed(std::span<const embed::TextItem>(&item, 1));
    query.assign(q.data.begin(), q.data.end());
    candidates = SelectIds(embed::LoadMatrix(inputs.context_vectors), ids, "context vector");
  }
  const auto ranked = eval::RankCandidates(query, candidates, std::min(k, candidates.rows()));
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    result.sentences.push_back(
        {i + 1, ranked[i].id, ranked[i].score, units[ranked[i].index].sentence});
  }
  return result;
}

void SynthesizeFeatures(const std::vector<align::AlignedPair>& pairs,
                        const std::vector<extract::ContextUnit>& contexts,
                        const SyntheticDims& dims, std::uint64_t seed,
                        const fs::path& out_dir) {
  lora::Rng rng(seed);
  const auto random_matrix = [&rng](std::size_t rows, std::size_t cols) {
    MatrixF m(rows, cols);
    const double sd = 1.0 / std::sqrt(static_cast<double>(cols));
    for (float& v : m.data()) v = static_cast<float>(rng.Normal() * sd);
    return m;
  };
  const MatrixF mix = random_matrix(dims.image_dim, dims.text_dim);
  const lora::ProjectionHead w_img{"visual", random_matrix(dims.embed_dim, dims.image_dim)};
  const lora::ProjectionHead w_txt{"text", random_matrix(dims.embed_dim, dims.text_dim)};

  embed::EmbeddingMatrix text(dims.text_dim);
  embed::EmbeddingMatrix image(dims.image_dim);
  std::set<std::string> written;
  for (const auto& p : pairs) {
    if (!written.insert(p.qid).second) continue;
    const auto label = embed::HashUnitVector(p.label_text, dims.text_dim);
    const auto window = embed::HashUnitVector(p.sentence, dims.text_dim);
    std::vector<float> sum(dims.text_dim);
    for (std::size_t j = 0; j < dims.text_dim; ++j) sum[j] = label[j] + window[j];
    const auto t = lora::L2Normalize(std::span<const float>(sum));
    text.Append(p.qid, t);
    std::vector<float> v(dims.image_dim);
    for (std::size_t i = 0; i < dims.image_dim; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < dims.text_dim; ++j) acc += mix(i, j) * t[j];
      v[i] = static_cast<float>(acc + 0.1 * rng.Normal());
    }
    image.Append(p.qid, v);
  }
  for (const auto& c : contexts) {
    const std::string id = c.Id();
    if (!written.insert(id).second) continue;
    text.Append(id, embed::HashUnitVector(c.window_text, dims.text_dim));
  }
  fs::create_directories(out_dir);
  embed::SaveMatrix(image, out_dir / "img.emb");
  embed::SaveMatrix(text, out_dir / "txt.emb");
  embed::SaveMatrix(lora::HeadToMatrix(w_img), out_dir / "Wimg.emb");
  embed::SaveMatrix(lora::HeadToMatrix(w_txt), out_dir / "Wtxt.emb");
}

}  // namespace artcontext::pipeline
