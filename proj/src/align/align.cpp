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
#include <map>
#include <set>

#include "artcontext/align.hpp"
#include "artcontext/error.hpp"
#include "artcontext/text.hpp"

namespace artcontext::align {

PaintingRecord PaintingFromJson(const Json& j) {
  PaintingRecord p;
  p.qid = j.at("qid").get<std::string>();
  p.title = j.at("title").get<std::string>();
  p.creator_name = j.at("creator_name").get<std::string>();
  p.creator_qid = j.value("creator_qid", "");
  if (j.contains("year") && j.at("year").is_number_integer()) {
    p.year = j.at("year").get<int>();
  }
  if (j.contains("depicts") && j.at("depicts").is_array()) {
    p.depicts = j.at("depicts").get<std::vector<std::string>>();
  }
  if (j.contains("movement") && j.at("movement").is_string()) {
    p.movement = j.at("movement").get<std::string>();
  }
  p.link_count = j.value("link_count", std::int64_t{0});
  p.image_ref = j.value("image_ref", "");
  if (p.qid.empty() || p.title.empty() || p.creator_name.empty()) {
    throw Error(ErrorCode::kValidation, "painting needs qid, title and creator_name");
  }
  if (p.link_count < 0) {
    throw Error(ErrorCode::kValidation, "painting " + p.qid + ": negative link_count");
  }
  return p;
}

Json ToJson(const PaintingRecord& p) {
  return Json{{"qid", p.qid},
              {"title", p.title},
              {"creator_name", p.creator_name},
              {"creator_qid", p.creator_qid},
              {"year", p.year ? Json(*p.year) : Json(nullptr)},
              {"depicts", p.depicts},
              {"movement", p.movement ? Json(*p.movement) : Json(nullptr)},
              {"link_count", p.link_count},
              {"image_ref", p.image_ref}};
}

Json ToJson(const AlignedPair& p) {
  return Json{{"qid", p.qid},
              {"context_id", p.context_id},
              {"sentence", p.sentence},
              {"similarity", p.similarity},
              {"label_text", p.label_text},
              {"image_ref", p.image_ref}};
}

AlignedPair PairFromJson(const Json& j) {
  AlignedPair p;
  p.qid = j.at("qid").get<std::string>();
  p.context_id = j.at("context_id").get<std::string>();
  p.sentence = j.at("sentence").get<std::string>();
  p.similarity = j.at("similarity").get<double>();
  p.label_text = j.at("label_text").get<std::string>();
  p.image_ref = j.value("image_ref", "");
  return p;
}

std::string RenderQuery(const PaintingRecord& p) {
  std::string out = text::CollapseWhitespace(p.title) + " is a ";
  if (p.year) out += std::to_string(*p.year) + " ";
  out += "painting by " + text::CollapseWhitespace(p.creator_name);
  std::vector<std::string> depicts;
  for (const auto& d : p.depicts) {
    std::string t = text::CollapseWhitespace(d);
    if (!t.empty()) depicts.push_back(std::move(t));
  }
  if (!depicts.empty()) {
    out += " depicting ";
    for (std::size_t i = 0; i < depicts.size(); ++i) {
      if (i > 0) out += ", ";
      out += depicts[i];
    }
  }
  return out;
}

std::string BuildLabel(const PaintingRecord& p, std::string_view sentence) {
  std::string out = RenderQuery(p);
  if (!sentence.empty()) {
    out += kLabelSeparator;
    out += sentence;
  }
  return out;
}

AlignedQuery AlignPainting(const PaintingRecord& p, const ArtistContexts& contexts,
                           embed::EmbeddingProvider& provider) {
  if (contexts.units.empty() || contexts.vectors.rows() == 0) {
    throw Error(ErrorCode::kNoContexts, "no contexts for creator of " + p.qid);
  }
  if (contexts.units.size() != contexts.vectors.rows()) {
    throw Error(ErrorCode::kValidation, "contexts and vectors are not row-aligned");
  }
  const embed::TextItem item{p.qid, RenderQuery(p)};
  embed::EmbeddingMatrix q;
  try {
    q = provider.Embed(std::span<const embed::TextItem>(&item, 1));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kProvider) throw;
    throw Error(ErrorCode::kProvider, e.what());
  }
  if (q.dim != contexts.vectors.dim) {
    throw Error(ErrorCode::kDimMismatch, "query dim " + std::to_string(q.dim) +
                                             " vs context dim " +
                                             std::to_string(contexts.vectors.dim));
  }
  const embed::Match best = embed::ArgmaxSimilarity(q.row(0), contexts.vectors);
  const auto& unit = contexts.units[best.index];
  AlignedQuery out;
  out.pair.qid = p.qid;
  out.pair.context_id = unit.Id();
  out.pair.sentence = unit.window_text;
  out.pair.similarity = best.score;
  out.pair.label_text = BuildLabel(p, unit.window_text);
  out.pair.image_ref = p.image_ref;
  out.query_vector.assign(q.row(0).begin(), q.row(0).end());
  return out;
}

AlignmentResult AlignAll(const std::vector<PaintingRecord>& paintings,
                         const std::vector<extract::ContextUnit>& contexts,
                         const embed::EmbeddingMatrix& context_vectors,
                         embed::EmbeddingProvider& provider,
                         const AlignOptions& options) {
  const auto vector_index = context_vectors.Index();
  std::map<std::string, ArtistContexts> groups;
  std::map<std::string, std::vector<std::size_t>> group_rows;
  for (const auto& unit : contexts) {
    const auto it = vector_index.find(unit.Id());
    if (it == vector_index.end()) {
      throw Error(ErrorCode::kValidation, "context " + unit.Id() + " has no vector");
    }
    std::set<std::string> keys;
    for (const auto& name : unit.artist_names) keys.insert(text::NameKey(name));
    for (const auto& key : keys) {
      groups[key].units.push_back(unit);
      group_rows[key].push_back(it->second);
    }
  }
  for (auto& [key, group] : groups) {
    group.vectors = context_vectors.Select(group_rows[key]);
  }

  std::vector<const PaintingRecord*> order;
  for (const auto& p : paintings) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* a, const auto* b) { return a->qid < b->qid; });

  AlignmentResult result;
  result.paintings_in = paintings.size();
  result.query_vectors = embed::EmbeddingMatrix(provider.dim());
  std::set<std::string> seen;
  for (const PaintingRecord* p : order) {
    if (!seen.insert(p->qid).second) {
      result.unmatched.push_back({p->qid, "duplicate_qid"});
      continue;
    }
    const auto group = groups.find(text::NameKey(p->creator_name));
    if (group == groups.end()) {
      result.unmatched.push_back({p->qid, "no_contexts"});
      continue;
    }
    AlignedQuery aligned;
    try {
      aligned = AlignPainting(*p, group->second, provider);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kAllDegenerate) {
        result.unmatched.push_back({p->qid, "all_degenerate"});
        continue;
      }
      if (e.code() == ErrorCode::kZeroVector) {
        result.unmatched.push_back({p->qid, "degenerate_query"});
        continue;
      }
      throw;
    }
    if (options.min_similarity && aligned.pair.similarity < *options.min_similarity) {
      result.unmatched.push_back({p->qid, "below_min_sim"});
      continue;
    }
    result.query_vectors.Append(p->qid, aligned.query_vector);
    result.pairs.push_back(std::move(aligned.pair));
  }
  return result;
}

void WriteAlignment(const AlignmentResult& result, const fs::path& out_dir) {
  std::vector<Json> pairs;
  for (const auto& p : result.pairs) pairs.push_back(ToJson(p));
  std::vector<Json> unmatched;
  for (const auto& u : result.unmatched) {
    unmatched.push_back({{"qid", u.qid}, {"reason", u.reason}});
  }
  WriteFileAtomic(out_dir / "aligned_pairs.jsonl", ToJsonl(pairs));
  WriteFileAtomic(out_dir / "unmatched.jsonl", ToJsonl(unmatched));
  embed::SaveMatrix(result.query_vectors, out_dir / "queries.emb");
}

}  // namespace artcontext::align
