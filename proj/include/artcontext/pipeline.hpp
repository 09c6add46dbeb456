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

#ifndef ARTCONTEXT_PIPELINE_HPP_
#define ARTCONTEXT_PIPELINE_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "artcontext/align.hpp"
#include "artcontext/embed.hpp"
#include "artcontext/eval.hpp"
#include "artcontext/io.hpp"
#include "artcontext/lora.hpp"

namespace artcontext::pipeline {

inline constexpr const char* kToolVersion = "0.3.0";

// Stage order; each stage consumes the outputs of the one before it.
inline constexpr std::string_view kStages[] = {"harvest", "extract", "embed",
                                               "align",   "train",   "eval"};

struct PipelineConfig {
  std::string api_base;
  fs::path roster;
  fs::path topics;
  double rho = 1.0;
  std::optional<fs::path> fixture;
  fs::path corpus;
  std::uint64_t max_bytes = 10ull * 1024 * 1024;
  bool dedup = false;
  std::string provider = "test";
  std::size_t embed_batch = embed::kDefaultEmbedBatch;
  fs::path paintings;
  std::optional<double> min_sim;
  fs::path img_feats;
  fs::path txt_feats;
  fs::path img_proj;
  fs::path txt_proj;
  lora::TrainConfig train;
  fs::path eval_queries;
  fs::path out_root;

  // INI-style file: [section] then key = value. Relative paths resolve
  // against the file's directory.
  static PipelineConfig Load(const fs::path& path);
  // Applies "section.key=value" overrides (CLI flags win over the file).
  void Override(std::string_view dotted_key, std::string_view value,
                const fs::path& base = {});
  // Checks the inputs `stage` needs.
  void Validate(std::string_view stage) const;
};

struct Counts {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t errored = 0;
  bool Reconciles() const { return out + errored == in; }
};

struct StageManifest {
  std::string stage;
  std::string tool_version = kToolVersion;
  std::vector<std::pair<fs::path, std::string>> inputs;   // path, sha256
  std::vector<std::pair<fs::path, std::string>> outputs;  // path, sha256
  Counts counts;
  double wall_clock_s = 0.0;
  std::string started_at;
  bool forced = false;
  std::vector<std::string> stale;
  Json extra;

  Json ToJson() const;
  static StageManifest FromJson(const Json& j);
};

fs::path StageDir(const PipelineConfig& config, std::string_view stage);
fs::path ManifestPath(const PipelineConfig& config, std::string_view stage);

// Problems with the upstream manifest of `stage` (missing, or outputs whose
// digests no longer match); empty when inputs are fresh.
std::vector<std::string> CheckUpstream(const PipelineConfig& config,
                                       std::string_view stage);

// Runs exactly one stage and writes its manifest. Throws StaleInput unless
// `force`; module errors are wrapped as StageFailure. Unset feature and head
// paths default to <out_root>/features/{img,txt,Wimg,Wtxt}.emb.
StageManifest RunStage(std::string_view stage, const PipelineConfig& config,
                       bool force = false);

// Projection-head scoring shared by eval, score and retrieve. A null
// adapter selects the frozen baseline heads.
struct Heads {
  lora::ProjectionHead image;
  lora::ProjectionHead text;
};
Heads LoadHeads(const fs::path& img_proj, const fs::path& txt_proj);

struct Adapters {
  lora::LoraAdapter image;
  lora::LoraAdapter text;
};
Adapters LoadAdapters(const fs::path& dir);
void SaveAdapters(const Adapters& adapters, const fs::path& dir);

// Projects and L2-normalizes rows of `features` with the head (and adapter).
embed::EmbeddingMatrix EmbedWithHead(const embed::EmbeddingMatrix& features,
                                     const lora::ProjectionHead& head,
                                     const lora::LoraAdapter* adapter);

// Dim-1 score matrix keyed by eval::ScoreKey(qid, candidate).
embed::EmbeddingMatrix ScoreQueries(const std::vector<eval::EvalQuery>& queries,
                                    const embed::EmbeddingMatrix& image_feats,
                                    const embed::EmbeddingMatrix& text_feats,
                                    const Heads& heads, const Adapters* adapters);

struct RetrievedSentence {
  std::size_t rank = 0;
  std::string context_id;
  double score = 0.0;
  std::string sentence;
};

struct Retrieval {
  std::string qid;
  std::string query_text;
  std::string mode;  // "clip-baseline", "clip-adapted" or "text"
  std::vector<RetrievedSentence> sentences;
  Json ToJson() const;
  std::string ToText() const;
};

struct RetrieveInputs {
  fs::path paintings;
  fs::path contexts;
  // Text mode: provider + context vectors.
  std::string provider = "test";
  fs::path context_vectors;
  // Projection-head mode, used when image features are given.
  std::optional<fs::path> img_feats;
  fs::path txt_feats;
  fs::path img_proj;
  fs::path txt_proj;
  std::optional<fs::path> adapters;
};

// Top-k sentences among the painting's artist contexts. k larger than the
// candidate count returns every candidate. Throws UnknownPainting.
Retrieval RetrieveTopK(std::string_view qid, std::size_t k,
                       const RetrieveInputs& inputs);

struct SyntheticDims {
  std::size_t image_dim = 24;
  std::size_t text_dim = 20;
  std::size_t embed_dim = 16;
};

// Stand-in encoder outputs for fixture runs. Context text features hash the
// window text; a painting's text feature mixes the hashes of its label and its
// aligned window; its image feature is a fixed noisy linear map of that text
// feature. Writes img.emb, txt.emb, Wimg.emb and Wtxt.emb into `out_dir`.
void SynthesizeFeatures(const std::vector<align::AlignedPair>& pairs,
                        const std::vector<extract::ContextUnit>& contexts,
                        const SyntheticDims& dims, std::uint64_t seed,
                        const fs::path& out_dir);

}  // namespace artcontext::pipeline

#endif  // ARTCONTEXT_PIPELINE_HPP_
