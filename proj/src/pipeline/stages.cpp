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
#include <chrono>
#include <iterator>

#include "artcontext/corpus.hpp"
#include "artcontext/error.hpp"
#include "artcontext/extract.hpp"
#include "artcontext/pipeline.hpp"

namespace artcontext::pipeline {
namespace {

using Digests = std::vector<std::pair<fs::path, std::string>>;

constexpr const char* kManifestName = "stage_manifest.json";

// Keys dropped before hashing JSON manifests so reruns compare equal.
void StripTimestamps(Json& j) {
  if (j.is_object()) {
    for (const char* key : {"started_at", "finished_at", "wall_clock_s"}) j.erase(key);
    for (auto& [k, v] : j.items()) StripTimestamps(v);
  } else if (j.is_array()) {
    for (auto& v : j) StripTimestamps(v);
  }
}

std::string ArtifactDigest(const fs::path& path) {
  if (path.filename().string().ends_with("manifest.json")) {
    Json j = Json::parse(ReadFile(path), nullptr, false);
    if (!j.is_discarded()) {
      StripTimestamps(j);
      return Sha256Hex(j.dump());
    }
  }
  return Sha256File(path);
}

Digests DigestAll(const std::vector<fs::path>& paths) {
  Digests out;
  for (const auto& p : paths) out.emplace_back(p, ArtifactDigest(p));
  return out;
}

Json DigestsToJson(const Digests& d) {
  Json arr = Json::array();
  for (const auto& [p, h] : d) arr.push_back({{"path", p.string()}, {"sha256", h}});
  return arr;
}

Digests DigestsFromJson(const Json& j) {
  Digests out;
  for (const auto& e : j) {
    out.emplace_back(fs::path(e.at("path").get<std::string>()),
                     e.at("sha256").get<std::string>());
  }
  return out;
}

std::string_view Upstream(std::string_view stage) {
  const auto* it = std::find(std::begin(kStages), std::end(kStages), stage);
  if (it == std::end(kStages)) {
    throw Error(ErrorCode::kValidation, "unknown stage: " + std::string(stage));
  }
  return it == std::begin(kStages) ? std::string_view{} : *(it - 1);
}

void CheckRunSeed(const PipelineConfig& config) {
  const fs::path path = config.out_root / "run.json";
  if (fs::exists(path)) {
    const Json j = Json::parse(ReadFile(path));
    const auto seed = j.at("seed").get<std::uint64_t>();
    if (seed != config.train.seed) {
      throw Error(ErrorCode::kValidation,
                  "run directory " + config.out_root.string() + " was created with seed " +
                      std::to_string(seed) + "; use a new output root to change it");
    }
    return;
  }
  fs::create_directories(config.out_root);
  WriteFileAtomic(path, Json{{"seed", config.train.seed}}.dump(2) + "\n");
}

struct StageRun {
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  Counts counts;
  Json extra = Json::object();
};

std::vector<extract::ContextUnit> LoadContexts(const fs::path& path) {
  std::vector<extract::ContextUnit> out;
  for (const auto& j : ReadJsonl(path)) out.push_back(extract::ContextFromJson(j));
  return out;
}

StageRun RunHarvest(const PipelineConfig& c, const fs::path& dir) {
  StageRun run;
  const auto roster = corpus::LoadRoster(c.roster);
  const auto filter = corpus::LoadTopicFilter(c.topics, c.rho);
  corpus::HarvestOptions options;
  options.api_base = c.api_base;
  std::unique_ptr<corpus::WorksClient> client;
  if (c.fixture) {
    client = std::make_unique<corpus::FixtureClient>(*c.fixture);
  } else {
    client = std::make_unique<corpus::HttpWorksClient>(c.api_base);
  }
  const auto result = corpus::Harvest(roster, filter, *client, options);
  corpus::WriteHarvest(result, dir);
  run.inputs = {c.roster, c.topics};
  run.outputs = {dir / "works.jsonl", dir / "harvest_manifest.json"};
  for (const auto& a : result.artists) {
    run.counts.in += a.works_seen;
    run.counts.out += a.works_kept;
    run.counts.errored += a.works_filtered + a.duplicates;
  }
  run.extra["artists"] = roster.size();
  run.extra["client"] = c.fixture ? "fixture" : "http";
  run.extra["rho"] = c.rho;
  return run;
}

StageRun RunExtract(const PipelineConfig& c, const fs::path& dir) {
  StageRun run;
  const fs::path works = StageDir(c, "harvest") / "works.jsonl";
  extract::ExtractOptions options;
  options.max_bytes = c.max_bytes;
  options.dedup = c.dedup;
  extract::ExtractStats stats;
  const auto contexts = extract::ExtractCorpus(c.corpus, ReadJsonl(works),
                                               extract::RuleSegmenter(), options, &stats);
  std::vector<Json> rows;
  rows.reserve(contexts.size());
  for (const auto& u : contexts) rows.push_back(extract::ToJson(u));
  WriteFileAtomic(dir / "contexts.jsonl", ToJsonl(rows));
  WriteFileAtomic(dir / "extract_manifest.json", stats.ToJson().dump(2) + "\n");
  run.inputs = {works};
  run.outputs = {dir / "contexts.jsonl", dir / "extract_manifest.json"};
  run.counts = {stats.documents_in, stats.documents_accepted,
                stats.documents_rejected_size + stats.documents_missing};
  run.extra = stats.ToJson();
  run.extra["abbreviation_list_version"] = extract::kAbbreviationListVersion;
  return run;
}

StageRun RunEmbed(const PipelineConfig& c, const fs::path& dir) {
  StageRun run;
  const fs::path contexts_path = StageDir(c, "extract") / "contexts.jsonl";
  const auto contexts = LoadContexts(contexts_path);
  auto provider = embed::MakeProvider(c.provider);
  const auto vectors = embed::EmbedContexts(*provider, contexts, c.embed_batch);
  embed::SaveMatrix(vectors, dir / "contexts.emb");
  run.inputs = {contexts_path};
  run.outputs = {dir / "contexts.emb"};
  run.counts = {contexts.size(), vectors.rows(), contexts.size() - vectors.rows()};
  run.extra["provider"] = provider->model_name();
  run.extra["dim"] = provider->dim();
  run.extra["batch"] = c.embed_batch;
  return run;
}

StageRun RunAlign(const PipelineConfig& c, const fs::path& dir) {
  StageRun run;
  const fs::path contexts_path = StageDir(c, "extract") / "contexts.jsonl";
  const fs::path vectors_path = StageDir(c, "embed") / "contexts.emb";
  std::vector<align::PaintingRecord> paintings;
  for (const auto& j : ReadJsonl(c.paintings)) {
    paintings.push_back(align::PaintingFromJson(j));
  }
  auto provider = embed::MakeProvider(c.provider);
  align::AlignOptions options;
  options.min_similarity = c.min_sim;
  const auto result = align::AlignAll(paintings, LoadContexts(contexts_path),
                                      embed::LoadMatrix(vectors_path), *provider,
                                      options);
  align::WriteAlignment(result, dir);
  run.inputs = {c.paintings, contexts_path, vectors_path};
  run.outputs = {dir / "aligned_pairs.jsonl", dir / "unmatched.jsonl",
                 dir / "queries.emb"};
  run.counts = {result.paintings_in, result.pairs.size(), result.unmatched.size()};
  Json reasons = Json::object();
  for (const auto& u : result.unmatched) {
    reasons[u.reason] = reasons.value(u.reason, 0) + 1;
  }
  run.extra["unmatched_reasons"] = reasons;
  run.extra["provider"] = provider->model_name();
  return run;
}

StageRun RunTrain(const PipelineConfig& c, const fs::path& dir) {
  StageRun run;
  const fs::path pairs_path = StageDir(c, "align") / "aligned_pairs.jsonl";
  std::vector<std::string> keys;
  for (const auto& j : ReadJsonl(pairs_path)) {
    keys.push_back(align::PairFromJson(j).qid);
  }
  const Heads heads = LoadHeads(c.img_proj, c.txt_proj);
  std::vector<std::string> missing;
  const auto pairs = lora::JoinFeatures(keys, embed::LoadMatrix(c.img_feats),
                                        embed::LoadMatrix(c.txt_feats), &missing);
  const auto result = lora::Train(pairs, heads.image, heads.text, c.train);
  SaveAdapters({result.image_adapter, result.text_adapter}, dir);
  Json history;
  history["loss_history"] = result.loss_history;
  history["epoch_batch_loss"] = result.epoch_batch_loss;
  history["config"] = c.train.ToJson();
  WriteFileAtomic(dir / "loss_history.json", history.dump(2) + "\n");
  run.inputs = {pairs_path, c.img_feats, c.txt_feats, c.img_proj, c.txt_proj};
  run.outputs = {dir / "visual.lora", dir / "text.lora", dir / "loss_history.json"};
  run.counts = {keys.size(), pairs.keys.size(), missing.size()};
  run.extra["missing_features"] = missing;
  run.extra["initial_loss"] = result.loss_history.front();
  run.extra["final_loss"] = result.loss_history.back();
  return run;
}

StageRun RunEval(const PipelineConfig& c, const fs::path& dir) {
  StageRun run;
  const fs::path train_dir = StageDir(c, "train");
  std::vector<eval::EvalQuery> queries;
  for (const auto& j : ReadJsonl(c.eval_queries)) queries.push_back(eval::QueryFromJson(j));
  const auto image = embed::LoadMatrix(c.img_feats);
  const auto text = embed::LoadMatrix(c.txt_feats);
  const Heads heads = LoadHeads(c.img_proj, c.txt_proj);
  const Adapters adapters = LoadAdapters(train_dir);
  const auto baseline = ScoreQueries(queries, image, text, heads, nullptr);
  const auto adapted = ScoreQueries(queries, image, text, heads, &adapters);
  const auto summary = eval::Evaluate(queries, baseline, adapted);
  embed::SaveMatrix(baseline, dir / "baseline_scores.emb");
  embed::SaveMatrix(adapted, dir / "adapted_scores.emb");
  eval::EmitPlotData(summary.baseline, summary.adapted, dir / "pr.csv");
  WriteFileAtomic(dir / "eval_summary.json", summary.ToJson().dump(2) + "\n");
  run.inputs = {c.eval_queries, c.img_feats, c.txt_feats, c.img_proj, c.txt_proj,
                train_dir / "visual.lora", train_dir / "text.lora"};
  run.outputs = {dir / "baseline_scores.emb", dir / "adapted_scores.emb",
                 dir / "pr.csv", dir / "eval_summary.json"};
  run.counts = {queries.size(), queries.size(), 0};
  run.extra["mean_ap_baseline"] = summary.mean_ap_baseline;
  run.extra["mean_ap_adapted"] = summary.mean_ap_adapted;
  return run;
}

StageRun Dispatch(std::string_view stage, const PipelineConfig& c, const fs::path& dir) {
  if (stage == "harvest") return RunHarvest(c, dir);
  if (stage == "extract") return RunExtract(c, dir);
  if (stage == "embed") return RunEmbed(c, dir);
  if (stage == "align") return RunAlign(c, dir);
  if (stage == "train") return RunTrain(c, dir);
  return RunEval(c, dir);
}

}  // namespace

Json StageManifest::ToJson() const {
  Json j;
  j["stage"] = stage;
  j["tool_version"] = tool_version;
  j["inputs"] = DigestsToJson(inputs);
  j["outputs"] = DigestsToJson(outputs);
  j["counts"] = {{"records_in", counts.in},
                 {"records_out", counts.out},
                 {"records_errored", counts.errored},
                 {"reconciles", counts.Reconciles()}};
  j["wall_clock_s"] = wall_clock_s;
  j["started_at"] = started_at;
  j["forced"] = forced;
  j["stale"] = stale;
  j["extra"] = extra.is_null() ? Json::object() : extra;
  return j;
}

StageManifest StageManifest::FromJson(const Json& j) {
  StageManifest m;
  m.stage = j.at("stage").get<std::string>();
  m.tool_version = j.at("tool_version").get<std::string>();
  m.inputs = DigestsFromJson(j.at("inputs"));
  m.outputs = DigestsFromJson(j.at("outputs"));
  const auto& counts = j.at("counts");
  m.counts = {counts.at("records_in").get<std::size_t>(),
              counts.at("records_out").get<std::size_t>(),
              counts.at("records_errored").get<std::size_t>()};
  m.wall_clock_s = j.value("wall_clock_s", 0.0);
  m.started_at = j.value("started_at", "");
  m.forced = j.value("forced", false);
  m.stale = j.value("stale", std::vector<std::string>{});
  m.extra = j.value("extra", Json::object());
  return m;
}

fs::path StageDir(const PipelineConfig& config, std::string_view stage) {
  return config.out_root / std::string(stage);
}

fs::path ManifestPath(const PipelineConfig& config, std::string_view stage) {
  return StageDir(config, stage) / kManifestName;
}

std::vector<std::string> CheckUpstream(const PipelineConfig& config,
                                       std::string_view stage) {
  const std::string_view up = Upstream(stage);
  if (up.empty()) return {};
  const fs::path path = ManifestPath(config, up);
  if (!fs::exists(path)) {
    return {"missing " + std::string(up) + " manifest: " + path.string()};
  }
  std::vector<std::string> problems;
  StageManifest m;
  try {
    m = StageManifest::FromJson(Json::parse(ReadFile(path)));
  } catch (const std::exception& e) {
    return {"unreadable " + std::string(up) + " manifest: " + e.what()};
  }
  if (m.stage != up) problems.push_back("manifest at " + path.string() + " is for " + m.stage);
  for (const auto& [p, digest] : m.outputs) {
    if (!fs::exists(p)) {
      problems.push_back("missing output of " + std::string(up) + ": " + p.string());
    } else if (ArtifactDigest(p) != digest) {
      problems.push_back("output of " + std::string(up) + " changed: " + p.string());
    }
  }
  return problems;
}

StageManifest RunStage(std::string_view stage, const PipelineConfig& base, bool force) {
  Upstream(stage);
  PipelineConfig config = base;
  const fs::path features = config.out_root / "features";
  if (config.img_feats.empty()) config.img_feats = features / "img.emb";
  if (config.txt_feats.empty()) config.txt_feats = features / "txt.emb";
  if (config.img_proj.empty()) config.img_proj = features / "Wimg.emb";
  if (config.txt_proj.empty()) config.txt_proj = features / "Wtxt.emb";
  config.Validate(stage);
  const auto stale = CheckUpstream(config, stage);
  if (!stale.empty() && !force) {
    std::string msg = "stage " + std::string(stage) + " has stale inputs";
    for (const auto& s : stale) msg += "; " + s;
    throw Error(ErrorCode::kStaleInput, msg + " (rerun upstream or pass --force)");
  }
  CheckRunSeed(config);

  StageManifest manifest;
  manifest.stage = std::string(stage);
  manifest.started_at = NowIso8601();
  manifest.forced = force && !stale.empty();
  manifest.stale = stale;
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = StageDir(config, stage);
  StageRun run;
  try {
    fs::create_directories(dir);
    run = Dispatch(stage, config, dir);
  } catch (const Error& e) {
    const int status = ExitStatusFor(e.code());
    if (status == 3) throw Error(e.code(), "stage " + std::string(stage) + ": " + e.what());
    throw Error(ErrorCode::kStageFailure, "stage " + std::string(stage) + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::kIO, "stage " + std::string(stage) + ": " + e.what());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kStageFailure, "stage " + std::string(stage) + ": " + e.what());
  }
  manifest.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest.inputs = DigestAll(run.inputs);
  manifest.outputs = DigestAll(run.outputs);
  manifest.counts = run.counts;
  manifest.extra = std::move(run.extra);
  if (!manifest.counts.Reconciles()) {
    throw Error(ErrorCode::kStageFailure,
                "stage " + std::string(stage) + ": counts do not reconcile (" +
                    std::to_string(manifest.counts.out) + " + " +
                    std::to_string(manifest.counts.errored) +
                    " != " + std::to_string(manifest.counts.in) + ")");
  }
  WriteFileAtomic(ManifestPath(config, stage), manifest.ToJson().dump(2) + "\n");
  return manifest;
}

}  // namespace artcontext::pipeline
