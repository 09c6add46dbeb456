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

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "artcontext/align.hpp"
#include "artcontext/corpus.hpp"
#include "artcontext/embed.hpp"
#include "artcontext/error.hpp"
#include "artcontext/eval.hpp"
#include "artcontext/extract.hpp"
#include "artcontext/lora.hpp"
#include "artcontext/pipeline.hpp"

namespace ac = artcontext;
namespace fs = std::filesystem;

namespace {

std::string VersionString() {
  return std::string("artcontext ") + ac::pipeline::kToolVersion +
         " (emb format " + std::to_string(ac::embed::kEmbVersion) + ", lora format " +
         std::to_string(ac::lora::kLoraVersion) + ", abbreviation list " +
         std::to_string(ac::extract::kAbbreviationListVersion) + ")";
}

std::vector<ac::extract::ContextUnit> ReadContexts(const fs::path& path) {
  std::vector<ac::extract::ContextUnit> out;
  for (const auto& j : ac::ReadJsonl(path)) out.push_back(ac::extract::ContextFromJson(j));
  return out;
}

std::vector<ac::align::AlignedPair> ReadPairs(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "aligned_pairs.jsonl" : path;
  std::vector<ac::align::AlignedPair> out;
  for (const auto& j : ac::ReadJsonl(file)) out.push_back(ac::align::PairFromJson(j));
  return out;
}

std::vector<ac::eval::EvalQuery> ReadQueries(const fs::path& path) {
  std::vector<ac::eval::EvalQuery> out;
  for (const auto& j : ac::ReadJsonl(path)) out.push_back(ac::eval::QueryFromJson(j));
  return out;
}

void PrintManifest(const ac::pipeline::StageManifest& m) {
  std::printf("%-8s in=%zu out=%zu errored=%zu %.3fs%s\n", m.stage.c_str(), m.counts.in,
              m.counts.out, m.counts.errored, m.wall_clock_s, m.forced ? " (forced)" : "");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak image-text supervision, projection-head LoRA training and PR evaluation"};
  app.set_version_flag("--version", VersionString());
  app.require_subcommand(1);

  // harvest
  auto* harvest = app.add_subcommand("harvest", "Collect open-access works per artist");
  fs::path h_roster, h_topics, h_out;
  std::optional<fs::path> h_fixture;
  double h_rho = 1.0;
  std::string h_api = ac::corpus::ApiBaseFromEnv();
  harvest->add_option("--roster", h_roster, "Artist roster (TSV or JSONL)")->required();
  harvest->add_option("--topics", h_topics, "Art topic list")->required();
  harvest->add_option("--rho", h_rho, "Relevance threshold")->capture_default_str();
  harvest->add_option("--out", h_out, "Output directory")->required();
  harvest->add_option("--fixture", h_fixture, "Replay API pages from a fixture directory");
  harvest->add_option("--api-base", h_api, "API base URL")->capture_default_str();

  // extract
  auto* extract = app.add_subcommand("extract", "Segment documents into context units");
  fs::path x_corpus, x_out;
  std::optional<fs::path> x_works;
  std::uint64_t x_max = ac::extract::kDefaultMaxBytes;
  bool x_dedup = false;
  extract->add_option("--corpus", x_corpus, "Directory of <work_id>.md files")->required();
  extract->add_option("--out", x_out, "Output contexts.jsonl")->required();
  extract->add_option("--works", x_works, "works.jsonl restricting and attributing documents");
  extract->add_option("--max-bytes", x_max, "Size gate")->capture_default_str();
  extract->add_flag("--dedup", x_dedup, "Drop repeated sentences within a document");

  // embed
  auto* embed = app.add_subcommand("embed", "Embed context windows");
  fs::path e_contexts, e_out;
  std::string e_provider = "test";
  std::size_t e_batch = ac::embed::kDefaultEmbedBatch;
  embed->add_option("--contexts", e_contexts, "contexts.jsonl")->required();
  embed->add_option("--provider", e_provider, "test | test:<dim> | file:<path>")
      ->capture_default_str();
  embed->add_option("--out", e_out, "Output .emb")->required();
  embed->add_option("--batch", e_batch, "Provider batch size")->capture_default_str();

  // align
  auto* align = app.add_subcommand("align", "Pair paintings with their best sentence");
  fs::path a_paintings, a_contexts, a_vectors, a_out;
  std::string a_provider = "test";
  std::optional<double> a_min_sim;
  align->add_option("--paintings", a_paintings, "paintings.jsonl")->required();
  align->add_option("--contexts", a_contexts, "contexts.jsonl")->required();
  align->add_option("--vectors", a_vectors, "contexts.emb")->required();
  align->add_option("--provider", a_provider, "Query provider")->capture_default_str();
  align->add_option("--out", a_out, "Output directory")->required();
  align->add_option("--min-sim", a_min_sim, "Reject matches below this cosine");

  // train
  auto* train = app.add_subcommand("train", "Train LoRA adapters on both projection heads");
  fs::path t_pairs, t_img, t_txt, t_wimg, t_wtxt, t_out;
  ac::lora::TrainConfig t_cfg;
  train->add_option("--pairs", t_pairs, "Alignment directory or aligned_pairs.jsonl")
      ->required();
  train->add_option("--img-feats", t_img, "Image features .emb")->required();
  train->add_option("--txt-feats", t_txt, "Text features .emb")->required();
  train->add_option("--img-proj", t_wimg, "Visual projection .emb")->required();
  train->add_option("--txt-proj", t_wtxt, "Text projection .emb")->required();
  train->add_option("--epochs", t_cfg.epochs)->capture_default_str();
  train->add_option("--batch", t_cfg.batch_size)->capture_default_str();
  train->add_option("--lr", t_cfg.learning_rate)->capture_default_str();
  train->add_option("--seed", t_cfg.seed)->capture_default_str();
  train->add_option("--rank", t_cfg.rank)->capture_default_str();
  train->add_option("--alpha", t_cfg.alpha)->capture_default_str();
  train->add_option("--dropout", t_cfg.dropout_p)->capture_default_str();
  train->add_option("--logit-scale", t_cfg.logit_scale)->capture_default_str();
  train->add_flag("--momentum", t_cfg.momentum, "SGD with momentum 0.9");
  train->add_option("--out", t_out, "Adapter output directory")->required();

  // score
  auto* score = app.add_subcommand("score", "Write dim-1 score files for eval queries");
  fs::path s_queries, s_img, s_txt, s_wimg, s_wtxt, s_out;
  std::optional<fs::path> s_adapters;
  score->add_option("--queries", s_queries, "eval.jsonl")->required();
  score->add_option("--img-feats", s_img)->required();
  score->add_option("--txt-feats", s_txt)->required();
  score->add_option("--img-proj", s_wimg)->required();
  score->add_option("--txt-proj", s_wtxt)->required();
  score->add_option("--adapters", s_adapters, "Adapter directory; omit for baseline");
  score->add_option("--out", s_out, "Output scores .emb")->required();

  // eval
  auto* evalc = app.add_subcommand("eval", "Macro-averaged PR curves and mean AP");
  fs::path v_queries, v_base, v_adapted, v_out;
  evalc->add_option("--queries", v_queries, "eval.jsonl")->required();
  evalc->add_option("--baseline-scores", v_base)->required();
  evalc->add_option("--adapted-scores", v_adapted)->required();
  evalc->add_option("--out", v_out, "Output pr.csv")->required();

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "Top-k sentences for one painting");
  std::string r_qid;
  std::size_t r_k = 5;
  ac::pipeline::RetrieveInputs r_in;
  std::optional<fs::path> r_json;
  retrieve->add_option("--qid", r_qid)->required();
  retrieve->add_option("--k", r_k)->capture_default_str();
  retrieve->add_option("--paintings", r_in.paintings)->required();
  retrieve->add_option("--contexts", r_in.contexts)->required();
  retrieve->add_option("--vectors", r_in.context_vectors, "contexts.emb (text mode)");
  retrieve->add_option("--provider", r_in.provider)->capture_default_str();
  retrieve->add_option("--img-feats", r_in.img_feats, "Selects projection-head scoring");
  retrieve->add_option("--txt-feats", r_in.txt_feats);
  retrieve->add_option("--img-proj", r_in.img_proj);
  retrieve->add_option("--txt-proj", r_in.txt_proj);
  retrieve->add_option("--adapters", r_in.adapters);
  retrieve->add_option("--json", r_json, "Also write the listing as JSON");

  // synth-features
  auto* synth = app.add_subcommand("synth-features",
                                   "Stand-in encoder features for fixture runs");
  fs::path y_pairs, y_contexts, y_out;
  std::uint64_t y_seed = 7;
  ac::pipeline::SyntheticDims y_dims;
  synth->add_option("--pairs", y_pairs)->required();
  synth->add_option("--contexts", y_contexts)->required();
  synth->add_option("--seed", y_seed)->capture_default_str();
  synth->add_option("--image-dim", y_dims.image_dim)->capture_default_str();
  synth->add_option("--text-dim", y_dims.text_dim)->capture_default_str();
  synth->add_option("--embed-dim", y_dims.embed_dim)->capture_default_str();
  synth->add_option("--out", y_out)->required();

  // run
  auto* run = app.add_subcommand("run", "Run pipeline stages from a config file");
  std::string p_stage;
  fs::path p_config;
  std::optional<fs::path> p_out;
  std::vector<std::string> p_set;
  bool p_force = false;
  run->add_option("stage", p_stage, "Stage name or 'all'")->required();
  run->add_option("--config", p_config)->required();
  run->add_option("--out", p_out, "Override pipeline.out");
  run->add_option("--set", p_set, "Override section.key=value (repeatable)");
  run->add_flag("--force", p_force, "Run even when upstream outputs are stale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (harvest->parsed()) {
      ac::corpus::HarvestOptions options;
      options.api_base = h_api;
      std::unique_ptr<ac::corpus::WorksClient> client;
      if (h_fixture) {
        client = std::make_unique<ac::corpus::FixtureClient>(*h_fixture);
      } else {
        client = std::make_unique<ac::corpus::HttpWorksClient>(h_api);
      }
      const auto result = ac::corpus::Harvest(ac::corpus::LoadRoster(h_roster),
                                              ac::corpus::LoadTopicFilter(h_topics, h_rho),
                                              *client, options);
      ac::corpus::WriteHarvest(result, h_out);
      std::printf("kept %zu works\n", result.Flatten().size());
    } else if (extract->parsed()) {
      ac::extract::ExtractOptions options{x_max, x_dedup};
      ac::extract::ExtractStats stats;
      const auto contexts = ac::extract::ExtractCorpus(
          x_corpus, x_works ? ac::ReadJsonl(*x_works) : std::vector<ac::Json>{},
          ac::extract::RuleSegmenter(), options, &stats);
      std::vector<ac::Json> rows;
      for (const auto& c : contexts) rows.push_back(ac::extract::ToJson(c));
      ac::WriteFileAtomic(x_out, ac::ToJsonl(rows));
      std::printf("%s\n", stats.ToJson().dump().c_str());
    } else if (embed->parsed()) {
      auto provider = ac::embed::MakeProvider(e_provider);
      const auto m = ac::embed::EmbedContexts(*provider, ReadContexts(e_contexts), e_batch);
      ac::embed::SaveMatrix(m, e_out);
      std::printf("embedded %zu contexts (dim %zu)\n", m.rows(), m.dim);
    } else if (align->parsed()) {
      std::vector<ac::align::PaintingRecord> paintings;
      for (const auto& j : ac::ReadJsonl(a_paintings)) {
        paintings.push_back(ac::align::PaintingFromJson(j));
      }
      auto provider = ac::embed::MakeProvider(a_provider);
      const auto result =
          ac::align::AlignAll(paintings, ReadContexts(a_contexts),
                              ac::embed::LoadMatrix(a_vectors), *provider, {a_min_sim});
      ac::align::WriteAlignment(result, a_out);
      std::printf("aligned %zu, unmatched %zu\n", result.pairs.size(),
                  result.unmatched.size());
    } else if (train->parsed()) {
      std::vector<std::string> keys;
      for (const auto& p : ReadPairs(t_pairs)) keys.push_back(p.qid);
      const auto heads = ac::pipeline::LoadHeads(t_wimg, t_wtxt);
      std::vector<std::string> missing;
      const auto pairs = ac::lora::JoinFeatures(keys, ac::embed::LoadMatrix(t_img),
                                                ac::embed::LoadMatrix(t_txt), &missing);
      const auto result = ac::lora::Train(pairs, heads.image, heads.text, t_cfg);
      ac::pipeline::SaveAdapters({result.image_adapter, result.text_adapter}, t_out);
      ac::Json history{{"loss_history", result.loss_history},
                       {"epoch_batch_loss", result.epoch_batch_loss},
                       {"config", t_cfg.ToJson()},
                       {"missing_features", missing}};
      ac::WriteFileAtomic(t_out / "loss_history.json", history.dump(2) + "\n");
      std::printf("trained on %zu pairs: loss %.6f -> %.6f\n", pairs.keys.size(),
                  result.loss_history.front(), result.loss_history.back());
    } else if (score->parsed()) {
      const auto heads = ac::pipeline::LoadHeads(s_wimg, s_wtxt);
      std::optional<ac::pipeline::Adapters> adapters;
      if (s_adapters) adapters = ac::pipeline::LoadAdapters(*s_adapters);
      const auto scores = ac::pipeline::ScoreQueries(
          ReadQueries(s_queries), ac::embed::LoadMatrix(s_img), ac::embed::LoadMatrix(s_txt),
          heads, adapters ? &*adapters : nullptr);
      ac::embed::SaveMatrix(scores, s_out);
    } else if (evalc->parsed()) {
      const auto summary =
          ac::eval::Evaluate(ReadQueries(v_queries), ac::embed::LoadMatrix(v_base),
                             ac::embed::LoadMatrix(v_adapted));
      ac::eval::EmitPlotData(summary.baseline, summary.adapted, v_out);
      fs::path summary_path = v_out;
      summary_path.replace_filename("eval_summary.json");
      ac::WriteFileAtomic(summary_path, summary.ToJson().dump(2) + "\n");
      std::printf("mean AP baseline %.6f adapted %.6f\n", summary.mean_ap_baseline,
                  summary.mean_ap_adapted);
    } else if (retrieve->parsed()) {
      const auto result = ac::pipeline::RetrieveTopK(r_qid, r_k, r_in);
      std::fputs(result.ToText().c_str(), stdout);
      if (r_json) ac::WriteFileAtomic(*r_json, result.ToJson().dump(2) + "\n");
    } else if (synth->parsed()) {
      ac::pipeline::SynthesizeFeatures(ReadPairs(y_pairs), ReadContexts(y_contexts), y_dims,
                                       y_seed, y_out);
    } else if (run->parsed()) {
      auto config = ac::pipeline::PipelineConfig::Load(p_config);
      for (const auto& kv : p_set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
          throw ac::Error(ac::ErrorCode::kValidation, "--set expects key=value: " + kv);
        }
        config.Override(kv.substr(0, eq), kv.substr(eq + 1), fs::current_path());
      }
      if (p_out) config.out_root = *p_out;
      if (p_stage == "all") {
        for (const auto stage : ac::pipeline::kStages) {
          PrintManifest(ac::pipeline::RunStage(stage, config, p_force));
        }
      } else {
        PrintManifest(ac::pipeline::RunStage(p_stage, config, p_force));
      }
    }
  } catch (const ac::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ac::ExitStatusFor(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ac::Json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
