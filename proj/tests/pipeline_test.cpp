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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <functional>

#include "artcontext/error.hpp"
#include "artcontext/io.hpp"
#include "artcontext/pipeline.hpp"
#include "support.hpp"

namespace artcontext::pipeline {
namespace {

using testing::FixtureDir;
using testing::TempDir;

void ExpectCode(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << ErrorCodeName(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

PipelineConfig FixtureConfig(const fs::path& out) {
  auto config = PipelineConfig::Load(FixtureDir() / "pipeline.ini");
  config.out_root = out;
  return config;
}

std::vector<align::AlignedPair> ReadPairs(const PipelineConfig& c) {
  std::vector<align::AlignedPair> out;
  for (const auto& j : ReadJsonl(c.out_root / "align" / "aligned_pairs.jsonl")) {
    out.push_back(align::PairFromJson(j));
  }
  return out;
}

std::vector<extract::ContextUnit> ReadContexts(const PipelineConfig& c) {
  std::vector<extract::ContextUnit> out;
  for (const auto& j : ReadJsonl(c.out_root / "extract" / "contexts.jsonl")) {
    out.push_back(extract::ContextFromJson(j));
  }
  return out;
}

std::vector<StageManifest> RunAll(const PipelineConfig& config) {
  std::vector<StageManifest> manifests;
  for (const char* stage : {"harvest", "extract", "embed", "align"}) {
    manifests.push_back(RunStage(stage, config));
  }
  SynthesizeFeatures(ReadPairs(config), ReadContexts(config), {}, config.train.seed,
                     config.out_root / "features");
  for (const char* stage : {"train", "eval"}) manifests.push_back(RunStage(stage, config));
  return manifests;
}

// One full fixture run shared by the read-only tests below.
class FixtureRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    config_ = new PipelineConfig(FixtureConfig(dir_->path() / "run"));
    manifests_ = new std::vector<StageManifest>(RunAll(*config_));
  }
  static void TearDownTestSuite() {
    delete manifests_;
    delete config_;
    delete dir_;
  }
  static const PipelineConfig& config() { return *config_; }
  static fs::path Out(const std::string& rel) { return config_->out_root / rel; }

  static TempDir* dir_;
  static PipelineConfig* config_;
  static std::vector<StageManifest>* manifests_;
};

TempDir* FixtureRun::dir_ = nullptr;
PipelineConfig* FixtureRun::config_ = nullptr;
std::vector<StageManifest>* FixtureRun::manifests_ = nullptr;

TEST_F(FixtureRun, EveryStageReconcilesAndWritesManifest) {
  ASSERT_EQ(manifests_->size(), 6u);
  for (const auto& m : *manifests_) {
    EXPECT_TRUE(m.counts.Reconciles()) << m.stage;
    EXPECT_FALSE(m.forced);
    EXPECT_TRUE(fs::exists(ManifestPath(config(), m.stage)));
    const auto back = StageManifest::FromJson(Json::parse(ReadFile(ManifestPath(config(), m.stage))));
    EXPECT_EQ(back.outputs, m.outputs);
    EXPECT_EQ(back.counts.in, m.counts.in);
    for (const auto& [path, digest] : m.outputs) EXPECT_EQ(digest.size(), 64u) << path;
  }
  EXPECT_EQ((*manifests_)[0].counts.out, 6u);
  EXPECT_EQ((*manifests_)[3].counts.out, 6u);
  EXPECT_EQ((*manifests_)[3].counts.errored, 2u);
}

TEST_F(FixtureRun, EvalWritesGridCsvAndSummary) {
  const auto [base, adapted] = eval::ParsePlotCsv(ReadFile(Out("eval/pr.csv")));
  for (std::size_t k = 1; k < eval::kGridPoints; ++k) {
    EXPECT_LE(base.precision[k], base.precision[k - 1]);
    EXPECT_LE(adapted.precision[k], adapted.precision[k - 1]);
  }
  const Json summary = Json::parse(ReadFile(Out("eval/eval_summary.json")));
  EXPECT_EQ(summary.at("queries").size(), 6u);
  EXPECT_TRUE(fs::exists(Out("train/loss_history.json")));
  EXPECT_EQ(lora::LoadAdapter(Out("train/visual.lora")).rank, 4u);
}

TEST_F(FixtureRun, RerunIsDigestIdentical) {
  TempDir other;
  const auto again = RunAll(FixtureConfig(other / "run"));
  ASSERT_EQ(again.size(), manifests_->size());
  for (std::size_t s = 0; s < again.size(); ++s) {
    ASSERT_EQ(again[s].outputs.size(), (*manifests_)[s].outputs.size());
    for (std::size_t i = 0; i < again[s].outputs.size(); ++i) {
      EXPECT_EQ(again[s].outputs[i].first.filename(),
                (*manifests_)[s].outputs[i].first.filename());
      EXPECT_EQ(again[s].outputs[i].second, (*manifests_)[s].outputs[i].second)
          << again[s].stage << " " << again[s].outputs[i].first;
    }
  }
}

TEST_F(FixtureRun, RerunInPlaceKeepsDownstreamFresh) {
  RunStage("align", config());
  EXPECT_TRUE(CheckUpstream(config(), "train").empty());
}

RetrieveInputs TextInputs(const PipelineConfig& c) {
  RetrieveInputs in;
  in.paintings = c.paintings;
  in.contexts = c.out_root / "extract" / "contexts.jsonl";
  in.context_vectors = c.out_root / "embed" / "contexts.emb";
  in.provider = c.provider;
  return in;
}

RetrieveInputs ClipInputs(const PipelineConfig& c) {
  RetrieveInputs in = TextInputs(c);
  in.img_feats = c.out_root / "features" / "img.emb";
  in.txt_feats = c.out_root / "features" / "txt.emb";
  in.img_proj = c.out_root / "features" / "Wimg.emb";
  in.txt_proj = c.out_root / "features" / "Wtxt.emb";
  return in;
}

TEST_F(FixtureRun, RetrieveKLargerThanCandidatesReturnsAll) {
  std::size_t van_gogh = 0;
  for (const auto& c : ReadContexts(config())) {
    for (const auto& n : c.artist_names) van_gogh += n == "Vincent van Gogh";
  }
  const auto r = RetrieveTopK("Q9000001", 1000, TextInputs(config()));
  EXPECT_EQ(r.mode, "text");
  EXPECT_EQ(r.sentences.size(), van_gogh);
  for (std::size_t i = 1; i < r.sentences.size(); ++i) {
    EXPECT_LE(r.sentences[i].score, r.sentences[i - 1].score);
    EXPECT_EQ(r.sentences[i].rank, i + 1);
  }
  EXPECT_EQ(RetrieveTopK("Q9000001", 2, TextInputs(config())).sentences.size(), 2u);
}

TEST_F(FixtureRun, ZeroAdapterMatchesBaselineRanking) {
  TempDir adapters;
  const auto heads = LoadHeads(ClipInputs(config()).img_proj, ClipInputs(config()).txt_proj);
  SaveAdapters({lora::InitAdapter(heads.image.d_in(), heads.image.d_out(), 4, 8.0f, 0.05f, 1,
                                  "visual"),
                lora::InitAdapter(heads.text.d_in(), heads.text.d_out(), 4, 8.0f, 0.05f, 2,
                                  "text")},
               adapters.path());
  auto with = ClipInputs(config());
  with.adapters = adapters.path();
  const auto base = RetrieveTopK("Q9000002", 50, ClipInputs(config()));
  const auto adapted = RetrieveTopK("Q9000002", 50, with);
  EXPECT_EQ(base.mode, "clip-baseline");
  EXPECT_EQ(adapted.mode, "clip-adapted");
  ASSERT_EQ(base.sentences.size(), adapted.sentences.size());
  for (std::size_t i = 0; i < base.sentences.size(); ++i) {
    EXPECT_EQ(base.sentences[i].context_id, adapted.sentences[i].context_id);
    EXPECT_EQ(base.sentences[i].score, adapted.sentences[i].score);
  }
}

TEST_F(FixtureRun, RetrieveErrors) {
  ExpectCode(ErrorCode::kUnknownPainting, [] { RetrieveTopK("Q1", 3, TextInputs(config())); });
  ExpectCode(ErrorCode::kNoContexts,
             [] { RetrieveTopK("Q9000006", 3, TextInputs(config())); });
}

TEST_F(FixtureRun, RetrievalRendersJsonAndText) {
  const auto r = RetrieveTopK("Q9000001", 3, TextInputs(config()));
  const Json j = r.ToJson();
  EXPECT_EQ(j.at("qid"), "Q9000001");
  EXPECT_EQ(j.at("sentences").size(), 3u);
  EXPECT_NE(r.ToText().find(r.sentences[0].sentence), std::string::npos);
}

TEST(Retrieve, ExactTextContextRanksFirst) {
  TempDir dir;
  align::PaintingRecord p;
  p.qid = "Q5";
  p.title = "Harbour";
  p.creator_name = "Ann Painter";
  WriteFileAtomic(dir / "paintings.jsonl", ToJsonl({align::ToJson(p)}));
  std::vector<extract::ContextUnit> units(3);
  const std::string windows[] = {"Boats at rest in the bay.", align::RenderQuery(p),
                                 "A letter about money matters."};
  for (std::size_t i = 0; i < 3; ++i) {
    units[i].work_id = "W9";
    units[i].index = i;
    units[i].sentence = "center " + std::to_string(i);
    units[i].window_text = windows[i];
    units[i].token_count = 4;
    units[i].artist_ids = {"A9"};
    units[i].artist_names = {"ann painter"};
  }
  std::vector<Json> rows;
  for (const auto& u : units) rows.push_back(extract::ToJson(u));
  WriteFileAtomic(dir / "contexts.jsonl", ToJsonl(rows));
  embed::HashEmbeddingProvider provider(32);
  embed::SaveMatrix(embed::EmbedContexts(provider, units), dir / "contexts.emb");
  RetrieveInputs in;
  in.paintings = dir / "paintings.jsonl";
  in.contexts = dir / "contexts.jsonl";
  in.context_vectors = dir / "contexts.emb";
  in.provider = "test:32";
  const auto r = RetrieveTopK("Q5", 1, in);
  ASSERT_EQ(r.sentences.size(), 1u);
  EXPECT_EQ(r.sentences[0].context_id, "W9#1");
  EXPECT_EQ(r.sentences[0].sentence, "center 1");
  EXPECT_NEAR(r.sentences[0].score, 1.0, 1e-6);
}

TEST(RunStage, ExtractBeforeHarvestIsStale) {
  TempDir dir;
  const auto config = FixtureConfig(dir / "run");
  ExpectCode(ErrorCode::kStaleInput, [&] { RunStage("extract", config); });
  EXPECT_EQ(ExitStatusFor(ErrorCode::kStaleInput), 1);
}

TEST(RunStage, ModifiedUpstreamOutputIsStaleUnlessForced) {
  TempDir dir;
  const auto config = FixtureConfig(dir / "run");
  RunStage("harvest", config);
  EXPECT_TRUE(CheckUpstream(config, "extract").empty());
  std::ofstream(config.out_root / "harvest" / "works.jsonl", std::ios::app) << "\n";
  EXPECT_FALSE(CheckUpstream(config, "extract").empty());
  ExpectCode(ErrorCode::kStaleInput, [&] { RunStage("extract", config); });
  const auto m = RunStage("extract", config, true);
  EXPECT_TRUE(m.forced);
  EXPECT_FALSE(m.stale.empty());
  const Json j = Json::parse(ReadFile(ManifestPath(config, "extract")));
  EXPECT_TRUE(j.at("forced").get<bool>());
}

TEST(RunStage, SeedIsLockedPerRunDirectory) {
  TempDir dir;
  auto config = FixtureConfig(dir / "run");
  RunStage("harvest", config);
  config.train.seed = 99;
  ExpectCode(ErrorCode::kValidation, [&] { RunStage("harvest", config); });
  config.out_root = dir / "other";
  EXPECT_NO_THROW(RunStage("harvest", config));
}

TEST(RunStage, MissingFeaturesAreValidationErrors) {
  TempDir dir;
  const auto config = FixtureConfig(dir / "run");
  ExpectCode(ErrorCode::kValidation, [&] { RunStage("train", config); });
  ExpectCode(ErrorCode::kValidation, [&] { RunStage("nope", config); });
}

TEST(RunStage, ModuleErrorsBecomeStageFailure) {
  TempDir dir;
  auto config = FixtureConfig(dir / "run");
  config.provider = "no-such-provider";
  RunStage("harvest", config);
  RunStage("extract", config);
  ExpectCode(ErrorCode::kStageFailure, [&] { RunStage("embed", config); });
}

TEST(Config, LoadResolvesRelativeToFile) {
  const auto c = PipelineConfig::Load(FixtureDir() / "pipeline.ini");
  EXPECT_EQ(c.roster, FixtureDir() / "roster.tsv");
  EXPECT_EQ(c.out_root, FixtureDir() / "run");
  EXPECT_EQ(c.train.seed, 7u);
  EXPECT_EQ(c.train.epochs, 5u);
  EXPECT_EQ(c.train.batch_size, 3u);
  EXPECT_EQ(c.train.rank, 4u);
  EXPECT_EQ(c.embed_batch, 64u);
  ASSERT_TRUE(c.fixture.has_value());
  EXPECT_EQ(*c.fixture, FixtureDir() / "api");
  EXPECT_EQ(c.provider, "test");
}

TEST(Config, OverridesAndValidation) {
  auto c = PipelineConfig::Load(FixtureDir() / "pipeline.ini");
  c.Override("train.lr", "0.5");
  c.Override("align.min_sim", "0.2");
  c.Override("extract.dedup", "true");
  c.Override("pipeline.out", "elsewhere", "/tmp");
  EXPECT_DOUBLE_EQ(c.train.learning_rate, 0.5);
  EXPECT_EQ(c.min_sim, 0.2);
  EXPECT_TRUE(c.dedup);
  EXPECT_EQ(c.out_root, fs::path("/tmp/elsewhere"));
  ExpectCode(ErrorCode::kValidation, [&] { c.Override("train.colour", "1"); });
  ExpectCode(ErrorCode::kValidation, [&] { c.Override("train.epochs", "five"); });
  c.rho = -1;
  ExpectCode(ErrorCode::kValidation, [&] { c.Validate("harvest"); });
}

TEST(Config, UnknownKeyInFile) {
  TempDir dir;
  std::ofstream(dir / "bad.ini") << "[train]\nepochz = 3\n";
  ExpectCode(ErrorCode::kValidation, [&] { PipelineConfig::Load(dir / "bad.ini"); });
}

TEST(EmbedWithHead, RowsAreUnitLength) {
  std::mt19937_64 g(3);
  const lora::ProjectionHead head{"text", testing::RandomMatrix(4, 6, g)};
  const auto feats = testing::ToEmbedding(testing::RandomMatrix(5, 6, g), "r");
  const auto out = EmbedWithHead(feats, head, nullptr);
  EXPECT_EQ(out.ids, feats.ids);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double s = 0;
    for (const float v : out.row(i)) s += double{v} * v;
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

int RunCli(const std::string& args) {
  const std::string cmd = std::string(ARTCONTEXT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const std::string ini = (FixtureDir() / "pipeline.ini").string();
  const std::string out = (dir / "run").string();
  EXPECT_EQ(RunCli("--version"), 0);
  EXPECT_EQ(RunCli("--no-such-flag"), 1);
  EXPECT_EQ(RunCli("run extract --config " + ini + " --out " + out), 1);
  EXPECT_EQ(RunCli("run harvest --config " + ini + " --out " + out), 0);
  EXPECT_EQ(RunCli("run extract --config " + ini + " --out " + out +
                   " --set extract.corpus=" + (dir / "missing").string()),
            1);
  EXPECT_EQ(RunCli("run embed --config " + ini + " --out " + out), 1);
  EXPECT_EQ(RunCli("run extract --config " + ini + " --out " + out), 0);
  EXPECT_EQ(RunCli("run embed --config " + ini + " --out " + out +
                   " --set pipeline.provider=file:" + (dir / "nope.emb").string()),
            3);
  std::ofstream(dir / "bad.emb") << "XXXXjunk";
  EXPECT_EQ(RunCli("embed --contexts " + out + "/extract/contexts.jsonl --provider file:" +
                   (dir / "bad.emb").string() + " --out " + (dir / "o.emb").string()),
            3);
  EXPECT_EQ(RunCli("run embed --config " + ini + " --out " + out +
                   " --set pipeline.provider=bogus"),
            2);
}

}  // namespace
}  // namespace artcontext::pipeline
