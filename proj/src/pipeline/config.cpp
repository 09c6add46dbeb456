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

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "artcontext/corpus.hpp"
#include "artcontext/error.hpp"
#include "artcontext/pipeline.hpp"
#include "artcontext/text.hpp"

namespace artcontext::pipeline {
namespace {

double ParseDouble(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(value), &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kValidation,
                "config " + std::string(key) + ": not a number: " + std::string(value));
  }
}

std::uint64_t ParseUnsigned(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(std::string(value), &used);
    if (used != value.size() || value.starts_with("-")) {
      throw std::invalid_argument("bad");
    }
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kValidation, "config " + std::string(key) +
                                            ": not a non-negative integer: " +
                                            std::string(value));
  }
}

bool ParseBool(std::string_view key, std::string_view value) {
  const std::string v = text::ToLowerAscii(value);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::kValidation,
              "config " + std::string(key) + ": not a boolean: " + std::string(value));
}

fs::path Resolve(const fs::path& base, std::string_view value) {
  fs::path p{std::string(value)};
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

void RequireFile(const fs::path& p, std::string_view what) {
  if (p.empty()) {
    throw Error(ErrorCode::kValidation, std::string(what) + " is not configured");
  }
  if (!fs::exists(p)) {
    throw Error(ErrorCode::kValidation,
                std::string(what) + " does not exist: " + p.string());
  }
}

}  // namespace

PipelineConfig PipelineConfig::Load(const fs::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::kValidation, std::string("config: ") + e.what());
  }
  PipelineConfig config;
  config.api_base = corpus::ApiBaseFromEnv();
  const fs::path base = path.parent_path();
  for (const auto& [section, entries] : tree) {
    for (const auto& [key, value] : entries) {
      config.Override(section + "." + key, value.get_value<std::string>(), base);
    }
  }
  return config;
}

void PipelineConfig::Override(std::string_view dotted_key, std::string_view raw,
                              const fs::path& base) {
  const std::string value = text::Trim(raw);
  const std::string key(dotted_key);
  if (key == "pipeline.out") {
    out_root = Resolve(base, value);
  } else if (key == "pipeline.seed") {
    train.seed = ParseUnsigned(key, value);
  } else if (key == "pipeline.provider") {
    provider = value;
  } else if (key == "harvest.roster") {
    roster = Resolve(base, value);
  } else if (key == "harvest.topics") {
    topics = Resolve(base, value);
  } else if (key == "harvest.rho") {
    rho = ParseDouble(key, value);
  } else if (key == "harvest.fixture") {
    if (value.empty()) {
      fixture.reset();
    } else {
      fixture = Resolve(base, value);
    }
  } else if (key == "harvest.api_base") {
    api_base = value;
  } else if (key == "extract.corpus") {
    corpus = Resolve(base, value);
  } else if (key == "extract.max_bytes") {
    max_bytes = ParseUnsigned(key, value);
  } else if (key == "extract.dedup") {
    dedup = ParseBool(key, value);
  } else if (key == "embed.batch") {
    embed_batch = ParseUnsigned(key, value);
  } else if (key == "align.paintings") {
    paintings = Resolve(base, value);
  } else if (key == "align.min_sim") {
    if (value.empty()) {
      min_sim.reset();
    } else {
      min_sim = ParseDouble(key, value);
    }
  } else if (key == "train.img_feats") {
    img_feats = Resolve(base, value);
  } else if (key == "train.txt_feats") {
    txt_feats = Resolve(base, value);
  } else if (key == "train.img_proj") {
    img_proj = Resolve(base, value);
  } else if (key == "train.txt_proj") {
    txt_proj = Resolve(base, value);
  } else if (key == "train.epochs") {
    train.epochs = ParseUnsigned(key, value);
  } else if (key == "train.batch") {
    train.batch_size = ParseUnsigned(key, value);
  } else if (key == "train.lr") {
    train.learning_rate = ParseDouble(key, value);
  } else if (key == "train.momentum") {
    train.momentum = ParseBool(key, value);
  } else if (key == "train.rank") {
    train.rank = ParseUnsigned(key, value);
  } else if (key == "train.alpha") {
    train.alpha = static_cast<float>(ParseDouble(key, value));
  } else if (key == "train.dropout") {
    train.dropout_p = static_cast<float>(ParseDouble(key, value));
  } else if (key == "train.logit_scale") {
    train.logit_scale = ParseDouble(key, value);
  } else if (key == "eval.queries") {
    eval_queries = Resolve(base, value);
  } else {
    throw Error(ErrorCode::kValidation, "unknown config key: " + key);
  }
}

void PipelineConfig::Validate(std::string_view stage) const {
  if (out_root.empty()) throw Error(ErrorCode::kValidation, "pipeline.out is not set");
  if (rho < 0) throw Error(ErrorCode::kValidation, "harvest.rho must be >= 0");
  if (stage == "harvest") {
    RequireFile(roster, "harvest.roster");
    RequireFile(topics, "harvest.topics");
    if (fixture) RequireFile(*fixture, "harvest.fixture");
  } else if (stage == "extract") {
    RequireFile(corpus, "extract.corpus");
  } else if (stage == "align") {
    RequireFile(paintings, "align.paintings");
  } else if (stage == "train" || stage == "eval") {
    RequireFile(img_feats, "train.img_feats");
    RequireFile(txt_feats, "train.txt_feats");
    RequireFile(img_proj, "train.img_proj");
    RequireFile(txt_proj, "train.txt_proj");
    if (stage == "eval") RequireFile(eval_queries, "eval.queries");
  } else if (stage != "embed") {
    throw Error(ErrorCode::kValidation, "unknown stage: " + std::string(stage));
  }
}

}  // namespace artcontext::pipeline
