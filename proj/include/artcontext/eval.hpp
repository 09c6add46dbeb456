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

#ifndef ARTCONTEXT_EVAL_HPP_
#define ARTCONTEXT_EVAL_HPP_

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "artcontext/embed.hpp"
#include "artcontext/io.hpp"

// Ranking and precision-recall evaluation.
namespace artcontext::eval {

inline constexpr std::size_t kGridPoints = 101;

// Recall grid {0, 0.01, ..., 1}; entry k is exactly k / 100.0.
const std::array<double, kGridPoints>& RecallGrid();

struct Ranked {
  std::size_t index = 0;
  std::string id;
  double score = 0.0;
};

// Top-k rows of `candidates` by cosine to `query`, descending, ties by
// lowest index. Degenerate rows rank last.
std::vector<Ranked> RankCandidates(std::span<const float> query,
                                   const embed::EmbeddingMatrix& candidates,
                                   std::size_t k);

struct EvalQuery {
  std::string qid;
  std::vector<std::string> candidate_ids;
  std::vector<double> scores;
  std::vector<int> labels;
};

// Checks lengths, binary labels and that at least one label is positive.
void ValidateQuery(const EvalQuery& q);
EvalQuery QueryFromJson(const Json& j);

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
};

// One point per rank after a stable descending sort on score.
std::vector<PRPoint> PRPoints(std::span<const double> scores,
                              std::span<const int> labels);

struct PRCurve {
  std::array<double, kGridPoints> precision{};
};

// P(r) = max precision over points with recall >= r, sampled on the grid.
PRCurve EnvelopeOnGrid(std::span<const PRPoint> points);

PRCurve MacroAverage(std::span<const PRCurve> curves);

double AveragePrecision(std::span<const double> scores, std::span<const int> labels);

// CSV "recall,precision_baseline,precision_adapted", 101 rows, 6 decimals.
std::string PlotCsv(const PRCurve& baseline, const PRCurve& adapted);
// Inverse of PlotCsv. Throws GridMismatch when the recall column is not the
// standard grid.
std::pair<PRCurve, PRCurve> ParsePlotCsv(std::string_view csv);
void EmitPlotData(const PRCurve& baseline, const PRCurve& adapted,
                  const fs::path& path);

// Score-file id for one (query, candidate) pair in a dim-1 .emb file.
std::string ScoreKey(std::string_view qid, std::string_view candidate_id);

struct EvalSummary {
  PRCurve baseline;
  PRCurve adapted;
  double mean_ap_baseline = 0.0;
  double mean_ap_adapted = 0.0;
  std::vector<std::pair<std::string, std::pair<double, double>>> per_query_ap;
  Json ToJson() const;
};

// Fills each query's scores from a dim-1 score matrix keyed by ScoreKey.
std::vector<double> LookupScores(const EvalQuery& q,
                                 const embed::EmbeddingMatrix& scores);

EvalSummary Evaluate(const std::vector<EvalQuery>& queries,
                     const embed::EmbeddingMatrix& baseline_scores,
                     const embed::EmbeddingMatrix& adapted_scores);

}  // namespace artcontext::eval

#endif  // ARTCONTEXT_EVAL_HPP_
