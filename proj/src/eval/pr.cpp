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
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "artcontext/error.hpp"
#include "artcontext/eval.hpp"
#include "artcontext/kernels.hpp"

namespace artcontext::eval {
namespace {

std::vector<std::size_t> RankOrder(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return order;
}

void CheckScoresLabels(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kValidation, "scores and labels differ in length");
  }
  if (scores.empty()) throw Error(ErrorCode::kEmptyInput, "no candidates");
  bool positive = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw Error(ErrorCode::kValidation, "non-finite score");
    }
    if (labels[i] != 0 && labels[i] != 1) {
      throw Error(ErrorCode::kValidation, "labels must be 0 or 1");
    }
    positive = positive || labels[i] == 1;
  }
  if (!positive) throw Error(ErrorCode::kNoPositives, "query has no positive label");
}

}  // namespace

const std::array<double, kGridPoints>& RecallGrid() {
  static const std::array<double, kGridPoints> grid = [] {
    std::array<double, kGridPoints> g{};
    for (std::size_t k = 0; k < kGridPoints; ++k) g[k] = static_cast<double>(k) / 100.0;
    return g;
  }();
  return grid;
}

std::vector<Ranked> RankCandidates(std::span<const float> query,
                                   const embed::EmbeddingMatrix& candidates,
                                   std::size_t k) {
  if (candidates.rows() == 0) {
    throw Error(ErrorCode::kEmptyCandidates, "no candidates to rank");
  }
  if (k > candidates.rows()) {
    throw Error(ErrorCode::kValidation, "k exceeds candidate count");
  }
  std::vector<double> scores =
      kernels::CosineScoresOmp(query, candidates.data, candidates.dim);
  for (double& s : scores) {
    if (std::isnan(s)) s = -std::numeric_limits<double>::infinity();
  }
  const auto order = RankOrder(scores);
  std::vector<Ranked> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back({order[i], candidates.ids[order[i]], scores[order[i]]});
  }
  return out;
}

void ValidateQuery(const EvalQuery& q) {
  if (q.candidate_ids.empty()) {
    throw Error(ErrorCode::kEmptyInput, "query " + q.qid + " has no candidates");
  }
  if (q.labels.size() != q.candidate_ids.size() ||
      (!q.scores.empty() && q.scores.size() != q.candidate_ids.size())) {
    throw Error(ErrorCode::kValidation,
                "query " + q.qid + ": candidate_ids/scores/labels lengths differ");
  }
  bool positive = false;
  for (const int y : q.labels) {
    if (y != 0 && y != 1) {
      throw Error(ErrorCode::kValidation, "query " + q.qid + ": labels must be 0/1");
    }
    positive = positive || y == 1;
  }
  if (!positive) {
    throw Error(ErrorCode::kNoPositives, "query " + q.qid + " has no positive label");
  }
}

EvalQuery QueryFromJson(const Json& j) {
  EvalQuery q;
  q.qid = j.at("qid").get<std::string>();
  q.candidate_ids = j.at("candidate_ids").get<std::vector<std::string>>();
  q.labels = j.at("labels").get<std::vector<int>>();
  if (j.contains("scores")) q.scores = j.at("scores").get<std::vector<double>>();
  ValidateQuery(q);
  return q;
}

std::vector<PRPoint> PRPoints(std::span<const double> scores,
                              std::span<const int> labels) {
  CheckScoresLabels(scores, labels);
  const double positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  std::vector<PRPoint> points;
  points.reserve(scores.size());
  std::size_t tp = 0;
  std::size_t rank = 0;
  for (const std::size_t i : RankOrder(scores)) {
    ++rank;
    tp += labels[i] == 1;
    points.push_back({static_cast<double>(tp) / positives,
                      static_cast<double>(tp) / static_cast<double>(rank)});
  }
  return points;
}

PRCurve EnvelopeOnGrid(std::span<const PRPoint> points) {
  if (points.empty()) throw Error(ErrorCode::kEmptyInput, "no PR points");
  std::vector<PRPoint> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const PRPoint& a, const PRPoint& b) { return a.recall > b.recall; });
  PRCurve curve;
  const auto& grid = RecallGrid();
  double best = 0.0;
  std::size_t next = 0;
  for (std::size_t k = kGridPoints; k-- > 0;) {
    while (next < sorted.size() && sorted[next].recall >= grid[k]) {
      best = std::max(best, sorted[next].precision);
      ++next;
    }
    curve.precision[k] = best;
  }
  return curve;
}

PRCurve MacroAverage(std::span<const PRCurve> curves) {
  if (curves.empty()) throw Error(ErrorCode::kEmptyInput, "no curves to average");
  PRCurve out;
  for (std::size_t k = 0; k < kGridPoints; ++k) {
    double sum = 0.0;
    for (const auto& c : curves) sum += c.precision[k];
    out.precision[k] = sum / static_cast<double>(curves.size());
  }
  return out;
}

double AveragePrecision(std::span<const double> scores, std::span<const int> labels) {
  CheckScoresLabels(scores, labels);
  double sum = 0.0;
  std::size_t tp = 0;
  std::size_t rank = 0;
  for (const std::size_t i : RankOrder(scores)) {
    ++rank;
    if (labels[i] == 1) {
      ++tp;
      sum += static_cast<double>(tp) / static_cast<double>(rank);
    }
  }
  return sum / static_cast<double>(tp);
}

std::string PlotCsv(const PRCurve& baseline, const PRCurve& adapted) {
  std::string out = "recall,precision_baseline,precision_adapted\n";
  const auto& grid = RecallGrid();
  char buf[96];
  for (std::size_t k = 0; k < kGridPoints; ++k) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f\n", grid[k],
                  baseline.precision[k], adapted.precision[k]);
    out += buf;
  }
  return out;
}

std::pair<PRCurve, PRCurve> ParsePlotCsv(std::string_view csv) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < csv.size()) {
    std::size_t end = csv.find('\n', start);
    if (end == std::string_view::npos) end = csv.size();
    if (end > start) lines.push_back(csv.substr(start, end - start));
    start = end + 1;
  }
  if (lines.empty() || lines[0] != "recall,precision_baseline,precision_adapted") {
    throw Error(ErrorCode::kFormat, "missing PR CSV header");
  }
  if (lines.size() != kGridPoints + 1) {
    throw Error(ErrorCode::kGridMismatch, "expected " + std::to_string(kGridPoints) +
                                              " rows, found " +
                                              std::to_string(lines.size() - 1));
  }
  std::pair<PRCurve, PRCurve> out;
  const auto& grid = RecallGrid();
  for (std::size_t k = 0; k < kGridPoints; ++k) {
    const std::string row(lines[k + 1]);
    double r = 0.0, b = 0.0, a = 0.0;
    int used = 0;
    if (std::sscanf(row.c_str(), "%lf,%lf,%lf%n", &r, &b, &a, &used) != 3 ||
        static_cast<std::size_t>(used) != row.size()) {
      throw Error(ErrorCode::kFormat, "bad PR CSV row " + std::to_string(k + 1));
    }
    if (std::abs(r - grid[k]) > 5e-7) {
      throw Error(ErrorCode::kGridMismatch, "row " + std::to_string(k + 1) +
                                                " has recall " + row.substr(0, row.find(',')));
    }
    out.first.precision[k] = b;
    out.second.precision[k] = a;
  }
  return out;
}

void EmitPlotData(const PRCurve& baseline, const PRCurve& adapted,
                  const fs::path& path) {
  WriteFileAtomic(path, PlotCsv(baseline, adapted));
}

std::string ScoreKey(std::string_view qid, std::string_view candidate_id) {
  return std::string(qid) + "@" + std::string(candidate_id);
}

std::vector<double> LookupScores(const EvalQuery& q,
                                 const embed::EmbeddingMatrix& scores) {
  if (scores.dim != 1) {
    throw Error(ErrorCode::kValidation, "score files must have dim 1");
  }
  const auto index = scores.Index();
  std::vector<double> out;
  out.reserve(q.candidate_ids.size());
  for (const auto& cand : q.candidate_ids) {
    const auto it = index.find(ScoreKey(q.qid, cand));
    if (it == index.end()) {
      throw Error(ErrorCode::kValidation,
                  "no score for " + ScoreKey(q.qid, cand));
    }
    out.push_back(scores.data[it->second]);
  }
  return out;
}

Json EvalSummary::ToJson() const {
  Json j;
  j["mean_ap_baseline"] = mean_ap_baseline;
  j["mean_ap_adapted"] = mean_ap_adapted;
  j["queries"] = Json::array();
  for (const auto& [qid, ap] : per_query_ap) {
    j["queries"].push_back({{"qid", qid}, {"ap_baseline", ap.first},
                            {"ap_adapted", ap.second}});
  }
  return j;
}

EvalSummary Evaluate(const std::vector<EvalQuery>& queries,
                     const embed::EmbeddingMatrix& baseline_scores,
                     const embed::EmbeddingMatrix& adapted_scores) {
  if (queries.empty()) throw Error(ErrorCode::kEmptyInput, "no evaluation queries");
  std::vector<PRCurve> base_curves;
  std::vector<PRCurve> adapted_curves;
  EvalSummary summary;
  for (const auto& q : queries) {
    ValidateQuery(q);
    const auto b = LookupScores(q, baseline_scores);
    const auto a = LookupScores(q, adapted_scores);
    base_curves.push_back(EnvelopeOnGrid(PRPoints(b, q.labels)));
    adapted_curves.push_back(EnvelopeOnGrid(PRPoints(a, q.labels)));
    const double ap_b = AveragePrecision(b, q.labels);
    const double ap_a = AveragePrecision(a, q.labels);
    summary.per_query_ap.push_back({q.qid, {ap_b, ap_a}});
    summary.mean_ap_baseline += ap_b;
    summary.mean_ap_adapted += ap_a;
  }
  summary.mean_ap_baseline /= static_cast<double>(queries.size());
  summary.mean_ap_adapted /= static_cast<double>(queries.size());
  summary.baseline = MacroAverage(base_curves);
  summary.adapted = MacroAverage(adapted_curves);
  return summary;
}

}  // namespace artcontext::eval
