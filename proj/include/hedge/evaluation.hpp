// SPDX-License-Identifier: Apache-2.0
#pragma once

// Detector evaluation: ROC-AUC against hallucination labels, threshold
// search for embedding clustering, and sampling-scale sweeps.
//
// Score polarity: higher SE / RadFlag / VASE means "more likely hallucinated".

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hedge/clustering.hpp"
#include "hedge/core.hpp"
#include "hedge/errors.hpp"
#include "hedge/judges.hpp"
#include "hedge/metrics.hpp"
#include "hedge/parallel.hpp"

namespace hedge {

struct LabeledScore {
  std::string case_id;
  double score = 0.0;
  Label label = Label::kSupported;
};

// Mann-Whitney U with average ranks for ties:
//   AUC = (sum of positive ranks - P(P+1)/2) / (P N)
// nullopt when only one class is present.
inline std::optional<double> roc_auc(std::span<const LabeledScore> items) {
  std::size_t pos = 0;
  for (const auto& it : items) {
    if (!std::isfinite(it.score)) throw std::invalid_argument("roc_auc: non-finite score for '" + it.case_id + "'");
    if (it.label == Label::kHallucinated) ++pos;
  }
  const std::size_t neg = items.size() - pos;
  if (pos == 0 || neg == 0) return std::nullopt;

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return items[a].score < items[b].score; });

  double pos_rank_sum = 0.0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    while (end < order.size() && items[order[end]].score == items[order[start]].score) ++end;
    // Ranks start..end-1 (1-based: start+1..end) share their mean.
    const double avg_rank = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t k = start; k < end; ++k) {
      if (items[order[k]].label == Label::kHallucinated) pos_rank_sum += avg_rank;
    }
    start = end;
  }
  const double p = static_cast<double>(pos);
  const double n = static_cast<double>(neg);
  return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

inline std::optional<double> roc_auc(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: scores and labels differ in length");
  std::vector<LabeledScore> items(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) items[i] = {"", scores[i], labels[i]};
  return roc_auc(items);
}

using Dataset = std::vector<QuestionCase>;

inline bool has_both_labels(const Dataset& ds) {
  bool pos = false;
  bool neg = false;
  for (const auto& c : ds) (c.label == Label::kHallucinated ? pos : neg) = true;
  return pos && neg;
}

inline std::optional<double> metric_auc(const Dataset& ds, std::span<const CaseResult> results, Metric metric) {
  std::vector<LabeledScore> items;
  items.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) items.push_back({ds[i].id, metric_value(results[i].scores, metric), ds[i].label});
  return roc_auc(items);
}

// Scores every case; result order follows the dataset.
inline std::vector<CaseResult> score_dataset(const Dataset& ds, const ScoringOptions& opts, JudgeBundle& judges,
                                             std::size_t workers = 1) {
  std::vector<CaseResult> out(ds.size());
  parallel_for(ds.size(), workers, [&](std::size_t i) { out[i] = score_case(ds[i], opts, judges); });
  return out;
}

// `trials` evenly spaced points including both bounds.
inline std::vector<double> tau_grid(double lo, double hi, std::size_t trials) {
  if (trials == 0 || !(lo > 0.0) || !(hi <= 1.0) || lo > hi) throw std::invalid_argument("tau_grid: bad bounds");
  if (trials == 1) return {lo};
  std::vector<double> g(trials);
  for (std::size_t k = 0; k < trials; ++k) {
    g[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(trials - 1);
  }
  g.back() = hi;
  return g;
}

struct TuneOptions {
  double lo = 0.8;
  double hi = 0.99;
  std::size_t trials = 20;
  Metric metric = Metric::kVase;
  ScoringOptions scoring;  // strategy is forced to embedding
  std::size_t workers = 1;
};

struct TuneResult {
  double tau_star = 0.0;
  double auc_star = 0.0;
  std::vector<double> grid;
  std::vector<std::optional<double>> aucs;
};

// Grid search over tau, maximizing AUC of `metric` on the tuning split. Ties
// resolve to the smaller tau. Embeddings are computed once per case; the
// graph, clustering and metrics are recomputed at every grid point.
inline TuneResult tune_tau(const Dataset& tuning_split, const TuneOptions& opts, JudgeBundle& judges) {
  if (!has_both_labels(tuning_split)) throw DegenerateLabels("tune_tau: tuning split needs both labels");
  if (judges.embedder == nullptr) throw Error("tune_tau: embedder required");

  std::vector<AssembledSequence> seqs(tuning_split.size());
  std::vector<std::vector<EmbeddingVector>> vecs(tuning_split.size());
  parallel_for(tuning_split.size(), opts.workers, [&](std::size_t i) {
    seqs[i] = assemble_sequence(tuning_split[i], opts.scoring.mode);
    vecs[i] = embed_batch(seqs[i].texts, *judges.embedder, judges.batch);
  });

  TuneResult r;
  r.grid = tau_grid(opts.lo, opts.hi, opts.trials);
  bool found = false;
  for (double tau : r.grid) {
    EmbeddingClusterOptions eo = opts.scoring.embedding;
    eo.tau = tau;
    std::vector<CaseResult> results(tuning_split.size());
    parallel_for(tuning_split.size(), opts.workers, [&](std::size_t i) {
      results[i].labeling = cluster_embeddings(vecs[i], eo);
      results[i].scores = compute_scores(seqs[i], results[i].labeling, opts.scoring.alpha, opts.scoring.eq1_mode);
    });
    auto auc = metric_auc(tuning_split, results, opts.metric);
    r.aucs.push_back(auc);
    if (auc && (!found || *auc > r.auc_star)) {
      r.tau_star = tau;
      r.auc_star = *auc;
      found = true;
    }
  }
  return r;
}

inline const std::vector<std::size_t>& default_sweep_axis() {
  static const std::vector<std::size_t> axis = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 15, 20, 25, 30};
  return axis;
}

struct SweepRow {
  std::string group;  // prompt config of the cases in this row
  ClusteringStrategy clustering = ClusteringStrategy::kEmbedding;
  Metric metric = Metric::kSe;
  std::vector<std::optional<double>> aucs;  // aligned with SweepResult::axis
};

struct SweepResult {
  std::vector<std::size_t> axis;
  std::vector<SweepRow> rows;
};

struct SweepOptions {
  std::vector<std::size_t> n_values = default_sweep_axis();
  std::vector<ClusteringStrategy> strategies = {ClusteringStrategy::kEmbedding, ClusteringStrategy::kNli};
  ScoringOptions scoring;  // strategy field is overridden per row
  std::size_t workers = 1;
};

// Groups cases by prompt config, keeping first-appearance order.
inline std::vector<std::pair<std::string, Dataset>> group_by_prompt(const Dataset& ds) {
  std::vector<std::pair<std::string, Dataset>> groups;
  for (const auto& c : ds) {
    const std::string key(to_string(c.prompt_config));
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.emplace_back(key, Dataset{});
      it = std::prev(groups.end());
    }
    it->second.push_back(c);
  }
  return groups;
}

// For each n: truncate pools to the first n clean and n noisy samples,
// re-cluster, re-score and compute the AUC of every metric.
inline SweepResult sweep_sampling_scale(const Dataset& ds, const SweepOptions& opts, JudgeBundle& judges) {
  if (opts.n_values.empty()) throw std::invalid_argument("sweep: empty n axis");
  const std::size_t max_n = *std::max_element(opts.n_values.begin(), opts.n_values.end());
  for (const auto& c : ds) {
    if (c.clean.size() < max_n || c.noisy.size() < max_n) {
      throw InsufficientSamples("case '" + c.id + "' has " + std::to_string(std::min(c.clean.size(), c.noisy.size())) +
                                " samples per pool, sweep needs " + std::to_string(max_n));
    }
  }

  SweepResult out;
  out.axis = opts.n_values;
  for (const auto& [group, cases] : group_by_prompt(ds)) {
    for (auto strategy : opts.strategies) {
      std::vector<SweepRow> rows;
      for (auto m : kAllMetrics) rows.push_back({group, strategy, m, {}});
      for (std::size_t n : opts.n_values) {
        Dataset truncated;
        truncated.reserve(cases.size());
        for (const auto& c : cases) truncated.push_back(truncate_case(c, n));
        ScoringOptions so = opts.scoring;
        so.strategy = strategy;
        const auto results = score_dataset(truncated, so, judges, opts.workers);
        for (auto& row : rows) row.aucs.push_back(metric_auc(truncated, results, row.metric));
      }
      for (auto& row : rows) out.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace hedge
