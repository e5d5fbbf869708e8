// SPDX-License-Identifier: Apache-2.0
#pragma once

// Semantic distribution, entropy and the three hallucination scores
// (SE, RadFlag, VASE) over a clustered answer sequence.
//
// Distribution (default, "verbatim" form), per condition pool P:
//
//   inner_j = sum_{i in P, c_i = j} exp(logl_i - max_{k in P} logl_k)
//   s_j     = exp(inner_j) / sum_m exp(inner_m)     over clusters occupied in P
//
// "sum_normalized" instead uses s_j = inner_j / sum_m inner_m. Clusters of the
// joint support that are empty in P get mass 0. The baseline A0 never
// contributes mass; it only supplies c_0 to RadFlag.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hedge/clustering.hpp"
#include "hedge/core.hpp"
#include "hedge/errors.hpp"
#include "hedge/judges.hpp"

namespace hedge {

enum class Eq1Mode : std::uint8_t { kVerbatim, kSumNormalized };

inline constexpr std::string_view to_string(Eq1Mode m) noexcept {
  return m == Eq1Mode::kVerbatim ? "verbatim" : "sum_normalized";
}

inline std::optional<Eq1Mode> parse_eq1_mode(std::string_view s) noexcept {
  if (s == "verbatim") return Eq1Mode::kVerbatim;
  if (s == "sum_normalized") return Eq1Mode::kSumNormalized;
  return std::nullopt;
}

enum class Condition : std::uint8_t { kClean, kNoisy };

struct SemanticDistribution {
  std::vector<double> mass;  // indexed by joint cluster id
  Condition condition = Condition::kClean;

  std::size_t support() const noexcept { return mass.size(); }
  std::size_t occupied() const noexcept {
    return static_cast<std::size_t>(std::count_if(mass.begin(), mass.end(), [](double m) { return m > 0.0; }));
  }
};

// cluster_ids[i] must lie in [0, support).
inline SemanticDistribution semantic_distribution(std::span<const double> logprobs,
                                                  std::span<const std::size_t> cluster_ids, std::size_t support,
                                                  Eq1Mode mode = Eq1Mode::kVerbatim,
                                                  Condition condition = Condition::kClean) {
  if (logprobs.empty()) throw EmptyPool("semantic_distribution: empty pool");
  if (logprobs.size() != cluster_ids.size()) {
    throw std::invalid_argument("semantic_distribution: logprobs and cluster_ids differ in length");
  }
  double max_lp = -std::numeric_limits<double>::infinity();
  for (double lp : logprobs) {
    if (!std::isfinite(lp)) throw std::invalid_argument("semantic_distribution: non-finite log-prob");
    max_lp = std::max(max_lp, lp);
  }

  std::vector<double> inner(support, 0.0);
  std::vector<bool> occupied(support, false);
  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    const std::size_t j = cluster_ids[i];
    if (j >= support) throw std::out_of_range("semantic_distribution: cluster id outside support");
    inner[j] += std::exp(logprobs[i] - max_lp);
    occupied[j] = true;
  }

  SemanticDistribution d{std::vector<double>(support, 0.0), condition};
  if (mode == Eq1Mode::kVerbatim) {
    // exp(inner_j) / sum exp(inner_m), shifted by the largest inner sum.
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < support; ++j) {
      if (occupied[j]) top = std::max(top, inner[j]);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < support; ++j) {
      if (occupied[j]) {
        d.mass[j] = std::exp(inner[j] - top);
        z += d.mass[j];
      }
    }
    for (double& m : d.mass) m /= z;
  } else {
    double z = 0.0;
    for (double v : inner) z += v;
    for (std::size_t j = 0; j < support; ++j) d.mass[j] = inner[j] / z;
  }
  return d;
}

// Shannon entropy in nats; zero-mass entries contribute nothing.
inline double entropy(std::span<const double> p) noexcept {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

inline double entropy(const SemanticDistribution& d) noexcept { return entropy(d.mass); }

inline std::vector<double> softmax(std::span<const double> x) {
  std::vector<double> out(x.size());
  if (x.empty()) return out;
  const double top = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - top);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

// Clean and noisy distributions on a shared support: the clusters occupied by
// at least one clean or noisy response, numbered by first occurrence.
struct JointDistributions {
  SemanticDistribution clean;
  SemanticDistribution noisy;
  std::size_t support = 0;
};

inline void check_coverage(const AssembledSequence& seq, const ClusterLabeling& labeling) {
  if (labeling.size() != seq.size()) {
    throw std::invalid_argument("labeling covers " + std::to_string(labeling.size()) + " responses, sequence has " +
                                std::to_string(seq.size()));
  }
  if (seq.pool_size() == 0) throw EmptyPool("empty clean pool");
}

inline JointDistributions joint_distributions(const AssembledSequence& seq, const ClusterLabeling& labeling,
                                              Eq1Mode mode = Eq1Mode::kVerbatim) {
  check_coverage(seq, labeling);
  std::unordered_map<std::size_t, std::size_t> joint;
  auto remap = [&](Span s) {
    std::vector<std::size_t> ids;
    ids.reserve(s.size());
    for (std::size_t i = s.begin; i < s.end; ++i) {
      auto [it, inserted] = joint.try_emplace(labeling.ids[i], joint.size());
      ids.push_back(it->second);
    }
    return ids;
  };
  const auto clean_ids = remap(seq.clean);
  const auto noisy_ids = remap(seq.noisy);
  const std::size_t support = joint.size();

  std::span<const double> lp(seq.logprobs);
  JointDistributions out;
  out.support = support;
  out.clean = semantic_distribution(lp.subspan(seq.clean.begin, seq.clean.size()), clean_ids, support, mode,
                                    Condition::kClean);
  out.noisy = semantic_distribution(lp.subspan(seq.noisy.begin, seq.noisy.size()), noisy_ids, support, mode,
                                    Condition::kNoisy);
  return out;
}

// SE = H(s_clean).
inline double se_score(const AssembledSequence& seq, const ClusterLabeling& labeling,
                       Eq1Mode mode = Eq1Mode::kVerbatim) {
  return entropy(joint_distributions(seq, labeling, mode).clean);
}

// 1 - (1/n) * #{i in 1..n : c_i == c_0}.
inline double radflag_score(const AssembledSequence& seq, const ClusterLabeling& labeling) {
  check_coverage(seq, labeling);
  const std::size_t c0 = labeling.ids[seq.baseline.begin];
  std::size_t same = 0;
  for (std::size_t i = seq.clean.begin; i < seq.clean.end; ++i) {
    if (labeling.ids[i] == c0) ++same;
  }
  return 1.0 - static_cast<double>(same) / static_cast<double>(seq.pool_size());
}

inline double vase_from_distributions(std::span<const double> s_clean, std::span<const double> s_noisy,
                                      double alpha) {
  if (s_clean.size() != s_noisy.size()) throw std::invalid_argument("vase: distributions differ in support");
  std::vector<double> logits(s_clean.size());
  for (std::size_t j = 0; j < logits.size(); ++j) logits[j] = s_clean[j] + alpha * (s_clean[j] - s_noisy[j]);
  return entropy(softmax(logits));
}

// VASE = H(softmax(s_clean + alpha * (s_clean - s_noisy))).
inline double vase_score(const AssembledSequence& seq, const ClusterLabeling& labeling, double alpha = 1.0,
                         Eq1Mode mode = Eq1Mode::kVerbatim) {
  const auto jd = joint_distributions(seq, labeling, mode);
  return vase_from_distributions(jd.clean.mass, jd.noisy.mass, alpha);
}

struct MetricScores {
  double se = 0.0;
  double radflag = 0.0;
  double vase = 0.0;
  double alpha = 1.0;
};

enum class Metric : std::uint8_t { kSe, kRadFlag, kVase };

inline constexpr std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::kSe: return "SE";
    case Metric::kRadFlag: return "RadFlag";
    case Metric::kVase: return "VASE";
  }
  return "SE";
}

inline std::optional<Metric> parse_metric(std::string_view s) noexcept {
  if (s == "SE" || s == "se") return Metric::kSe;
  if (s == "RadFlag" || s == "radflag") return Metric::kRadFlag;
  if (s == "VASE" || s == "vase") return Metric::kVase;
  return std::nullopt;
}

inline constexpr Metric kAllMetrics[] = {Metric::kSe, Metric::kRadFlag, Metric::kVase};

inline double metric_value(const MetricScores& s, Metric m) noexcept {
  switch (m) {
    case Metric::kSe: return s.se;
    case Metric::kRadFlag: return s.radflag;
    case Metric::kVase: return s.vase;
  }
  return 0.0;
}

inline MetricScores compute_scores(const AssembledSequence& seq, const ClusterLabeling& labeling, double alpha,
                                   Eq1Mode mode) {
  const auto jd = joint_distributions(seq, labeling, mode);
  MetricScores s;
  s.alpha = alpha;
  s.se = entropy(jd.clean);
  s.radflag = radflag_score(seq, labeling);
  s.vase = vase_from_distributions(jd.clean.mass, jd.noisy.mass, alpha);
  return s;
}

enum class ClusteringStrategy : std::uint8_t { kNli, kEmbedding };

inline constexpr std::string_view to_string(ClusteringStrategy s) noexcept {
  return s == ClusteringStrategy::kNli ? "nli" : "embedding";
}

inline std::optional<ClusteringStrategy> parse_clustering(std::string_view s) noexcept {
  if (s == "nli") return ClusteringStrategy::kNli;
  if (s == "embedding") return ClusteringStrategy::kEmbedding;
  return std::nullopt;
}

struct JudgeBundle {
  Embedder* embedder = nullptr;
  EntailmentJudge* nli = nullptr;
  BatchOptions batch;
};

struct ScoringOptions {
  InputMode mode = InputMode::kAnswerOnly;
  ClusteringStrategy strategy = ClusteringStrategy::kEmbedding;
  EmbeddingClusterOptions embedding;
  double alpha = 1.0;
  Eq1Mode eq1_mode = Eq1Mode::kVerbatim;
};

struct CaseResult {
  MetricScores scores;
  ClusterLabeling labeling;
};

inline ClusterLabeling cluster_sequence(const AssembledSequence& seq, const ScoringOptions& opts,
                                        JudgeBundle& judges) {
  if (opts.strategy == ClusteringStrategy::kNli) {
    if (judges.nli == nullptr) throw Error("NLI clustering requested without an entailment judge");
    return cluster_by_nli(seq.texts, *judges.nli, judges.batch);
  }
  if (judges.embedder == nullptr) throw Error("embedding clustering requested without an embedder");
  return cluster_by_embedding(seq.texts, *judges.embedder, opts.embedding, judges.batch);
}

// assemble -> cluster -> SE, RadFlag, VASE.
inline CaseResult score_case(const QuestionCase& c, const ScoringOptions& opts, JudgeBundle& judges) {
  const auto seq = assemble_sequence(c, opts.mode);
  CaseResult r;
  r.labeling = cluster_sequence(seq, opts, judges);
  r.scores = compute_scores(seq, r.labeling, opts.alpha, opts.eq1_mode);
  return r;
}

}  // namespace hedge
