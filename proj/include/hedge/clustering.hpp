// SPDX-License-Identifier: Apache-2.0
#pragma once

// Semantic clustering of an answer sequence.
//
// Entailment route: judge every ordered pair, keep (i, j) as a merge edge only
// when both directions entail, then union-find over those edges in ascending
// (i, j) order. A union is skipped when it would put a contradicting pair
// (either direction judged "contradicts") into one component.
//
// Embedding route: unit vectors, cosine matrix, edge when sim >= tau (or
// within the k nearest neighbours when k is set), connected components.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hedge/core.hpp"
#include "hedge/judges.hpp"
#include "hedge/union_find.hpp"

namespace hedge {

using Edge = std::pair<std::size_t, std::size_t>;  // always first < second

// Dense symmetric n x n matrix.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  explicit SimilarityMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) noexcept {
    data_[i * n_ + j] = v;
    data_[j * n_ + i] = v;
  }
  std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct SimilarityGraph {
  std::size_t n = 0;
  std::vector<Edge> edges;  // sorted, unique
  SimilarityMatrix sims;
};

// Dot products of unit vectors clamped to [-1, 1]. Bitwise-identical vectors
// (and the diagonal) get exactly 1.
inline SimilarityMatrix pairwise_cosines(std::span<const EmbeddingVector> vectors) {
  const std::size_t n = vectors.size();
  SimilarityMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.set(i, i, 1.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (vectors[i].dim() != vectors[j].dim()) throw DimensionMismatch("pairwise_cosines: dimension mismatch");
      const double s = vectors[i] == vectors[j] ? 1.0 : std::clamp(dot(vectors[i], vectors[j]), -1.0, 1.0);
      m.set(i, j, s);
    }
  }
  return m;
}

inline std::vector<Edge> threshold_edges(const SimilarityMatrix& sims, double tau) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    for (std::size_t j = i + 1; j < sims.size(); ++j) {
      if (sims(i, j) >= tau) edges.emplace_back(i, j);
    }
  }
  return edges;
}

// For each node its k most similar other nodes (ties -> lower index), as an
// undirected sorted edge set.
inline std::vector<Edge> knn_edges(const SimilarityMatrix& sims, std::size_t k) {
  const std::size_t n = sims.size();
  if (k < 1 || k >= n) throw std::invalid_argument("knn_edges: need 1 <= k < n");
  std::vector<Edge> edges;
  edges.reserve(n * k);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    order.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (sims(i, a) != sims(i, b)) return sims(i, a) > sims(i, b);
                        return a < b;
                      });
    for (std::size_t r = 0; r < k; ++r) edges.emplace_back(std::min(i, order[r]), std::max(i, order[r]));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

inline SimilarityGraph build_similarity_graph(SimilarityMatrix sims, double tau,
                                              std::optional<std::size_t> k = std::nullopt) {
  SimilarityGraph g;
  g.n = sims.size();
  g.edges = threshold_edges(sims, tau);
  if (k && g.n > 1) {
    auto extra = knn_edges(sims, std::min(*k, g.n - 1));
    std::vector<Edge> merged;
    std::set_union(g.edges.begin(), g.edges.end(), extra.begin(), extra.end(), std::back_inserter(merged));
    g.edges = std::move(merged);
  }
  g.sims = std::move(sims);
  return g;
}

inline ClusterLabeling connected_components(std::size_t n, std::span<const Edge> edges) {
  DisjointSets ds(n);
  for (auto [i, j] : edges) ds.unite(i, j);
  return canonicalize_labels(ds.roots());
}

struct EmbeddingClusterOptions {
  double tau = 0.9;
  std::optional<std::size_t> k;  // kNN edges disabled when unset
};

// Clustering step alone, for callers that already hold the vectors.
inline ClusterLabeling cluster_embeddings(std::span<const EmbeddingVector> vectors,
                                          const EmbeddingClusterOptions& opts) {
  if (vectors.empty()) throw std::invalid_argument("cluster_embeddings: empty input");
  if (!(opts.tau > 0.0 && opts.tau <= 1.0)) throw std::invalid_argument("cluster_embeddings: tau must be in (0, 1]");
  auto g = build_similarity_graph(pairwise_cosines(vectors), opts.tau, opts.k);
  return connected_components(g.n, g.edges);
}

inline ClusterLabeling cluster_by_embedding(std::span<const std::string> texts, Embedder& embedder,
                                            const EmbeddingClusterOptions& opts, const BatchOptions& batch = {}) {
  if (texts.empty()) throw std::invalid_argument("cluster_by_embedding: empty input");
  auto vectors = embed_batch(texts, embedder, batch);
  return cluster_embeddings(vectors, opts);
}

// Full directed judgement matrix; the diagonal is reflexive entailment and is
// never sent to the judge.
class EntailmentGraph {
 public:
  EntailmentGraph() = default;
  explicit EntailmentGraph(std::size_t n) : n_(n), labels_(n * n, EntailmentLabel::kNeutral) {
    for (std::size_t i = 0; i < n; ++i) labels_[i * n + i] = EntailmentLabel::kEntails;
  }

  std::size_t size() const noexcept { return n_; }
  EntailmentLabel label(std::size_t premise, std::size_t hypothesis) const noexcept {
    return labels_[premise * n_ + hypothesis];
  }
  void set(std::size_t premise, std::size_t hypothesis, EntailmentLabel l) noexcept {
    labels_[premise * n_ + hypothesis] = l;
  }

  bool entails(std::size_t i, std::size_t j) const noexcept { return label(i, j) == EntailmentLabel::kEntails; }
  bool mutual(std::size_t i, std::size_t j) const noexcept { return entails(i, j) && entails(j, i); }
  bool contradicts(std::size_t i, std::size_t j) const noexcept {
    return label(i, j) == EntailmentLabel::kContradicts || label(j, i) == EntailmentLabel::kContradicts;
  }

  // Mutual-entailment edges in ascending (i, j) order.
  std::vector<Edge> mutual_edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        if (mutual(i, j)) out.emplace_back(i, j);
      }
    }
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<EntailmentLabel> labels_;
};

// Judges all n(n-1) ordered pairs i != j.
inline EntailmentGraph build_entailment_graph(std::span<const std::string> texts, EntailmentJudge& judge,
                                              const BatchOptions& batch = {}) {
  const std::size_t n = texts.size();
  EntailmentGraph g(n);
  if (n < 2) return g;
  std::vector<TextPair> pairs;
  pairs.reserve(n * (n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) pairs.emplace_back(texts[i], texts[j]);
    }
  }
  auto labels = judge_pairs(pairs, judge, batch);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) g.set(i, j, labels[k++]);
    }
  }
  return g;
}

// Union-find over mutual edges with a merge-time contradiction veto.
inline ClusterLabeling cluster_entailment_graph(const EntailmentGraph& g) {
  const std::size_t n = g.size();
  DisjointSets ds(n);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};

  auto vetoed = [&](std::size_t ra, std::size_t rb) {
    for (std::size_t a : members[ra]) {
      for (std::size_t b : members[rb]) {
        if (g.contradicts(a, b)) return true;
      }
    }
    return false;
  };

  for (auto [i, j] : g.mutual_edges()) {
    const std::size_t ri = ds.find(i);
    const std::size_t rj = ds.find(j);
    if (ri == rj || vetoed(ri, rj)) continue;
    const std::size_t root = ds.unite(ri, rj);
    const std::size_t other = root == ri ? rj : ri;
    auto& dst = members[root];
    dst.insert(dst.end(), members[other].begin(), members[other].end());
    members[other].clear();
  }
  return canonicalize_labels(ds.roots());
}

inline ClusterLabeling cluster_by_nli(std::span<const std::string> texts, EntailmentJudge& judge,
                                      const BatchOptions& batch = {}) {
  if (texts.empty()) throw std::invalid_argument("cluster_by_nli: empty input");
  return cluster_entailment_graph(build_entailment_graph(texts, judge, batch));
}

}  // namespace hedge
