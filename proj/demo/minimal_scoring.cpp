// SPDX-License-Identifier: Apache-2.0
//
// Scores one hand-written case with the mock judges under both clustering
// strategies.

#include <iostream>

#include "hedge/metrics.hpp"

int main() {
  hedge::QuestionCase c;
  c.id = "demo-1";
  c.question = "Is there a fracture?";
  c.baseline = {"yes", -0.05};
  c.clean = {{"yes", -0.2}, {"yes", -0.3}, {"no", -0.9}, {"yes fracture present", -0.6}};
  c.noisy = {{"no", -0.4}, {"no", -0.5}, {"yes", -0.7}, {"unclear", -1.2}};
  c.label = hedge::Label::kHallucinated;

  hedge::MockEmbedder embedder;
  hedge::MockNliJudge nli;
  hedge::JudgeBundle judges{&embedder, &nli, {}};

  for (auto strategy : {hedge::ClusteringStrategy::kEmbedding, hedge::ClusteringStrategy::kNli}) {
    hedge::ScoringOptions opts;
    opts.strategy = strategy;
    opts.embedding.tau = 0.9;
    const auto r = hedge::score_case(c, opts, judges);
    std::cout << to_string(strategy) << ": clusters=" << r.labeling.num_clusters << " SE=" << r.scores.se
              << " RadFlag=" << r.scores.radflag << " VASE=" << r.scores.vase << '\n';
  }
  return 0;
}
