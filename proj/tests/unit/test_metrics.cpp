// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "hedge/metrics.hpp"
#include "support/oracles.hpp"
#include "support/scripted_judges.hpp"

using namespace hedge;
using Catch::Approx;

namespace {

// A case with equal-size pools and given logprobs; texts are unique per slot.
QuestionCase make_case(const std::vector<double>& clean_lp, const std::vector<double>& noisy_lp) {
  QuestionCase c;
  c.id = "m";
  c.question = "Q";
  c.baseline = {"b", -0.1};
  for (std::size_t i = 0; i < clean_lp.size(); ++i) c.clean.push_back({"c" + std::to_string(i), clean_lp[i]});
  for (std::size_t i = 0; i < noisy_lp.size(); ++i) c.noisy.push_back({"n" + std::to_string(i), noisy_lp[i]});
  return c;
}

ClusterLabeling labeling(std::vector<std::size_t> ids) { return canonicalize_labels(ids); }

struct RandomInstance {
  AssembledSequence seq;
  ClusterLabeling lab;
};

RandomInstance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::uniform_real_distribution<double> lp(-3.0, -0.01);
  std::vector<double> a(n), b(n);
  for (auto& x : a) x = lp(rng);
  for (auto& x : b) x = lp(rng);
  RandomInstance r{assemble_sequence(make_case(a, b), InputMode::kAnswerOnly), {}};
  std::vector<std::size_t> ids(2 * n + 1);
  for (auto& v : ids) v = rng() % k;
  r.lab = labeling(ids);
  return r;
}

}  // namespace

TEST_CASE("semantic distribution hand example", "[metrics]") {
  std::vector<double> lp = {std::log(0.8), std::log(0.4), std::log(0.4)};
  std::vector<std::size_t> ids = {0, 0, 1};
  auto d = semantic_distribution(lp, ids, 2);
  REQUIRE(d.mass[0] == Approx(0.7310585786300049).margin(1e-12));
  REQUIRE(d.mass[1] == Approx(0.26894142136999516).margin(1e-12));
  REQUIRE(entropy(d) == Approx(0.5822031088882179).margin(1e-12));
}

TEST_CASE("entropy examples", "[metrics]") {
  REQUIRE(entropy(std::vector<double>{1.0}) == 0.0);
  REQUIRE(entropy(std::vector<double>{0.5, 0.5}) == Approx(std::log(2.0)));
  REQUIRE(entropy(std::vector<double>{0.5, 0.0, 0.5}) == Approx(std::log(2.0)));
}

TEST_CASE("VASE hand example", "[metrics]") {
  std::vector<double> clean = {1.0, 0.0};
  std::vector<double> noisy = {0.0, 1.0};
  auto p = softmax(std::vector<double>{2.0, -1.0});
  REQUIRE(p[0] == Approx(0.9525741268224331).margin(1e-12));
  REQUIRE(vase_from_distributions(clean, noisy, 1.0) == Approx(0.19086497110644246).margin(1e-12));
  REQUIRE_THROWS(vase_from_distributions(clean, std::vector<double>{1.0}, 1.0));
}

TEST_CASE("semantic distribution matches the direct oracle", "[metrics][oracle]") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lp(-4.0, 0.0);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng() % 30;
    const std::size_t k = 1 + rng() % 6;
    std::vector<double> l(n);
    std::vector<std::size_t> ids(n);
    for (auto& x : l) x = lp(rng);
    for (auto& v : ids) v = rng() % k;
    auto d = semantic_distribution(l, ids, k);
    auto o = oracle::eq1_direct(l, ids, k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      REQUIRE(d.mass[j] == Approx(o[j]).margin(1e-12));
      sum += d.mass[j];
    }
    REQUIRE(sum == Approx(1.0).margin(1e-12));
    REQUIRE(entropy(d) >= -1e-15);
    REQUIRE(entropy(d) <= std::log(static_cast<double>(d.occupied())) + 1e-12);
  }
}

TEST_CASE("semantic distribution properties", "[metrics][property]") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> lp(-4.0, 0.0);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + rng() % 20;
    const std::size_t k = 2 + rng() % 5;
    std::vector<double> l(n);
    std::vector<std::size_t> ids(n);
    for (auto& x : l) x = lp(rng);
    for (auto& v : ids) v = rng() % k;
    const double h = entropy(semantic_distribution(l, ids, k));

    // Relabeling clusters permutes the mass and leaves entropy fixed.
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> relabeled(n);
    for (std::size_t i = 0; i < n; ++i) relabeled[i] = perm[ids[i]];
    auto a = semantic_distribution(l, ids, k);
    auto b = semantic_distribution(l, relabeled, k);
    for (std::size_t j = 0; j < k; ++j) REQUIRE(b.mass[perm[j]] == Approx(a.mass[j]).margin(1e-12));

    // A common shift of all logprobs changes nothing.
    std::vector<double> shifted(l);
    for (auto& x : shifted) x -= 1.7;
    REQUIRE(entropy(semantic_distribution(shifted, ids, k)) == Approx(h).margin(1e-12));

    // Reordering responses changes nothing.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> l2;
    std::vector<std::size_t> ids2;
    for (auto o : order) {
      l2.push_back(l[o]);
      ids2.push_back(ids[o]);
    }
    REQUIRE(entropy(semantic_distribution(l2, ids2, k)) == Approx(h).margin(1e-12));
  }
}

TEST_CASE("sum-normalized mode", "[metrics]") {
  std::vector<double> lp = {std::log(0.8), std::log(0.4), std::log(0.4)};
  std::vector<std::size_t> ids = {0, 0, 1};
  auto d = semantic_distribution(lp, ids, 2, Eq1Mode::kSumNormalized);
  REQUIRE(d.mass[0] == Approx(0.75));
  REQUIRE(d.mass[1] == Approx(0.25));
  REQUIRE(parse_eq1_mode("sum_normalized") == Eq1Mode::kSumNormalized);
  REQUIRE(parse_eq1_mode(to_string(Eq1Mode::kVerbatim)) == Eq1Mode::kVerbatim);
}

TEST_CASE("semantic distribution input errors", "[metrics]") {
  std::vector<double> none;
  std::vector<std::size_t> no_ids;
  REQUIRE_THROWS_AS(semantic_distribution(none, no_ids, 1), EmptyPool);
  std::vector<double> one = {-0.1};
  std::vector<std::size_t> bad = {3};
  REQUIRE_THROWS(semantic_distribution(one, bad, 2));
}

TEST_CASE("n = 1 makes SE zero", "[metrics]") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    auto r = random_instance(rng, 1, 3);
    REQUIRE(se_score(r.seq, r.lab) == 0.0);
    REQUIRE(se_score(r.seq, r.lab, Eq1Mode::kSumNormalized) == 0.0);
  }
}

TEST_CASE("RadFlag closed forms", "[metrics]") {
  auto seq = assemble_sequence(make_case({-0.1, -0.2}, {-0.3, -0.4}), InputMode::kAnswerOnly);
  REQUIRE(radflag_score(seq, labeling({0, 0, 0, 1, 1})) == 0.0);
  REQUIRE(radflag_score(seq, labeling({0, 1, 1, 0, 0})) == 1.0);
  REQUIRE(radflag_score(seq, labeling({0, 0, 1, 2, 2})) == 0.5);
}

TEST_CASE("RadFlag is quantized in steps of 1/n", "[metrics][property]") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 1 + rng() % 30;
    auto r = random_instance(rng, n, 1 + rng() % 4);
    const double v = radflag_score(r.seq, r.lab) * static_cast<double>(n);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= static_cast<double>(n));
    REQUIRE(std::abs(v - std::round(v)) < 1e-9);
  }
}

TEST_CASE("VASE properties", "[metrics][property]") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng() % 15;
    auto r = random_instance(rng, n, 1 + rng() % 5);
    auto jd = joint_distributions(r.seq, r.lab);
    const double v = vase_score(r.seq, r.lab);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= std::log(static_cast<double>(jd.support)) + 1e-12);

    // Matches the formula evaluated with the oracle softmax.
    std::vector<double> logits(jd.support);
    for (std::size_t j = 0; j < jd.support; ++j) logits[j] = 2.0 * jd.clean.mass[j] - jd.noisy.mass[j];
    REQUIRE(v == Approx(oracle::shannon(oracle::softmax_direct(logits))).margin(1e-12));

    // alpha = 0 reduces to the entropy of softmax(s_clean).
    REQUIRE(vase_score(r.seq, r.lab, 0.0) ==
            Approx(oracle::shannon(oracle::softmax_direct(jd.clean.mass))).margin(1e-12));
  }
}

TEST_CASE("VASE with identical clean and noisy pools", "[metrics]") {
  // Same clusters and logprobs in both pools: the contrast term vanishes.
  auto c = make_case({-0.2, -0.9, -0.4}, {-0.2, -0.9, -0.4});
  auto seq = assemble_sequence(c, InputMode::kAnswerOnly);
  auto lab = labeling({0, 1, 1, 2, 1, 1, 2});
  auto jd = joint_distributions(seq, lab);
  REQUIRE(vase_score(seq, lab) == Approx(entropy(softmax(jd.clean.mass))).margin(1e-12));
}

TEST_CASE("joint support excludes baseline-only clusters", "[metrics]") {
  auto seq = assemble_sequence(make_case({-0.1, -0.1}, {-0.1, -0.1}), InputMode::kAnswerOnly);
  auto jd = joint_distributions(seq, labeling({0, 1, 1, 2, 2}));
  REQUIRE(jd.support == 2);
  REQUIRE(jd.clean.mass == std::vector<double>{1.0, 0.0});
  REQUIRE(jd.noisy.mass == std::vector<double>{0.0, 1.0});
  REQUIRE_THROWS(joint_distributions(seq, labeling({0, 1, 1})));
}

TEST_CASE("score_case chains clustering and metrics", "[metrics]") {
  MockEmbedder emb(32);
  MockNliJudge nli;
  JudgeBundle judges{&emb, &nli, {}};
  std::mt19937_64 rng(12);
  const std::vector<std::string> vocab = {"yes", "no", "left", "right", "normal", "abnormal", "small polyp"};
  std::uniform_real_distribution<double> lp(-2.0, -0.05);
  for (int t = 0; t < 20; ++t) {
    QuestionCase c;
    c.id = "r" + std::to_string(t);
    c.question = "What is shown?";
    c.baseline = {vocab[rng() % vocab.size()], lp(rng)};
    const std::size_t n = 1 + rng() % 8;
    for (std::size_t i = 0; i < n; ++i) {
      c.clean.push_back({vocab[rng() % vocab.size()], lp(rng)});
      c.noisy.push_back({vocab[rng() % vocab.size()], lp(rng)});
    }
    for (auto strategy : {ClusteringStrategy::kEmbedding, ClusteringStrategy::kNli}) {
      ScoringOptions opts;
      opts.strategy = strategy;
      auto r = score_case(c, opts, judges);
      auto seq = assemble_sequence(c, opts.mode);
      auto lab = strategy == ClusteringStrategy::kNli ? cluster_by_nli(seq.texts, nli)
                                                      : cluster_by_embedding(seq.texts, emb, opts.embedding);
      REQUIRE(r.labeling == lab);
      REQUIRE(r.scores.se == se_score(seq, lab));
      REQUIRE(r.scores.radflag == radflag_score(seq, lab));
      REQUIRE(r.scores.vase == vase_score(seq, lab));
    }
  }
  JudgeBundle empty;
  REQUIRE_THROWS(score_case(make_case({-0.1}, {-0.1}), ScoringOptions{}, empty));
}

TEST_CASE("metric names", "[metrics]") {
  for (auto m : kAllMetrics) REQUIRE(parse_metric(to_string(m)) == m);
  REQUIRE(parse_metric("vase") == Metric::kVase);
  REQUIRE(parse_clustering("nli") == ClusteringStrategy::kNli);
  REQUIRE_FALSE(parse_clustering("kmeans").has_value());
}
