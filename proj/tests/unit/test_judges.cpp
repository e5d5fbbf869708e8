// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>
#include <thread>

#include "hedge/judges.hpp"
#include "support/scripted_judges.hpp"

using namespace hedge;
using hedge::testing::CountingEmbedder;
using hedge::testing::CountingJudge;

TEST_CASE("dedup_texts", "[judges]") {
  std::vector<std::string> abc = {"a", "b", "a"};
  auto d = dedup_texts(abc);
  REQUIRE(d.unique == std::vector<std::string>{"a", "b"});
  REQUIRE(d.back_map == std::vector<std::size_t>{0, 1, 0});

  std::vector<std::string> distinct = {"x", "y", "z"};
  REQUIRE(dedup_texts(distinct).back_map == std::vector<std::size_t>{0, 1, 2});

  std::vector<std::string> same(6, "q");
  auto s = dedup_texts(same);
  REQUIRE(s.unique.size() == 1);
  REQUIRE(s.back_map.size() == 6);
}

TEST_CASE("dedup reconstructs the input", "[judges][property]") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::string> xs(1 + rng() % 40);
    for (auto& x : xs) x = std::string(1, static_cast<char>('a' + rng() % 6));
    auto d = dedup_texts(xs);
    for (std::size_t i = 0; i < xs.size(); ++i) REQUIRE(d.unique[d.back_map[i]] == xs[i]);
  }
}

TEST_CASE("mock embedder", "[judges]") {
  MockEmbedder emb;
  std::vector<std::string> texts = {"a", "a"};
  auto v = embed_batch(texts, emb);
  REQUIRE(v[0] == v[1]);
  REQUIRE(std::abs(v[0].norm() - 1.0) < 1e-6);

  const auto polyp = emb.embed_one("polyp");
  REQUIRE(dot(polyp, emb.embed_one("polyp")) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(dot(polyp, emb.embed_one("no")) < 0.8);

  // Shared words raise similarity.
  REQUIRE(dot(emb.embed_one("small polyp"), polyp) > dot(emb.embed_one("no"), polyp));
}

TEST_CASE("embed_batch is order and batch-arrangement independent", "[judges][property]") {
  MockEmbedder emb(32);
  std::vector<std::string> texts = {"left lung", "right lung", "no", "yes", "left lung", "effusion"};
  auto full = embed_batch(texts, emb, {.batch_size = 512});
  auto small = embed_batch(texts, emb, {.batch_size = 2});
  REQUIRE(full == small);
  std::vector<std::string> reversed(texts.rbegin(), texts.rend());
  auto rev = embed_batch(reversed, emb);
  for (std::size_t i = 0; i < texts.size(); ++i) REQUIRE(rev[texts.size() - 1 - i] == full[i]);
}

TEST_CASE("embed_batch request bound", "[judges]") {
  MockEmbedder emb(8);
  CountingEmbedder counting(emb);
  JudgeCounters counters;
  std::vector<std::string> texts;
  for (int i = 0; i < 1300; ++i) texts.push_back("t" + std::to_string(i % 1100));
  auto v = embed_batch(texts, counting, {.batch_size = 512, .counters = &counters});
  REQUIRE(v.size() == 1300);
  REQUIRE(counting.calls == 3);  // ceil(1100 / 512)
  REQUIRE(counting.items == 1100);
  REQUIRE(counters.embed_requested == 1300);
  REQUIRE(counters.embed_sent == 1100);
  REQUIRE(counters.embed_calls == 3);
}

namespace {

class BadEmbedder final : public Embedder {
 public:
  int mode = 0;
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
    std::vector<EmbeddingVector> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      out.push_back(EmbeddingVector{std::vector<double>(mode == 1 && i == 1 ? 3 : 4, 1.0)});
    }
    if (mode == 2) out.pop_back();
    if (mode == 3) out[0].values.assign(4, 0.0);
    return out;
  }
};

}  // namespace

TEST_CASE("embed_batch rejects malformed judge output", "[judges]") {
  BadEmbedder bad;
  std::vector<std::string> texts = {"a", "b"};
  bad.mode = 1;
  REQUIRE_THROWS_AS(embed_batch(texts, bad), DimensionMismatch);
  bad.mode = 2;
  REQUIRE_THROWS_AS(embed_batch(texts, bad), ProtocolError);
  bad.mode = 3;
  REQUIRE_THROWS_AS(embed_batch(texts, bad), ProtocolError);
  bad.mode = 0;
  auto v = embed_batch(texts, bad);
  REQUIRE(v[0].values[0] == Catch::Approx(0.5));
}

TEST_CASE("mock NLI rules", "[judges]") {
  MockNliJudge nli;
  REQUIRE(nli.judge_one("no", "no") == EntailmentLabel::kEntails);
  REQUIRE(nli.judge_one("yes", "no") == EntailmentLabel::kContradicts);
  REQUIRE(nli.judge_one("no", "yes") == EntailmentLabel::kContradicts);
  REQUIRE(nli.judge_one("no", "No findings") == EntailmentLabel::kNeutral);
  REQUIRE(nli.judge_one("left kidney", "right kidney") == EntailmentLabel::kContradicts);

  MockNliJudge grouped(MockNliConfig{{}, {{"no", "No findings"}}});
  REQUIRE(grouped.judge_one("no", "No findings") == EntailmentLabel::kEntails);
  REQUIRE(grouped.judge_one("No findings", "no") == EntailmentLabel::kEntails);
}

TEST_CASE("judge_pairs dedups and preserves order", "[judges]") {
  MockNliJudge nli;
  CountingJudge counting(nli);
  JudgeCounters counters;
  std::vector<TextPair> pairs;
  for (int i = 0; i < 1000; ++i) {
    const int k = i % 10;
    pairs.emplace_back("p" + std::to_string(k), k == 3 ? "p3" : "q" + std::to_string(k));
  }
  auto labels = judge_pairs(pairs, counting, {.batch_size = 512, .counters = &counters});
  REQUIRE(labels.size() == 1000);
  REQUIRE(counting.calls <= 10);
  REQUIRE(counting.items == 10);
  REQUIRE(counters.nli_requested == 1000);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    REQUIRE(labels[i] == (i % 10 == 3 ? EntailmentLabel::kEntails : EntailmentLabel::kNeutral));
  }
}

TEST_CASE("label_from_probs ties break entails > contradicts > neutral", "[judges]") {
  std::vector<double> a = {0.2, 0.5, 0.3};
  REQUIRE(label_from_probs(a) == EntailmentLabel::kContradicts);
  std::vector<double> tie = {0.4, 0.4, 0.2};
  REQUIRE(label_from_probs(tie) == EntailmentLabel::kEntails);
  std::vector<double> tie2 = {0.2, 0.4, 0.4};
  REQUIRE(label_from_probs(tie2) == EntailmentLabel::kContradicts);
  std::vector<double> bad = {1.0, 0.0};
  REQUIRE_THROWS_AS(label_from_probs(bad), ProtocolError);
}

TEST_CASE("pair cache keys are directed", "[judges]") {
  REQUIRE(pair_key("a", "b") != pair_key("b", "a"));
  REQUIRE(pair_key("ab", "c") != pair_key("a", "bc"));
  REQUIRE(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("caching is transparent and avoids repeat calls", "[judges]") {
  MockEmbedder emb(16);
  CountingEmbedder counting(emb);
  JudgeCache cache;
  CachingEmbedder cached(counting, cache);

  std::vector<std::string> texts = {"alpha", "beta", "alpha", "gamma"};
  auto direct = embed_batch(texts, emb);
  auto first = embed_batch(texts, cached);
  auto second = embed_batch(texts, cached);
  REQUIRE(direct == first);
  REQUIRE(first == second);
  REQUIRE(counting.items == 3);

  MockNliJudge nli;
  CountingJudge counting_nli(nli);
  CachingEntailmentJudge cached_nli(counting_nli, cache);
  std::vector<TextPair> pairs = {{"yes", "no"}, {"no", "yes"}, {"no", "no"}};
  REQUIRE(judge_pairs(pairs, cached_nli) == judge_pairs(pairs, nli));
  REQUIRE(judge_pairs(pairs, cached_nli) == judge_pairs(pairs, nli));
  REQUIRE(counting_nli.items == 3);

  SECTION("persists across instances") {
    const auto path = std::filesystem::temp_directory_path() / "hedge_cache_test.json";
    cache.save(path);
    JudgeCache reloaded;
    reloaded.load(path);
    REQUIRE(reloaded.embedding_count() == 3);
    REQUIRE(reloaded.label_count() == 3);
    CountingEmbedder fresh(emb);
    CachingEmbedder warm(fresh, reloaded);
    REQUIRE(embed_batch(texts, warm) == direct);
    REQUIRE(fresh.calls == 0);
    std::filesystem::remove(path);
  }
}

TEST_CASE("cache is safe under concurrent use", "[judges]") {
  MockEmbedder emb(16);
  JudgeCache cache;
  CachingEmbedder cached(emb, cache);
  std::vector<std::thread> threads;
  std::vector<std::vector<EmbeddingVector>> results(4);
  std::vector<std::string> texts;
  for (int i = 0; i < 200; ++i) texts.push_back("w" + std::to_string(i % 50));
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] { results[t] = embed_batch(texts, cached, {.batch_size = 7}); });
  }
  for (auto& th : threads) th.join();
  for (int t = 1; t < 4; ++t) REQUIRE(results[t] == results[0]);
  REQUIRE(cache.embedding_count() == 50);
}
