// SPDX-License-Identifier: Apache-2.0
#pragma once

// Judge interfaces (sentence embedder, pairwise entailment), the batching and
// deduplication front-end every caller goes through, content-hash caches, and
// deterministic mock judges for model-free runs.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hedge/errors.hpp"
#include "hedge/hash.hpp"
#include "hedge/rng.hpp"
#include "json.hpp"

namespace hedge {

inline constexpr std::size_t kDefaultBatchSize = 512;

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
  double norm() const noexcept {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
  }
  bool operator==(const EmbeddingVector&) const = default;
};

// Scales to unit length; throws ProtocolError on a zero or non-finite vector.
inline EmbeddingVector normalized(EmbeddingVector v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw ProtocolError("embedding vector has zero or non-finite norm");
  for (double& x : v.values) x /= n;
  return v;
}

inline double dot(const EmbeddingVector& a, const EmbeddingVector& b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s;
}

enum class EntailmentLabel : std::uint8_t { kEntails, kContradicts, kNeutral };

inline constexpr std::string_view to_string(EntailmentLabel l) noexcept {
  switch (l) {
    case EntailmentLabel::kEntails: return "entails";
    case EntailmentLabel::kContradicts: return "contradicts";
    case EntailmentLabel::kNeutral: return "neutral";
  }
  return "neutral";
}

inline std::optional<EntailmentLabel> parse_entailment_label(std::string_view s) noexcept {
  if (s == "entails") return EntailmentLabel::kEntails;
  if (s == "contradicts") return EntailmentLabel::kContradicts;
  if (s == "neutral") return EntailmentLabel::kNeutral;
  return std::nullopt;
}

// Argmax over [entails, contradicts, neutral]; ties go to the earlier class.
inline EntailmentLabel label_from_probs(std::span<const double> probs) {
  if (probs.size() != 3) throw ProtocolError("NLI probability row must have 3 entries");
  std::size_t best = 0;
  for (std::size_t k = 1; k < 3; ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return static_cast<EntailmentLabel>(best);
}

// Directed: (premise, hypothesis).
using TextPair = std::pair<std::string, std::string>;

class Embedder {
 public:
  virtual ~Embedder() = default;
  // One vector per input text, same order.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
};

class EntailmentJudge {
 public:
  virtual ~EntailmentJudge() = default;
  // One label per pair, same order.
  virtual std::vector<EntailmentLabel> judge(std::span<const TextPair> pairs) = 0;
};

// Call accounting. "requested" counts items before deduplication, "sent"
// counts items that reached the judge, "calls" counts judge invocations.
struct JudgeCounters {
  std::atomic<std::uint64_t> embed_requested{0};
  std::atomic<std::uint64_t> embed_sent{0};
  std::atomic<std::uint64_t> embed_calls{0};
  std::atomic<std::uint64_t> nli_requested{0};
  std::atomic<std::uint64_t> nli_sent{0};
  std::atomic<std::uint64_t> nli_calls{0};

  void reset() noexcept {
    for (auto* c : {&embed_requested, &embed_sent, &embed_calls, &nli_requested, &nli_sent, &nli_calls}) {
      c->store(0);
    }
  }

  nlohmann::json to_json() const {
    return {{"embed_requested", embed_requested.load()}, {"embed_sent", embed_sent.load()},
            {"embed_calls", embed_calls.load()},         {"nli_requested", nli_requested.load()},
            {"nli_sent", nli_sent.load()},               {"nli_calls", nli_calls.load()}};
  }
};

template <typename T>
struct Deduplicated {
  std::vector<T> unique;
  std::vector<std::size_t> back_map;  // original[i] == unique[back_map[i]]
};

// First-occurrence order is preserved.
template <typename T, typename Hash = std::hash<T>>
Deduplicated<T> dedup(std::span<const T> items) {
  Deduplicated<T> out;
  out.back_map.reserve(items.size());
  std::unordered_map<T, std::size_t, Hash> seen;
  for (const auto& item : items) {
    auto [it, inserted] = seen.try_emplace(item, out.unique.size());
    if (inserted) out.unique.push_back(item);
    out.back_map.push_back(it->second);
  }
  return out;
}

inline Deduplicated<std::string> dedup_texts(std::span<const std::string> texts) {
  return dedup<std::string>(texts);
}

struct TextPairHash {
  std::size_t operator()(const TextPair& p) const noexcept {
    return static_cast<std::size_t>(rng::mix(rng::fnv1a(p.first), rng::fnv1a(p.second)));
  }
};

struct BatchOptions {
  std::size_t batch_size = kDefaultBatchSize;
  JudgeCounters* counters = nullptr;
};

// Deduplicates, splits into batches of at most batch_size, checks the
// response shape and returns unit vectors in input order.
inline std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts, Embedder& embedder,
                                                const BatchOptions& opts = {}) {
  if (texts.empty()) throw Error("embed_batch: empty input");
  const std::size_t b = std::max<std::size_t>(opts.batch_size, 1);
  auto d = dedup_texts(texts);
  if (opts.counters) opts.counters->embed_requested += texts.size();

  std::vector<EmbeddingVector> unique_vecs;
  unique_vecs.reserve(d.unique.size());
  std::optional<std::size_t> dim;
  for (std::size_t start = 0; start < d.unique.size(); start += b) {
    const std::size_t len = std::min(b, d.unique.size() - start);
    std::span<const std::string> chunk(d.unique.data() + start, len);
    auto vecs = embedder.embed(chunk);
    if (opts.counters) {
      opts.counters->embed_calls += 1;
      opts.counters->embed_sent += len;
    }
    if (vecs.size() != len) {
      throw ProtocolError("embedder returned " + std::to_string(vecs.size()) + " vectors for " +
                          std::to_string(len) + " texts");
    }
    for (auto& v : vecs) {
      if (!dim) dim = v.dim();
      if (v.dim() != *dim || *dim == 0) {
        throw DimensionMismatch("embedding dimension " + std::to_string(v.dim()) + " != " + std::to_string(*dim));
      }
      unique_vecs.push_back(normalized(std::move(v)));
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t idx : d.back_map) out.push_back(unique_vecs[idx]);
  return out;
}

inline std::vector<EntailmentLabel> judge_pairs(std::span<const TextPair> pairs, EntailmentJudge& judge,
                                                const BatchOptions& opts = {}) {
  if (pairs.empty()) throw Error("judge_pairs: empty input");
  const std::size_t b = std::max<std::size_t>(opts.batch_size, 1);
  auto d = dedup<TextPair, TextPairHash>(pairs);
  if (opts.counters) opts.counters->nli_requested += pairs.size();

  std::vector<EntailmentLabel> unique_labels;
  unique_labels.reserve(d.unique.size());
  for (std::size_t start = 0; start < d.unique.size(); start += b) {
    const std::size_t len = std::min(b, d.unique.size() - start);
    std::span<const TextPair> chunk(d.unique.data() + start, len);
    auto labels = judge.judge(chunk);
    if (opts.counters) {
      opts.counters->nli_calls += 1;
      opts.counters->nli_sent += len;
    }
    if (labels.size() != len) {
      throw ProtocolError("NLI judge returned " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(len) + " pairs");
    }
    unique_labels.insert(unique_labels.end(), labels.begin(), labels.end());
  }

  std::vector<EntailmentLabel> out;
  out.reserve(pairs.size());
  for (std::size_t idx : d.back_map) out.push_back(unique_labels[idx]);
  return out;
}

// Shared, synchronized store of judge results keyed by SHA-256 of content.
// Can be persisted beside run outputs and reloaded.
class JudgeCache {
 public:
  std::optional<EmbeddingVector> find_embedding(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = embeddings_.find(key);
    if (it == embeddings_.end()) return std::nullopt;
    return it->second;
  }
  void put_embedding(const std::string& key, EmbeddingVector v) {
    std::lock_guard lock(mu_);
    embeddings_.insert_or_assign(key, std::move(v));
  }
  std::optional<EntailmentLabel> find_label(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = labels_.find(key);
    if (it == labels_.end()) return std::nullopt;
    return it->second;
  }
  void put_label(const std::string& key, EntailmentLabel l) {
    std::lock_guard lock(mu_);
    labels_.insert_or_assign(key, l);
  }

  std::size_t embedding_count() const {
    std::lock_guard lock(mu_);
    return embeddings_.size();
  }
  std::size_t label_count() const {
    std::lock_guard lock(mu_);
    return labels_.size();
  }

  void save(const std::filesystem::path& path) const {
    nlohmann::json j;
    {
      std::lock_guard lock(mu_);
      j["embeddings"] = nlohmann::json::object();
      for (const auto& [k, v] : embeddings_) j["embeddings"][k] = v.values;
      j["nli"] = nlohmann::json::object();
      for (const auto& [k, l] : labels_) j["nli"][k] = std::string(to_string(l));
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write cache: " + path.string());
    out << j.dump() << '\n';
  }

  // Missing file is not an error; the cache simply starts empty.
  void load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return;
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error("corrupt cache file " + path.string() + ": " + e.what());
    }
    const auto embeddings = j.value("embeddings", nlohmann::json::object());
    const auto nli = j.value("nli", nlohmann::json::object());
    std::lock_guard lock(mu_);
    for (const auto& [k, v] : embeddings.items()) {
      embeddings_.insert_or_assign(k, EmbeddingVector{v.get<std::vector<double>>()});
    }
    for (const auto& [k, v] : nli.items()) {
      auto l = parse_entailment_label(v.get<std::string>());
      if (!l) throw Error("corrupt cache file " + path.string() + ": bad label");
      labels_.insert_or_assign(k, *l);
    }
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, EmbeddingVector> embeddings_;
  std::map<std::string, EntailmentLabel> labels_;
};

class CachingEmbedder final : public Embedder {
 public:
  CachingEmbedder(Embedder& inner, JudgeCache& cache) : inner_(inner), cache_(cache) {}

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::string> keys(texts.size());
    std::vector<std::string> misses;
    std::vector<std::size_t> miss_pos;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      keys[i] = sha256_hex(texts[i]);
      if (auto hit = cache_.find_embedding(keys[i])) {
        out[i] = std::move(*hit);
      } else {
        misses.push_back(texts[i]);
        miss_pos.push_back(i);
      }
    }
    if (!misses.empty()) {
      auto fresh = inner_.embed(misses);
      if (fresh.size() != misses.size()) throw ProtocolError("embedder returned wrong number of vectors");
      for (std::size_t m = 0; m < misses.size(); ++m) {
        cache_.put_embedding(keys[miss_pos[m]], fresh[m]);
        out[miss_pos[m]] = std::move(fresh[m]);
      }
    }
    return out;
  }

 private:
  Embedder& inner_;
  JudgeCache& cache_;
};

class CachingEntailmentJudge final : public EntailmentJudge {
 public:
  CachingEntailmentJudge(EntailmentJudge& inner, JudgeCache& cache) : inner_(inner), cache_(cache) {}

  std::vector<EntailmentLabel> judge(std::span<const TextPair> pairs) override {
    std::vector<EntailmentLabel> out(pairs.size(), EntailmentLabel::kNeutral);
    std::vector<std::string> keys(pairs.size());
    std::vector<TextPair> misses;
    std::vector<std::size_t> miss_pos;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      keys[i] = pair_key(pairs[i].first, pairs[i].second);
      if (auto hit = cache_.find_label(keys[i])) {
        out[i] = *hit;
      } else {
        misses.push_back(pairs[i]);
        miss_pos.push_back(i);
      }
    }
    if (!misses.empty()) {
      auto fresh = inner_.judge(misses);
      if (fresh.size() != misses.size()) throw ProtocolError("NLI judge returned wrong number of labels");
      for (std::size_t m = 0; m < misses.size(); ++m) {
        cache_.put_label(keys[miss_pos[m]], fresh[m]);
        out[miss_pos[m]] = fresh[m];
      }
    }
    return out;
  }

 private:
  EntailmentJudge& inner_;
  JudgeCache& cache_;
};

namespace detail {

// Lower-cased alphanumeric runs (bytes >= 0x80 are kept as word characters).
inline std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

}  // namespace detail

// Bag-of-words hash projection: each word token maps to a fixed Gaussian
// direction derived from (seed, token); a text embeds to the normalized sum.
// Equal strings give identical vectors; shared words give positive cosine.
class MockEmbedder final : public Embedder {
 public:
  explicit MockEmbedder(std::size_t dim = 128, std::uint64_t seed = 0x5eed) : dim_(dim), seed_(seed) {}

  EmbeddingVector embed_one(std::string_view text) const {
    auto tokens = detail::word_tokens(text);
    if (tokens.empty()) tokens.emplace_back(text);
    EmbeddingVector v{std::vector<double>(dim_, 0.0)};
    for (const auto& tok : tokens) {
      const rng::CounterRng g(seed_, rng::fnv1a(tok));
      for (std::size_t k = 0; k < dim_; ++k) {
        // Box-Muller on two counter draws.
        const double u1 = 1.0 - g.unit(2 * k);
        const double u2 = g.unit(2 * k + 1);
        v.values[k] += std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
      }
    }
    return normalized(std::move(v));
  }

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
  }

  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

struct MockNliConfig {
  // Unordered word pairs; premise containing one and hypothesis the other
  // (and neither shared) is a contradiction.
  std::vector<std::pair<std::string, std::string>> contradiction_lexicon = {
      {"yes", "no"},       {"present", "absent"},      {"normal", "abnormal"}, {"left", "right"},
      {"positive", "negative"}, {"increased", "decreased"}, {"benign", "malignant"}};
  // Texts listed in the same group mutually entail.
  std::vector<std::vector<std::string>> entail_groups;
};

// Rule-based NLI: exact match (or shared entail group) => entails,
// lexicon hit => contradicts, otherwise neutral.
class MockNliJudge final : public EntailmentJudge {
 public:
  explicit MockNliJudge(MockNliConfig cfg = {}) : cfg_(std::move(cfg)) {
    for (std::size_t g = 0; g < cfg_.entail_groups.size(); ++g) {
      for (const auto& t : cfg_.entail_groups[g]) group_of_.emplace(t, g);
    }
  }

  EntailmentLabel judge_one(const std::string& premise, const std::string& hypothesis) const {
    if (premise == hypothesis) return EntailmentLabel::kEntails;
    auto gp = group_of_.find(premise);
    auto gh = group_of_.find(hypothesis);
    if (gp != group_of_.end() && gh != group_of_.end() && gp->second == gh->second) {
      return EntailmentLabel::kEntails;
    }
    const auto pt = detail::word_tokens(premise);
    const auto ht = detail::word_tokens(hypothesis);
    const std::set<std::string> ps(pt.begin(), pt.end());
    const std::set<std::string> hs(ht.begin(), ht.end());
    auto only_in = [](const std::set<std::string>& a, const std::set<std::string>& b, const std::string& w) {
      return a.contains(w) && !b.contains(w);
    };
    for (const auto& [a, b] : cfg_.contradiction_lexicon) {
      if ((only_in(ps, hs, a) && only_in(hs, ps, b)) || (only_in(ps, hs, b) && only_in(hs, ps, a))) {
        return EntailmentLabel::kContradicts;
      }
    }
    return EntailmentLabel::kNeutral;
  }

  std::vector<EntailmentLabel> judge(std::span<const TextPair> pairs) override {
    std::vector<EntailmentLabel> out;
    out.reserve(pairs.size());
    for (const auto& [p, h] : pairs) out.push_back(judge_one(p, h));
    return out;
  }

 private:
  MockNliConfig cfg_;
  std::unordered_map<std::string, std::size_t> group_of_;
};

}  // namespace hedge
