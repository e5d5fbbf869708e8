// SPDX-License-Identifier: Apache-2.0
#pragma once

// Domain types shared by every stage: answer samples, question cases, the
// assembled [A0, A1..An, N1..Nn] sequence and canonical cluster labelings.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hedge/errors.hpp"

namespace hedge {

enum class PromptConfig : std::uint8_t { kDefault, kMinimalLabel, kOneSentence, kClinicalPhrase };

inline constexpr std::string_view to_string(PromptConfig p) noexcept {
  switch (p) {
    case PromptConfig::kDefault: return "default";
    case PromptConfig::kMinimalLabel: return "minimal-label";
    case PromptConfig::kOneSentence: return "one-sentence";
    case PromptConfig::kClinicalPhrase: return "clinical-phrase";
  }
  return "default";
}

inline std::optional<PromptConfig> parse_prompt_config(std::string_view s) noexcept {
  for (auto p : {PromptConfig::kDefault, PromptConfig::kMinimalLabel, PromptConfig::kOneSentence,
                 PromptConfig::kClinicalPhrase}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

// Whether the question is prefixed to every answer before clustering.
enum class InputMode : std::uint8_t { kAnswerOnly, kAnswerPlusQuestion };

inline constexpr std::string_view to_string(InputMode m) noexcept {
  return m == InputMode::kAnswerOnly ? "answer_only" : "answer_plus_question";
}

inline std::optional<InputMode> parse_input_mode(std::string_view s) noexcept {
  if (s == "answer_only") return InputMode::kAnswerOnly;
  if (s == "answer_plus_question") return InputMode::kAnswerPlusQuestion;
  return std::nullopt;
}

struct AnswerSample {
  std::string text;
  double mean_logprob = 0.0;  // mean token log-probability, nats

  bool operator==(const AnswerSample&) const = default;
};

// 0 = supported, 1 = hallucinated. Judged on the baseline answer.
enum class Label : std::uint8_t { kSupported = 0, kHallucinated = 1 };

struct QuestionCase {
  std::string id;
  std::string question;
  std::string image_ref;
  PromptConfig prompt_config = PromptConfig::kDefault;
  AnswerSample baseline;
  std::vector<AnswerSample> clean;
  std::vector<AnswerSample> noisy;
  Label label = Label::kSupported;

  std::size_t pool_size() const noexcept { return clean.size(); }
  bool operator==(const QuestionCase&) const = default;
};

namespace detail {

inline bool is_blank(std::string_view s) noexcept {
  for (unsigned char c : s) {
    if (!(c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v')) return false;
  }
  return true;
}

}  // namespace detail

inline void validate_sample(const AnswerSample& a, std::string_view where) {
  if (detail::is_blank(a.text)) {
    throw InvalidCase(std::string(where) + ": empty answer text");
  }
  if (!std::isfinite(a.mean_logprob)) {
    throw InvalidCase(std::string(where) + ": mean_logprob is not finite");
  }
  if (a.mean_logprob > 0.0) {
    throw InvalidCase(std::string(where) + ": mean_logprob must be <= 0");
  }
}

// Throws InvalidCase naming the case id on the first violated invariant.
inline void validate_case(const QuestionCase& c) {
  const std::string who = "case '" + c.id + "'";
  if (c.clean.empty() || c.noisy.empty()) {
    throw InvalidCase(who + ": clean and noisy pools must be non-empty");
  }
  if (c.clean.size() != c.noisy.size()) {
    throw InvalidCase(who + ": unbalanced pools (clean=" + std::to_string(c.clean.size()) +
                      ", noisy=" + std::to_string(c.noisy.size()) + ")");
  }
  validate_sample(c.baseline, who + " baseline");
  for (std::size_t i = 0; i < c.clean.size(); ++i) {
    validate_sample(c.clean[i], who + " clean[" + std::to_string(i) + "]");
  }
  for (std::size_t i = 0; i < c.noisy.size(); ++i) {
    validate_sample(c.noisy[i], who + " noisy[" + std::to_string(i) + "]");
  }
}

// Keeps the first n clean and first n noisy samples.
inline QuestionCase truncate_case(const QuestionCase& c, std::size_t n) {
  if (n == 0 || c.clean.size() < n || c.noisy.size() < n) {
    throw InsufficientSamples("case '" + c.id + "': cannot truncate pools of size " +
                              std::to_string(c.clean.size()) + " to n=" + std::to_string(n));
  }
  QuestionCase out = c;
  out.clean.resize(n);
  out.noisy.resize(n);
  return out;
}

// Half-open index range into the assembled sequence.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
  bool operator==(const Span&) const = default;
};

struct AssembledSequence {
  std::vector<std::string> texts;
  std::vector<double> logprobs;
  Span baseline;
  Span clean;
  Span noisy;

  std::size_t size() const noexcept { return texts.size(); }
  std::size_t pool_size() const noexcept { return clean.size(); }
};

// seq = [A0] + [A1..An] + [N1..Nn]. In answer_plus_question mode each text
// becomes "{question} {answer}"; log-probs are never touched.
inline AssembledSequence assemble_sequence(const QuestionCase& c, InputMode mode) {
  validate_case(c);
  const std::size_t n = c.clean.size();
  AssembledSequence seq;
  seq.texts.reserve(2 * n + 1);
  seq.logprobs.reserve(2 * n + 1);

  auto push = [&](const AnswerSample& a) {
    if (mode == InputMode::kAnswerPlusQuestion) {
      seq.texts.push_back(c.question + " " + a.text);
    } else {
      seq.texts.push_back(a.text);
    }
    seq.logprobs.push_back(a.mean_logprob);
  };

  push(c.baseline);
  for (const auto& a : c.clean) push(a);
  for (const auto& a : c.noisy) push(a);

  seq.baseline = {0, 1};
  seq.clean = {1, n + 1};
  seq.noisy = {n + 1, 2 * n + 1};
  return seq;
}

// Inverse of assemble_sequence in answer_only mode.
struct Pools {
  AnswerSample baseline;
  std::vector<AnswerSample> clean;
  std::vector<AnswerSample> noisy;
};

inline Pools disassemble(const AssembledSequence& seq) {
  Pools p;
  auto at = [&](std::size_t i) { return AnswerSample{seq.texts[i], seq.logprobs[i]}; };
  p.baseline = at(seq.baseline.begin);
  for (std::size_t i = seq.clean.begin; i < seq.clean.end; ++i) p.clean.push_back(at(i));
  for (std::size_t i = seq.noisy.begin; i < seq.noisy.end; ++i) p.noisy.push_back(at(i));
  return p;
}

struct ClusterLabeling {
  std::vector<std::size_t> ids;
  std::size_t num_clusters = 0;

  std::size_t size() const noexcept { return ids.size(); }
  bool operator==(const ClusterLabeling&) const = default;
};

// Relabels so ids appear in order of first occurrence: the cluster holding
// index 0 is 0, the next new cluster is 1, and so on.
template <typename Int>
ClusterLabeling canonicalize_labels(std::span<const Int> ids) {
  ClusterLabeling out;
  out.ids.reserve(ids.size());
  std::unordered_map<Int, std::size_t> remap;
  for (Int id : ids) {
    auto [it, inserted] = remap.try_emplace(id, remap.size());
    out.ids.push_back(it->second);
  }
  out.num_clusters = remap.size();
  return out;
}

template <typename Int>
ClusterLabeling canonicalize_labels(const std::vector<Int>& ids) {
  return canonicalize_labels(std::span<const Int>(ids));
}

}  // namespace hedge
