// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSONL dataset format, one QuestionCase per line:
//
//   {"id": "...", "question": "...", "image_ref": "img/0001.png",
//    "prompt_config": "default|minimal-label|one-sentence|clinical-phrase",
//    "baseline": {"text": "...", "mean_logprob": -0.1},
//    "clean": [{"text": ..., "mean_logprob": ...}, ...],
//    "noisy": [...], "label": 0|1}

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "hedge/core.hpp"
#include "hedge/errors.hpp"
#include "hedge/evaluation.hpp"
#include "json.hpp"

namespace hedge {

namespace detail {

inline AnswerSample sample_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw InvalidCase(where + ": answer needs a string 'text'");
  }
  if (!j.contains("mean_logprob") || !j["mean_logprob"].is_number()) {
    throw InvalidCase(where + ": answer needs a numeric 'mean_logprob'");
  }
  return {j["text"].get<std::string>(), j["mean_logprob"].get<double>()};
}

inline std::vector<AnswerSample> pool_from_json(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_array()) throw InvalidCase(where + ": missing '" + key + "' array");
  std::vector<AnswerSample> out;
  for (std::size_t i = 0; i < j[key].size(); ++i) {
    out.push_back(sample_from_json(j[key][i], where + " " + key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

}  // namespace detail

// Parses and validates one case.
inline QuestionCase case_from_json(const nlohmann::json& j, const std::string& where = "case") {
  if (!j.is_object()) throw InvalidCase(where + ": not a JSON object");
  QuestionCase c;
  if (!j.contains("id") || !j["id"].is_string()) throw InvalidCase(where + ": missing string 'id'");
  c.id = j["id"].get<std::string>();
  const std::string who = where + " (case '" + c.id + "')";
  c.question = j.value("question", std::string());
  c.image_ref = j.value("image_ref", std::string());
  const auto pc = j.value("prompt_config", std::string("default"));
  auto parsed = parse_prompt_config(pc);
  if (!parsed) throw InvalidCase(who + ": unknown prompt_config '" + pc + "'");
  c.prompt_config = *parsed;
  if (!j.contains("baseline")) throw InvalidCase(who + ": missing 'baseline'");
  c.baseline = detail::sample_from_json(j["baseline"], who + " baseline");
  c.clean = detail::pool_from_json(j, "clean", who);
  c.noisy = detail::pool_from_json(j, "noisy", who);
  if (!j.contains("label") || !j["label"].is_number_integer()) throw InvalidCase(who + ": missing integer 'label'");
  const int label = j["label"].get<int>();
  if (label != 0 && label != 1) throw InvalidCase(who + ": label must be 0 or 1");
  c.label = static_cast<Label>(label);
  validate_case(c);
  return c;
}

inline nlohmann::json to_json(const QuestionCase& c) {
  auto sample = [](const AnswerSample& a) { return nlohmann::json{{"text", a.text}, {"mean_logprob", a.mean_logprob}}; };
  nlohmann::json clean = nlohmann::json::array();
  for (const auto& a : c.clean) clean.push_back(sample(a));
  nlohmann::json noisy = nlohmann::json::array();
  for (const auto& a : c.noisy) noisy.push_back(sample(a));
  return {{"id", c.id},
          {"question", c.question},
          {"image_ref", c.image_ref},
          {"prompt_config", std::string(to_string(c.prompt_config))},
          {"baseline", sample(c.baseline)},
          {"clean", std::move(clean)},
          {"noisy", std::move(noisy)},
          {"label", static_cast<int>(c.label)}};
}

struct ValidationReport {
  std::size_t n_cases = 0;
  std::vector<std::string> warnings;
};

// Throws InvalidCase on the first hard violation. Duplicate ids are warnings.
inline Dataset read_dataset(const std::filesystem::path& path, ValidationReport* report = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset: " + path.string());
  Dataset ds;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidCase(where + ": malformed JSON: " + e.what());
    }
    auto c = case_from_json(j, where);
    if (!ids.insert(c.id).second && report) report->warnings.push_back(where + ": duplicate case id '" + c.id + "'");
    ds.push_back(std::move(c));
  }
  if (report) report->n_cases = ds.size();
  return ds;
}

inline void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset: " + path.string());
  for (const auto& c : ds) out << to_json(c).dump() << '\n';
}

}  // namespace hedge
