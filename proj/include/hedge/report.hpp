// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run results, the per-configuration AUC report and their file formats
// (JSON, CSV, per-case JSONL, sweep CSV).

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hedge/core.hpp"
#include "hedge/evaluation.hpp"
#include "hedge/metrics.hpp"
#include "json.hpp"

namespace hedge {

// Shortest decimal that round-trips.
inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

struct RunMeta {
  std::string dataset;
  std::string model;
  std::string mode;
  std::string clustering;
  std::optional<double> tau;
  std::optional<std::size_t> k;
  double alpha = 1.0;
  std::string eq1_mode;
  std::optional<std::size_t> n;

  bool operator==(const RunMeta&) const = default;
};

struct ScoredCase {
  std::string case_id;
  std::string prompt_config;
  Label label = Label::kSupported;
  MetricScores scores;
  std::vector<std::size_t> cluster_ids;
};

struct RunResult {
  RunMeta meta;
  std::vector<ScoredCase> cases;
  std::optional<double> tau_star;
  double runtime_s = 0.0;
  std::uint64_t embed_calls = 0;
  std::uint64_t nli_calls = 0;
};

struct ReportRow {
  std::string dataset;
  std::string model;
  std::string prompt_config;
  std::string mode;
  std::string clustering;
  std::string metric;
  std::optional<double> auc;  // nullopt: undefined (single-class labels)
  std::size_t n_cases = 0;
  std::optional<double> tau;
  std::optional<double> tau_star;
  double runtime_s = 0.0;
  std::uint64_t embed_calls = 0;
  std::uint64_t nli_calls = 0;

  bool operator==(const ReportRow&) const = default;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  bool operator==(const EvalReport&) const = default;
};

namespace detail {

template <typename T>
nlohmann::json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

}  // namespace detail

inline nlohmann::json to_json(const RunMeta& m) {
  return {{"dataset", m.dataset}, {"model", m.model},         {"mode", m.mode},
          {"clustering", m.clustering}, {"tau", detail::opt_json(m.tau)}, {"k", detail::opt_json(m.k)},
          {"alpha", m.alpha},       {"eq1_mode", m.eq1_mode}, {"n", detail::opt_json(m.n)}};
}

inline RunMeta run_meta_from_json(const nlohmann::json& j) {
  RunMeta m;
  m.dataset = j.at("dataset").get<std::string>();
  m.model = j.at("model").get<std::string>();
  m.mode = j.at("mode").get<std::string>();
  m.clustering = j.at("clustering").get<std::string>();
  m.tau = detail::opt_from<double>(j, "tau");
  m.k = detail::opt_from<std::size_t>(j, "k");
  m.alpha = j.at("alpha").get<double>();
  m.eq1_mode = j.at("eq1_mode").get<std::string>();
  m.n = detail::opt_from<std::size_t>(j, "n");
  return m;
}

// One JSONL line per case.
inline nlohmann::json to_json(const ScoredCase& c) {
  nlohmann::json j;
  j["case_id"] = c.case_id;
  j["se"] = c.scores.se;
  j["radflag"] = c.scores.radflag;
  j["vase"] = c.scores.vase;
  j["cluster_ids"] = c.cluster_ids;
  j["label"] = static_cast<int>(c.label);
  j["prompt_config"] = c.prompt_config;
  return j;
}

inline ScoredCase scored_case_from_json(const nlohmann::json& j) {
  ScoredCase c;
  c.case_id = j.at("case_id").get<std::string>();
  c.scores.se = j.at("se").get<double>();
  c.scores.radflag = j.at("radflag").get<double>();
  c.scores.vase = j.at("vase").get<double>();
  c.cluster_ids = j.at("cluster_ids").get<std::vector<std::size_t>>();
  c.label = j.at("label").get<int>() == 1 ? Label::kHallucinated : Label::kSupported;
  c.prompt_config = j.value("prompt_config", std::string("default"));
  return c;
}

// One row per (run, prompt config, metric).
inline EvalReport summarize(std::span<const RunResult> runs) {
  EvalReport report;
  for (const auto& run : runs) {
    std::vector<std::string> groups;
    for (const auto& c : run.cases) {
      if (std::find(groups.begin(), groups.end(), c.prompt_config) == groups.end()) groups.push_back(c.prompt_config);
    }
    for (const auto& g : groups) {
      for (auto metric : kAllMetrics) {
        std::vector<LabeledScore> items;
        for (const auto& c : run.cases) {
          if (c.prompt_config == g) items.push_back({c.case_id, metric_value(c.scores, metric), c.label});
        }
        ReportRow row;
        row.dataset = run.meta.dataset;
        row.model = run.meta.model;
        row.prompt_config = g;
        row.mode = run.meta.mode;
        row.clustering = run.meta.clustering;
        row.metric = std::string(to_string(metric));
        row.auc = roc_auc(items);
        row.n_cases = items.size();
        row.tau = run.meta.tau;
        row.tau_star = run.tau_star;
        row.runtime_s = run.runtime_s;
        row.embed_calls = run.embed_calls;
        row.nli_calls = run.nli_calls;
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"dataset", row.dataset},
                    {"model", row.model},
                    {"prompt_config", row.prompt_config},
                    {"mode", row.mode},
                    {"clustering", row.clustering},
                    {"metric", row.metric},
                    {"auc", detail::opt_json(row.auc)},
                    {"status", row.auc ? "ok" : "undefined"},
                    {"n_cases", row.n_cases},
                    {"tau", detail::opt_json(row.tau)},
                    {"tau_star", detail::opt_json(row.tau_star)},
                    {"runtime_s", row.runtime_s},
                    {"embed_calls", row.embed_calls},
                    {"nli_calls", row.nli_calls}});
  }
  return {{"rows", std::move(rows)}};
}

inline EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  for (const auto& row : j.at("rows")) {
    ReportRow x;
    x.dataset = row.at("dataset").get<std::string>();
    x.model = row.at("model").get<std::string>();
    x.prompt_config = row.at("prompt_config").get<std::string>();
    x.mode = row.at("mode").get<std::string>();
    x.clustering = row.at("clustering").get<std::string>();
    x.metric = row.at("metric").get<std::string>();
    x.auc = detail::opt_from<double>(row, "auc");
    x.n_cases = row.at("n_cases").get<std::size_t>();
    x.tau = detail::opt_from<double>(row, "tau");
    x.tau_star = detail::opt_from<double>(row, "tau_star");
    x.runtime_s = row.at("runtime_s").get<double>();
    x.embed_calls = row.at("embed_calls").get<std::uint64_t>();
    x.nli_calls = row.at("nli_calls").get<std::uint64_t>();
    r.rows.push_back(std::move(x));
  }
  return r;
}

inline std::string to_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "dataset,model,prompt_config,mode,clustering,metric,auc,n_cases,tau,tau_star,runtime_s,embed_calls,nli_calls\n";
  for (const auto& row : r.rows) {
    out << row.dataset << ',' << row.model << ',' << row.prompt_config << ',' << row.mode << ',' << row.clustering
        << ',' << row.metric << ',' << format_optional(row.auc) << ',' << row.n_cases << ','
        << format_optional(row.tau) << ',' << format_optional(row.tau_star) << ',' << format_number(row.runtime_s)
        << ',' << row.embed_calls << ',' << row.nli_calls << '\n';
  }
  return out.str();
}

// Long format: AUC against sampling scale per prompt config, clustering and
// metric.
inline std::string sweep_to_csv(const SweepResult& s) {
  std::ostringstream out;
  out << "prompt_config,clustering,metric,n,auc\n";
  for (const auto& row : s.rows) {
    for (std::size_t k = 0; k < s.axis.size(); ++k) {
      out << row.group << ',' << to_string(row.clustering) << ',' << to_string(row.metric) << ',' << s.axis[k] << ','
          << format_optional(row.aucs[k]) << '\n';
    }
  }
  return out.str();
}

inline nlohmann::json to_json(const SweepResult& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : s.rows) {
    nlohmann::json aucs = nlohmann::json::array();
    for (const auto& a : row.aucs) aucs.push_back(detail::opt_json(a));
    rows.push_back({{"prompt_config", row.group},
                    {"clustering", std::string(to_string(row.clustering))},
                    {"metric", std::string(to_string(row.metric))},
                    {"aucs", std::move(aucs)}});
  }
  return {{"axis", s.axis}, {"rows", std::move(rows)}};
}

}  // namespace hedge
