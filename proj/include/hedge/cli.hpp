// SPDX-License-Identifier: Apache-2.0
#pragma once

// Command implementations behind the `hedge` executable. Each command takes a
// fully parsed config, writes its artifacts under a run directory named by a
// hash of (config, inputs) and returns a process exit code. Errors are
// reported as exceptions derived from hedge::Error.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hedge/bridge_client.hpp"
#include "hedge/core.hpp"
#include "hedge/dataset.hpp"
#include "hedge/distortion.hpp"
#include "hedge/errors.hpp"
#include "hedge/evaluation.hpp"
#include "hedge/hash.hpp"
#include "hedge/image_io.hpp"
#include "hedge/judges.hpp"
#include "hedge/metrics.hpp"
#include "hedge/report.hpp"
#include "json.hpp"

namespace hedge::cli {

namespace fs = std::filesystem;

enum class JudgeKind { kLive, kMock };

struct RunConfig {
  fs::path dataset_path;
  InputMode mode = InputMode::kAnswerOnly;
  ClusteringStrategy clustering = ClusteringStrategy::kEmbedding;
  std::optional<double> tau = 0.9;  // nullopt: tune on tune_split
  std::optional<std::size_t> k;
  double alpha = 1.0;
  std::optional<std::size_t> n;  // nullopt: use the full pools
  Eq1Mode eq1_mode = Eq1Mode::kVerbatim;
  std::uint64_t seed = 0;
  std::string bridge_url;
  JudgeKind judges = JudgeKind::kLive;
  std::size_t batch_size = kDefaultBatchSize;
  std::size_t workers = 1;
  fs::path out_root = "runs";
  std::string dataset_name;  // defaults to the dataset file stem
  std::string model_name = "unknown";

  // tune / score --tau tune
  std::optional<fs::path> tune_split;
  std::optional<fs::path> eval_split;
  Metric tune_metric = Metric::kVase;
  double tau_lo = 0.8;
  double tau_hi = 0.99;
  std::size_t trials = 20;

  // sweep
  std::vector<std::size_t> n_values = default_sweep_axis();
  std::vector<ClusteringStrategy> sweep_strategies = {ClusteringStrategy::kEmbedding, ClusteringStrategy::kNli};
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << content;
}

// Canonical config JSON; excludes knobs that do not change results
// (workers, output root, bridge location).
inline nlohmann::json config_json(const RunConfig& c) {
  nlohmann::json n_values = c.n_values;
  nlohmann::json strategies = nlohmann::json::array();
  for (auto s : c.sweep_strategies) strategies.push_back(std::string(to_string(s)));
  return {{"mode", std::string(to_string(c.mode))},
          {"clustering", std::string(to_string(c.clustering))},
          {"tau", c.tau ? nlohmann::json(*c.tau) : nlohmann::json("tune")},
          {"k", c.k ? nlohmann::json(*c.k) : nlohmann::json(nullptr)},
          {"alpha", c.alpha},
          {"n", c.n ? nlohmann::json(*c.n) : nlohmann::json("all")},
          {"eq1_mode", std::string(to_string(c.eq1_mode))},
          {"seed", c.seed},
          {"judges", c.judges == JudgeKind::kMock ? "mock" : "live"},
          {"batch_size", c.batch_size},
          {"dataset_name", c.dataset_name},
          {"model_name", c.model_name},
          {"tune_metric", std::string(to_string(c.tune_metric))},
          {"tau_bounds", {c.tau_lo, c.tau_hi}},
          {"trials", c.trials},
          {"n_values", n_values},
          {"sweep_strategies", strategies}};
}

// <out_root>/<command>-<first 16 hex of sha256(config + input contents)>.
inline fs::path run_dir_for(const RunConfig& c, const std::string& command, const std::vector<fs::path>& inputs) {
  std::string material = command + "\n" + config_json(c).dump() + "\n";
  for (const auto& p : inputs) material += sha256_hex(read_file(p)) + "\n";
  return c.out_root / (command + "-" + sha256_hex(material).substr(0, 16));
}

inline std::string dataset_label(const RunConfig& c) {
  return c.dataset_name.empty() ? c.dataset_path.stem().string() : c.dataset_name;
}

// Owns the judges for one command, wrapped in a persistent content cache.
class JudgeSetup {
 public:
  JudgeSetup(const RunConfig& cfg, const fs::path& cache_path) : cache_path_(cache_path) {
    if (cfg.judges == JudgeKind::kMock) {
      base_embedder_ = std::make_unique<MockEmbedder>(128, cfg.seed);
      base_nli_ = std::make_unique<MockNliJudge>();
    } else {
      client_ = std::make_unique<BridgeClient>(resolve_bridge_url(cfg.bridge_url));
      client_->health();  // fail fast when the bridge is down
      base_embedder_ = std::make_unique<HttpEmbedder>(*client_);
      base_nli_ = std::make_unique<HttpEntailmentJudge>(*client_);
    }
    cache_.load(cache_path_);
    embedder_ = std::make_unique<CachingEmbedder>(*base_embedder_, cache_);
    nli_ = std::make_unique<CachingEntailmentJudge>(*base_nli_, cache_);
    bundle_.embedder = embedder_.get();
    bundle_.nli = nli_.get();
    bundle_.batch.batch_size = cfg.batch_size;
    bundle_.batch.counters = &counters_;
  }

  JudgeBundle& bundle() noexcept { return bundle_; }
  JudgeCounters& counters() noexcept { return counters_; }
  void persist() const { cache_.save(cache_path_); }

 private:
  fs::path cache_path_;
  std::unique_ptr<BridgeClient> client_;
  std::unique_ptr<Embedder> base_embedder_;
  std::unique_ptr<EntailmentJudge> base_nli_;
  JudgeCache cache_;
  std::unique_ptr<CachingEmbedder> embedder_;
  std::unique_ptr<CachingEntailmentJudge> nli_;
  JudgeCounters counters_;
  JudgeBundle bundle_;
};

inline ScoringOptions scoring_options(const RunConfig& c) {
  ScoringOptions o;
  o.mode = c.mode;
  o.strategy = c.clustering;
  o.embedding.tau = c.tau.value_or(0.9);
  o.embedding.k = c.k;
  o.alpha = c.alpha;
  o.eq1_mode = c.eq1_mode;
  return o;
}

inline int cmd_validate(const fs::path& dataset_path, std::ostream& out) {
  ValidationReport report;
  read_dataset(dataset_path, &report);
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
  out << "ok: " << report.n_cases << " cases\n";
  return static_cast<int>(ExitCode::kOk);
}

struct DistortConfig {
  fs::path image_dir;
  fs::path out_dir;
  std::size_t variants = 1;
  std::uint64_t seed = 0;
};

// Writes `variants` distorted copies of every PNG/JPEG in image_dir plus
// manifest.json. Each image gets its own seed derived from (seed, filename).
inline nlohmann::json cmd_distort(const DistortConfig& cfg, std::ostream& out) {
  std::vector<fs::path> images;
  for (const auto& entry : fs::directory_iterator(cfg.image_dir)) {
    if (entry.is_regular_file() && is_supported_image(entry.path())) images.push_back(entry.path());
  }
  std::sort(images.begin(), images.end());
  fs::create_directories(cfg.out_dir);

  nlohmann::json entries = nlohmann::json::array();
  for (const auto& img_path : images) {
    const std::string name = img_path.filename().string();
    const std::uint64_t image_seed = rng::mix(cfg.seed, rng::fnv1a(name));
    ImageBuffer img;
    if (cfg.variants > 0) img = load_image(img_path);
    for (std::size_t v = 0; v < cfg.variants; ++v) {
      const auto spec = sample_spec(image_seed, v);
      const auto out_name = img_path.stem().string() + "_v" + std::to_string(v) + ".png";
      save_image(distort(img, spec), cfg.out_dir / out_name);
      entries.push_back({{"image", name}, {"variant_index", v}, {"output", out_name}, {"spec", spec}});
    }
  }
  nlohmann::json manifest = {
      {"seed", cfg.seed}, {"variants_per_image", cfg.variants}, {"images", images.size()}, {"entries", entries}};
  write_file(cfg.out_dir / "manifest.json", manifest.dump(2) + "\n");
  out << "wrote " << entries.size() << " variants to " << cfg.out_dir.string() << '\n';
  return manifest;
}

inline Dataset load_for_run(const RunConfig& cfg, const fs::path& path) {
  Dataset ds = read_dataset(path);
  if (cfg.n) {
    for (auto& c : ds) c = truncate_case(c, *cfg.n);
  }
  return ds;
}

inline TuneOptions tune_options(const RunConfig& cfg) {
  TuneOptions t;
  t.lo = cfg.tau_lo;
  t.hi = cfg.tau_hi;
  t.trials = cfg.trials;
  t.metric = cfg.tune_metric;
  t.scoring = scoring_options(cfg);
  t.scoring.strategy = ClusteringStrategy::kEmbedding;
  t.workers = cfg.workers;
  return t;
}

inline nlohmann::json tune_json(const TuneResult& r, Metric metric) {
  nlohmann::json aucs = nlohmann::json::array();
  for (const auto& a : r.aucs) aucs.push_back(a ? nlohmann::json(*a) : nlohmann::json(nullptr));
  return {{"metric", std::string(to_string(metric))},
          {"tau_star", r.tau_star},
          {"auc_star", r.auc_star},
          {"grid", r.grid},
          {"aucs", aucs}};
}

struct ScoreOutcome {
  fs::path run_dir;
  RunResult run;
};

inline ScoreOutcome cmd_score(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.tau && cfg.clustering == ClusteringStrategy::kEmbedding && !cfg.tune_split) {
    throw Error("--tau tune requires --tune-split");
  }
  std::vector<fs::path> inputs = {cfg.dataset_path};
  if (!cfg.tau && cfg.tune_split) inputs.push_back(*cfg.tune_split);
  const fs::path run_dir = run_dir_for(cfg, "score", inputs);
  const Dataset ds = load_for_run(cfg, cfg.dataset_path);
  fs::create_directories(run_dir);

  JudgeSetup judges(cfg, run_dir / "judge_cache.json");
  const auto t0 = std::chrono::steady_clock::now();

  RunConfig effective = cfg;
  std::optional<double> tau_star;
  if (!cfg.tau && cfg.clustering == ClusteringStrategy::kEmbedding) {
    const Dataset tune_ds = load_for_run(cfg, *cfg.tune_split);
    const auto tr = tune_tau(tune_ds, tune_options(cfg), judges.bundle());
    tau_star = tr.tau_star;
    effective.tau = tr.tau_star;
    write_file(run_dir / "tune.json", tune_json(tr, cfg.tune_metric).dump(2) + "\n");
  }

  const auto results = score_dataset(ds, scoring_options(effective), judges.bundle(), cfg.workers);

  RunResult run;
  run.meta.dataset = dataset_label(cfg);
  run.meta.model = cfg.model_name;
  run.meta.mode = std::string(to_string(cfg.mode));
  run.meta.clustering = std::string(to_string(cfg.clustering));
  if (cfg.clustering == ClusteringStrategy::kEmbedding) {
    run.meta.tau = effective.tau;
    run.meta.k = cfg.k;
  }
  run.meta.alpha = cfg.alpha;
  run.meta.eq1_mode = std::string(to_string(cfg.eq1_mode));
  run.meta.n = cfg.n;
  run.tau_star = tau_star;

  std::string jsonl;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ScoredCase sc{ds[i].id, std::string(to_string(ds[i].prompt_config)), ds[i].label, results[i].scores,
                  results[i].labeling.ids};
    jsonl += to_json(sc).dump() + "\n";
    run.cases.push_back(std::move(sc));
  }
  run.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.embed_calls = judges.counters().embed_calls.load();
  run.nli_calls = judges.counters().nli_calls.load();

  write_file(run_dir / "scores.jsonl", jsonl);
  nlohmann::json run_json = {{"meta", to_json(run.meta)},
                             {"config", config_json(cfg)},
                             {"tau_star", run.tau_star ? nlohmann::json(*run.tau_star) : nlohmann::json(nullptr)},
                             {"runtime_s", run.runtime_s},
                             {"judge_counters", judges.counters().to_json()}};
  write_file(run_dir / "run.json", run_json.dump(2) + "\n");
  const RunResult runs[] = {run};
  const auto report = summarize(runs);
  write_file(run_dir / "report.json", to_json(report).dump(2) + "\n");
  write_file(run_dir / "report.csv", to_csv(report));
  judges.persist();

  out << "scored " << ds.size() << " cases\n";
  out << "run_dir: " << run_dir.string() << '\n';
  return {run_dir, std::move(run)};
}

struct TuneOutcome {
  fs::path run_dir;
  TuneResult result;
  std::optional<double> eval_auc;
};

inline TuneOutcome cmd_tune(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.tune_split) throw Error("tune requires --tune-split");
  std::vector<fs::path> inputs = {*cfg.tune_split};
  if (cfg.eval_split) inputs.push_back(*cfg.eval_split);
  const fs::path run_dir = run_dir_for(cfg, "tune", inputs);
  fs::create_directories(run_dir);
  JudgeSetup judges(cfg, run_dir / "judge_cache.json");

  const Dataset tune_ds = load_for_run(cfg, *cfg.tune_split);
  TuneOutcome outcome{run_dir, tune_tau(tune_ds, tune_options(cfg), judges.bundle()), std::nullopt};
  auto j = tune_json(outcome.result, cfg.tune_metric);

  if (cfg.eval_split) {
    const Dataset eval_ds = load_for_run(cfg, *cfg.eval_split);
    auto so = scoring_options(cfg);
    so.strategy = ClusteringStrategy::kEmbedding;
    so.embedding.tau = outcome.result.tau_star;
    const auto results = score_dataset(eval_ds, so, judges.bundle(), cfg.workers);
    outcome.eval_auc = metric_auc(eval_ds, results, cfg.tune_metric);
    j["eval_auc"] = outcome.eval_auc ? nlohmann::json(*outcome.eval_auc) : nlohmann::json(nullptr);
  }
  write_file(run_dir / "tune.json", j.dump(2) + "\n");
  judges.persist();

  out << "tau_star: " << format_number(outcome.result.tau_star) << '\n';
  out << "auc_star: " << format_number(outcome.result.auc_star) << '\n';
  if (cfg.eval_split) out << "eval_auc: " << format_optional(outcome.eval_auc) << '\n';
  out << "run_dir: " << run_dir.string() << '\n';
  return outcome;
}

struct SweepOutcome {
  fs::path run_dir;
  SweepResult result;
};

inline SweepOutcome cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const fs::path run_dir = run_dir_for(cfg, "sweep", {cfg.dataset_path});
  fs::create_directories(run_dir);
  JudgeSetup judges(cfg, run_dir / "judge_cache.json");
  const Dataset ds = read_dataset(cfg.dataset_path);

  SweepOptions so;
  so.n_values = cfg.n_values;
  so.strategies = cfg.sweep_strategies;
  so.scoring = scoring_options(cfg);
  so.workers = cfg.workers;
  SweepOutcome outcome{run_dir, sweep_sampling_scale(ds, so, judges.bundle())};

  write_file(run_dir / "sweep.csv", sweep_to_csv(outcome.result));
  write_file(run_dir / "sweep.json", to_json(outcome.result).dump(2) + "\n");
  judges.persist();
  out << "axis:";
  for (auto n : outcome.result.axis) out << ' ' << n;
  out << '\n' << "run_dir: " << run_dir.string() << '\n';
  return outcome;
}

inline RunResult load_run(const fs::path& run_dir) {
  const auto run_json = nlohmann::json::parse(read_file(run_dir / "run.json"));
  RunResult run;
  run.meta = run_meta_from_json(run_json.at("meta"));
  if (run_json.contains("tau_star") && !run_json["tau_star"].is_null()) run.tau_star = run_json["tau_star"].get<double>();
  run.runtime_s = run_json.value("runtime_s", 0.0);
  const auto& counters = run_json.value("judge_counters", nlohmann::json::object());
  run.embed_calls = counters.value("embed_calls", std::uint64_t{0});
  run.nli_calls = counters.value("nli_calls", std::uint64_t{0});
  std::istringstream lines(read_file(run_dir / "scores.jsonl"));
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty()) run.cases.push_back(scored_case_from_json(nlohmann::json::parse(line)));
  }
  return run;
}

struct ReportOutcome {
  fs::path out_dir;
  EvalReport report;
};

// Merges score runs into one table.
inline ReportOutcome cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& out_root, std::ostream& out) {
  std::vector<RunResult> runs;
  std::string material = "report\n";
  for (const auto& d : run_dirs) {
    runs.push_back(load_run(d));
    material += sha256_hex(read_file(d / "scores.jsonl")) + sha256_hex(read_file(d / "run.json")) + "\n";
  }
  const fs::path out_dir = out_root / ("report-" + sha256_hex(material).substr(0, 16));
  fs::create_directories(out_dir);
  ReportOutcome outcome{out_dir, summarize(runs)};
  write_file(out_dir / "report.json", to_json(outcome.report).dump(2) + "\n");
  write_file(out_dir / "report.csv", to_csv(outcome.report));
  out << "rows: " << outcome.report.rows.size() << '\n';
  out << "run_dir: " << out_dir.string() << '\n';
  return outcome;
}

}  // namespace hedge::cli
