// SPDX-License-Identifier: Apache-2.0
//
// hedge: validate | distort | score | tune | sweep | report

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hedge/cli.hpp"

namespace {

using hedge::cli::RunConfig;

struct RawRunFlags {
  std::string mode = "answer_only";
  std::string clustering = "embedding";
  std::string tau = "0.9";
  std::size_t k = 0;
  std::string n = "all";
  std::string eq1_mode = "verbatim";
  std::string judges = "live";
  std::string tune_metric = "VASE";
  std::vector<std::string> sweep_clustering = {"embedding", "nli"};
  std::string tune_split;
  std::string eval_split;
};

void add_run_flags(CLI::App* cmd, RunConfig& cfg, RawRunFlags& raw) {
  cmd->add_option("--mode", raw.mode, "Clustering input mode")->check(CLI::IsMember({"answer_only", "answer_plus_question"}));
  cmd->add_option("--clustering", raw.clustering, "Clustering strategy")->check(CLI::IsMember({"nli", "embedding"}));
  cmd->add_option("--tau", raw.tau, "Cosine threshold in (0,1], or 'tune'");
  cmd->add_option("--k", raw.k, "Add kNN edges with this k (0 = off)");
  cmd->add_option("--alpha", cfg.alpha, "VASE gap scale");
  cmd->add_option("--n", raw.n, "Samples per pool, or 'all'");
  cmd->add_option("--eq1-mode", raw.eq1_mode, "Semantic distribution form")
      ->check(CLI::IsMember({"verbatim", "sum_normalized"}));
  cmd->add_option("--seed", cfg.seed, "Seed for mock judges");
  cmd->add_option("--bridge-url", cfg.bridge_url, "Model bridge URL (overrides HEDGE_BRIDGE_URL)");
  cmd->add_option("--judges", raw.judges, "live or mock")->check(CLI::IsMember({"live", "mock"}));
  cmd->add_option("--batch-size", cfg.batch_size, "Judge batch size")->check(CLI::PositiveNumber);
  cmd->add_option("--workers", cfg.workers, "Parallel case workers")->check(CLI::PositiveNumber);
  cmd->add_option("--out-root", cfg.out_root, "Directory holding run directories");
  cmd->add_option("--dataset-name", cfg.dataset_name, "Dataset label for reports");
  cmd->add_option("--model-name", cfg.model_name, "Model label for reports");
  cmd->add_option("--tune-split", raw.tune_split, "Dataset used to pick tau");
  cmd->add_option("--tune-metric", raw.tune_metric, "Metric maximized when tuning")
      ->check(CLI::IsMember({"SE", "RadFlag", "VASE", "se", "radflag", "vase"}));
  cmd->add_option("--tau-min", cfg.tau_lo, "Lower tau bound");
  cmd->add_option("--tau-max", cfg.tau_hi, "Upper tau bound");
  cmd->add_option("--trials", cfg.trials, "Grid points")->check(CLI::PositiveNumber);
}

void finalize(RunConfig& cfg, const RawRunFlags& raw) {
  cfg.mode = *hedge::parse_input_mode(raw.mode);
  cfg.clustering = *hedge::parse_clustering(raw.clustering);
  cfg.eq1_mode = *hedge::parse_eq1_mode(raw.eq1_mode);
  cfg.judges = raw.judges == "mock" ? hedge::cli::JudgeKind::kMock : hedge::cli::JudgeKind::kLive;
  cfg.tune_metric = *hedge::parse_metric(raw.tune_metric);
  if (raw.tau == "tune") {
    cfg.tau.reset();
  } else {
    double t = 0.0;
    try {
      t = std::stod(raw.tau);
    } catch (const std::exception&) {
      throw hedge::Error("--tau must be a number or 'tune'");
    }
    if (!(t > 0.0 && t <= 1.0)) throw hedge::Error("--tau must lie in (0, 1]");
    cfg.tau = t;
  }
  if (raw.k > 0) cfg.k = raw.k;
  if (raw.n != "all") {
    try {
      cfg.n = std::stoul(raw.n);
    } catch (const std::exception&) {
      throw hedge::Error("--n must be a positive integer or 'all'");
    }
    if (*cfg.n == 0) throw hedge::Error("--n must be positive");
  }
  if (!raw.tune_split.empty()) cfg.tune_split = raw.tune_split;
  if (!raw.eval_split.empty()) cfg.eval_split = raw.eval_split;
  cfg.sweep_strategies.clear();
  for (const auto& s : raw.sweep_clustering) cfg.sweep_strategies.push_back(*hedge::parse_clustering(s));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hallucination detection benchmark over clustered VLM answers"};
  app.require_subcommand(1);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a JSONL dataset");
  validate->add_option("dataset", validate_path)->required();

  hedge::cli::DistortConfig distort_cfg;
  auto* distort = app.add_subcommand("distort", "Write distorted image variants and a manifest");
  distort->add_option("--images", distort_cfg.image_dir, "Input image directory")->required()->check(CLI::ExistingDirectory);
  distort->add_option("--out", distort_cfg.out_dir, "Output directory")->required();
  distort->add_option("--n", distort_cfg.variants, "Variants per image");
  distort->add_option("--seed", distort_cfg.seed, "Seed");

  RunConfig score_cfg;
  RawRunFlags score_raw;
  auto* score = app.add_subcommand("score", "Score every case (SE, RadFlag, VASE)");
  score->add_option("--dataset", score_cfg.dataset_path, "JSONL dataset")->required()->check(CLI::ExistingFile);
  add_run_flags(score, score_cfg, score_raw);

  RunConfig tune_cfg;
  RawRunFlags tune_raw;
  auto* tune = app.add_subcommand("tune", "Grid-search the embedding threshold tau");
  add_run_flags(tune, tune_cfg, tune_raw);
  tune->add_option("--eval-split", tune_raw.eval_split, "Held-out dataset scored at tau*");
  tune->callback([&] {
    if (tune_raw.tune_split.empty()) throw CLI::ValidationError("--tune-split", "tune requires --tune-split");
  });

  RunConfig sweep_cfg;
  RawRunFlags sweep_raw;
  auto* sweep = app.add_subcommand("sweep", "AUC across sampling scales");
  sweep->add_option("--dataset", sweep_cfg.dataset_path, "JSONL dataset")->required()->check(CLI::ExistingFile);
  add_run_flags(sweep, sweep_cfg, sweep_raw);
  sweep->add_option("--n-values", sweep_cfg.n_values, "Sampling scales (comma separated)")->delimiter(',');
  sweep->add_option("--sweep-clustering", sweep_raw.sweep_clustering, "Strategies to sweep")
      ->check(CLI::IsMember({"nli", "embedding"}));

  std::vector<std::string> report_runs;
  std::string report_out = "runs";
  auto* report = app.add_subcommand("report", "Merge score runs into one AUC table");
  report->add_option("runs", report_runs, "Score run directories")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out-root", report_out, "Directory for the merged report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return hedge::cli::cmd_validate(validate_path, std::cout);
    if (*distort) {
      hedge::cli::cmd_distort(distort_cfg, std::cout);
      return 0;
    }
    if (*score) {
      finalize(score_cfg, score_raw);
      hedge::cli::cmd_score(score_cfg, std::cout);
      return 0;
    }
    if (*tune) {
      finalize(tune_cfg, tune_raw);
      hedge::cli::cmd_tune(tune_cfg, std::cout);
      return 0;
    }
    if (*sweep) {
      finalize(sweep_cfg, sweep_raw);
      hedge::cli::cmd_sweep(sweep_cfg, std::cout);
      return 0;
    }
    if (*report) {
      std::vector<std::filesystem::path> dirs(report_runs.begin(), report_runs.end());
      hedge::cli::cmd_report(dirs, report_out, std::cout);
      return 0;
    }
  } catch (const hedge::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(hedge::ExitCode::kFailure);
  }
  return 0;
}
