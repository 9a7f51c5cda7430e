#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ast/astmdp.hpp"
#include "ast/baselines.hpp"
#include "ast/mcts.hpp"
#include "ast/trajsut.hpp"

namespace ast {

enum class Algorithm { kMcts, kMonteCarlo, kCem, kNavDb };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct Metrics {
  std::size_t episodes = 0;
  std::size_t n_events = 0;
  std::optional<std::size_t> first_failure;
  double mean_miss = 0.0;
  double std_miss = 0.0;
  double min_miss = 0.0;
  std::optional<double> mean_failure_logp;
  std::optional<double> rel_log;  // filled in against a Monte Carlo run
};

Metrics compute_metrics(std::span<const EpisodeRecord> records);

/// mean(alg) / mean(mc); empty when either list is empty or the MC mean is 0.
std::optional<double> rel_log(std::span<const double> failure_logps_alg,
                              std::span<const double> failure_logps_mc);

std::vector<double> failure_logps(std::span<const EpisodeRecord> records);

struct ExperimentConfig {
  Algorithm algo = Algorithm::kMcts;
  std::size_t episodes = 5000;
  std::size_t depth = 12;
  std::uint64_t master_seed = 0;
  EnvConfig env;
  DefectConfig defect;
  RewardConfig reward;
  SearchConfig search;  // episodes/max_depth are overwritten from above
  CemConfig cem;
  RouteDatabase navdb;  // used by kNavDb
  std::string navdb_source = "builtin";
};

struct ExperimentResult {
  std::vector<EpisodeRecord> records;
  Metrics metrics;
  std::uint64_t evaluations = 0;  // system evaluation counter
  std::optional<Seed> best_root_action;
  std::vector<std::vector<EnvDistribution>> cem_proposals;  // per iteration
  std::vector<CemIteration> cem_iterations;
  std::size_t tree_nodes = 0;
};

TrajectorySimConfig sim_config(const ExperimentConfig& cfg);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Runs `trials` repetitions concurrently, trial i with derive_seed(master, i).
std::vector<ExperimentResult> run_trials(const ExperimentConfig& cfg, std::size_t trials);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// CSV header `episode,event,miss,logp,reward,seeds`; 9 significant digits;
/// seeds joined with ';'. Throws std::runtime_error naming the path on I/O
/// failure.
void export_records(std::span<const EpisodeRecord> records, const std::filesystem::path& path);
std::string records_csv(std::span<const EpisodeRecord> records);
std::vector<EpisodeRecord> import_records(const std::filesystem::path& path);
std::vector<EpisodeRecord> parse_records_csv(const std::string& text);

/// Writes running_mean_miss.csv, running_min_miss.csv, cumulative_events.csv,
/// miss_histogram.csv (of -miss) and failure_logp_histogram.csv into `out_dir`.
void export_plot_data(std::span<const EpisodeRecord> records, const std::filesystem::path& out_dir);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
};

/// `bins` uniform bins spanning [min, max] of `values`.
Histogram histogram(std::span<const double> values, std::size_t bins = 50);

/// Everything needed to re-run the evaluations behind an exported run.
struct RunManifest {
  Algorithm algo = Algorithm::kMcts;
  std::size_t episodes = 0;
  std::size_t depth = 12;
  std::uint64_t master_seed = 0;
  EnvConfig env;
  DefectConfig defect;
  std::size_t cem_population = 0;
  std::vector<std::vector<EnvDistribution>> cem_proposals;
  std::string navdb_source;
  RouteDatabase navdb;
};

RunManifest make_manifest(const ExperimentConfig& cfg, const ExperimentResult& result);
void write_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

/// Writes records.csv, run.json, metrics.json and plot series into `out_dir`.
void write_run(const ExperimentConfig& cfg, const ExperimentResult& result,
               const std::filesystem::path& out_dir);

struct ReplayMismatch {
  std::size_t episode = 0;
  std::string detail;
};

struct ReplayReport {
  std::vector<EvalResult> results;
  std::vector<ReplayMismatch> mismatches;
};

/// Re-evaluates every record and compares event and miss (relative 1e-6,
/// matching the 9-digit export).
ReplayReport replay(std::span<const EpisodeRecord> records, const RunManifest& manifest);

}  // namespace ast
