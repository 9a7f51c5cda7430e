// astfalsify: run or replay adaptive stress testing experiments.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ast/harness.hpp"

namespace {

constexpr std::size_t kBuiltinRoutes = 200;
constexpr std::uint64_t kBuiltinRouteSeed = 1;

bool parse_on_off(const std::string& v) { return v == "on"; }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void print_metrics(const std::string& label, const ast::Metrics& m) {
  std::printf("%s episodes=%zu events=%zu first_failure=%s mean_miss=%.6g std_miss=%.6g min_miss=%.6g\n",
              label.c_str(), m.episodes, m.n_events,
              m.first_failure ? std::to_string(*m.first_failure).c_str() : "none", m.mean_miss, m.std_miss,
              m.min_miss);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive stress testing of a black-box trajectory predictor"};
  app.require_subcommand(1);

  std::string algo = "mcts";
  std::size_t episodes = 5000;
  std::size_t depth = 12;
  std::uint64_t seed = 0;
  std::string defect = "on";
  std::string env_file;
  std::string navdb_file;
  std::string out_dir = "out";
  std::size_t trials = 1;

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--algo", algo, "Search algorithm")->check(CLI::IsMember({"mcts", "mc", "cem", "navdb"}));
  run->add_option("--episodes", episodes, "Episode budget")->check(CLI::PositiveNumber);
  run->add_option("--depth", depth, "Waypoints per episode")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--defect", defect, "Inject the turn-arc defect")->check(CLI::IsMember({"on", "off"}));
  run->add_option("--env", env_file, "Environment config file")->check(CLI::ExistingFile);
  run->add_option("--navdb", navdb_file, "Route database (JSON)")->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--trials", trials, "Independent repetitions run concurrently")->check(CLI::PositiveNumber);

  std::string records_file;
  std::string replay_defect;
  auto* rep = app.add_subcommand("replay", "Re-evaluate exported records");
  rep->add_option("--records", records_file, "records.csv from a run")->required()->check(CLI::ExistingFile);
  rep->add_option("--defect", replay_defect, "Override the recorded defect setting")
      ->check(CLI::IsMember({"on", "off"}));

  std::size_t route_count = kBuiltinRoutes;
  std::uint64_t route_seed = kBuiltinRouteSeed;
  std::string route_out;
  auto* gen = app.add_subcommand("gen-navdb", "Write a synthetic route database");
  gen->add_option("--count", route_count, "Number of routes")->check(CLI::PositiveNumber);
  gen->add_option("--seed", route_seed, "Generator seed");
  gen->add_option("--out", route_out, "Output JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      ast::ExperimentConfig cfg;
      cfg.algo = ast::parse_algorithm(algo);
      cfg.episodes = episodes;
      cfg.depth = depth;
      cfg.master_seed = seed;
      cfg.defect.enabled = parse_on_off(defect);
      if (!env_file.empty()) cfg.env = ast::load_env_config(env_file);
      if (cfg.algo == ast::Algorithm::kNavDb) {
        if (navdb_file.empty()) {
          cfg.navdb = ast::generate_route_database(kBuiltinRoutes, kBuiltinRouteSeed, cfg.env.origin);
        } else {
          cfg.navdb = ast::load_route_database(navdb_file);
          cfg.navdb_source = navdb_file;
        }
      }

      if (trials == 1) {
        auto result = ast::run_experiment(cfg);
        ast::write_run(cfg, result, out_dir);
        print_metrics(algo, result.metrics);
        return 0;
      }

      auto results = ast::run_trials(cfg, trials);
      nlohmann::json summary;
      summary["algo"] = algo;
      summary["trials"] = nlohmann::json::array();
      std::vector<double> events;
      std::vector<double> firsts;
      for (std::size_t i = 0; i < results.size(); ++i) {
        ast::ExperimentConfig c = cfg;
        c.master_seed = ast::derive_seed(cfg.master_seed, i);
        const auto dir = std::filesystem::path(out_dir) / ("trial_" + std::to_string(i));
        ast::write_run(c, results[i], dir);
        const auto& m = results[i].metrics;
        print_metrics(algo + "[" + std::to_string(i) + "]", m);
        events.push_back(static_cast<double>(m.n_events));
        if (m.first_failure) firsts.push_back(static_cast<double>(*m.first_failure));
        summary["trials"].push_back({{"seed", c.master_seed},
                                     {"n_events", m.n_events},
                                     {"first_failure", m.first_failure ? nlohmann::json(*m.first_failure)
                                                                       : nlohmann::json(nullptr)},
                                     {"mean_miss", m.mean_miss},
                                     {"min_miss", m.min_miss}});
      }
      summary["median_events"] = median(events);
      summary["median_first_failure"] = firsts.empty() ? nlohmann::json(nullptr) : nlohmann::json(median(firsts));
      std::ofstream(std::filesystem::path(out_dir) / "summary.json") << summary.dump(1) << '\n';
      return 0;
    }

    if (*rep) {
      const auto records = ast::import_records(records_file);
      auto manifest_path = std::filesystem::path(records_file).parent_path() / "run.json";
      auto manifest = ast::read_manifest(manifest_path);
      if (!replay_defect.empty()) manifest.defect.enabled = parse_on_off(replay_defect);
      const auto report = ast::replay(records, manifest);
      std::size_t events = 0;
      for (const auto& r : report.results) events += r.event ? 1 : 0;
      std::printf("replayed %zu episodes, %zu events, %zu mismatches\n", records.size(), events,
                  report.mismatches.size());
      for (std::size_t i = 0; i < report.mismatches.size() && i < 10; ++i)
        std::printf("  episode %zu: %s\n", report.mismatches[i].episode, report.mismatches[i].detail.c_str());
      return report.mismatches.empty() ? 0 : 2;
    }

    if (*gen) {
      ast::save_route_database(ast::generate_route_database(route_count, route_seed, {}), route_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
