#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ast/astmdp.hpp"
#include "ast/trajsut.hpp"

namespace ast {

/// `n` independent random rollouts of `depth` levels from `s0`, no action
/// feeding, one system evaluation each.
std::vector<EpisodeRecord> direct_monte_carlo(AstMdp& mdp, const AstState& s0, std::size_t n,
                                              std::size_t depth, std::mt19937_64& rng);

struct CemConfig {
  std::size_t population = 100;
  std::size_t elite_count = 10;
  std::size_t iterations = 50;
  EnvDistribution proposal = default_proposal();
  double sigma_floor = 1e-3;

  /// True environment with the waypoint distance pulled in to 1 +- 3 nmi.
  static EnvDistribution default_proposal();
  void validate() const;
};

struct CemIteration {
  std::vector<EnvDistribution> proposal;  // per path index, used for this iteration
  double mean_miss = 0.0;
  std::size_t events = 0;
};

struct CemResult {
  std::vector<EpisodeRecord> episodes;
  std::vector<EnvDistribution> final_proposal;
  std::vector<CemIteration> iterations;
};

/// Weighted maximum-likelihood refit of a per-index proposal to elite draws.
/// `draws[i][j]` is the raw draw of sample i at path index j, `log_weights[i]`
/// is log f(x_i) - log g(x_i). Throws std::runtime_error when no weight
/// survives.
std::vector<EnvDistribution> refit_proposal(const std::vector<std::vector<Vec4>>& draws,
                                            const std::vector<double>& log_weights,
                                            double sigma_floor);

/// Cross-entropy search with a per-index Gaussian proposal. Elites are the
/// samples with the smallest miss distance. Recorded log-likelihoods are
/// always under the true environment. A final partial iteration is run when
/// `max_episodes` is not a multiple of the population.
CemResult cem_search(TrajectorySimulation& sim, AstMdp& mdp, const CemConfig& cfg,
                     std::mt19937_64& rng, std::size_t max_episodes = 0);

struct Route {
  std::string name;
  std::vector<Point> waypoints;
};

struct RouteDatabase {
  std::vector<Route> routes;

  void validate() const;
};

RouteDatabase load_route_database(const std::filesystem::path& file);
void save_route_database(const RouteDatabase& db, const std::filesystem::path& file);
RouteDatabase parse_route_database(const std::string& json_text);
std::string route_database_json(const RouteDatabase& db);

/// Synthetic procedures with legs >= 5 nmi and heading changes <= 120 deg.
RouteDatabase generate_route_database(std::size_t count, std::uint64_t seed, Point origin = {});

/// Samples `n` routes uniformly with replacement and evaluates each. The
/// record's single seed is the route index; logp is absent.
std::vector<EpisodeRecord> navdb_sample(const RouteDatabase& db, std::size_t n,
                                        TrajectorySimulation& sim, std::mt19937_64& rng);

}  // namespace ast
