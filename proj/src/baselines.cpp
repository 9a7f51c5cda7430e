#include "ast/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "ast/mcts.hpp"

namespace ast {

using json = nlohmann::json;

std::vector<EpisodeRecord> direct_monte_carlo(AstMdp& mdp, const AstState& s0, std::size_t n, std::size_t depth,
                                              std::mt19937_64& rng) {
  std::vector<EpisodeRecord> records;
  records.reserve(n);
  mdp.set_sink([&](const EpisodeRecord& r) { records.push_back(r); });
  for (std::size_t i = 0; i < n; ++i) {
    mdp.simulation().initialize();
    rollout(mdp, s0, depth, rng, nullptr);
  }
  mdp.set_sink(nullptr);
  return records;
}

EnvDistribution CemConfig::default_proposal() {
  EnvDistribution p;
  p.mu[kDistance] = 1.0;
  p.sigma[kDistance] = 3.0;
  return p;
}

void CemConfig::validate() const {
  if (population == 0 || elite_count == 0) throw std::invalid_argument("CEM population and elite count must be positive");
  if (elite_count > population) throw std::invalid_argument("CEM elite count exceeds population");
  if (iterations == 0) throw std::invalid_argument("CEM needs at least one iteration");
  if (!(sigma_floor > 0.0)) throw std::invalid_argument("CEM sigma floor must be positive");
  proposal.validate();
}

std::vector<EnvDistribution> refit_proposal(const std::vector<std::vector<Vec4>>& draws,
                                            const std::vector<double>& log_weights, double sigma_floor) {
  if (draws.empty() || draws.size() != log_weights.size())
    throw std::invalid_argument("refit_proposal: need one log weight per elite");
  const std::size_t depth = draws.front().size();
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(top)) throw std::runtime_error("CEM proposal collapse: every likelihood ratio underflowed");

  // Scaling every ratio by exp(-top) leaves the weighted fit unchanged.
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - top);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total))
    throw std::runtime_error("CEM proposal collapse: every likelihood ratio underflowed");

  std::vector<EnvDistribution> fit(depth);
  for (std::size_t j = 0; j < depth; ++j) {
    for (std::size_t c = 0; c < kComponents; ++c) {
      double mean = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) mean += w[i] * draws[i][j][c];
      mean /= total;
      double var = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double dx = draws[i][j][c] - mean;
        var += w[i] * dx * dx;
      }
      var /= total;
      fit[j].mu[c] = mean;
      fit[j].sigma[c] = std::max(std::sqrt(var), sigma_floor);
    }
  }
  return fit;
}

CemResult cem_search(TrajectorySimulation& sim, AstMdp& mdp, const CemConfig& cfg, std::mt19937_64& rng,
                     std::size_t max_episodes) {
  cfg.validate();
  if (&mdp.simulation() != &sim) throw std::invalid_argument("cem_search: the MDP must wrap the given simulation");
  const std::size_t depth = mdp.max_depth();
  const std::size_t budget = max_episodes > 0 ? max_episodes : cfg.population * cfg.iterations;

  CemResult result;
  result.episodes.reserve(budget);
  std::vector<EnvDistribution> proposal(depth, cfg.proposal);
  const auto saved_sampling = sim.sampling();

  struct Sample {
    std::size_t record;
    std::vector<Vec4> draws;
    double log_weight;
  };

  mdp.set_sink([&](const EpisodeRecord& r) { result.episodes.push_back(r); });
  std::size_t used = 0;
  while (used < budget) {
    const std::size_t count = std::min(cfg.population, budget - used);
    sim.set_sampling(proposal);
    CemIteration iter;
    iter.proposal = proposal;

    std::vector<Sample> samples;
    samples.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      AstState s = mdp.initial_state();
      for (std::size_t d = 0; d < depth; ++d) s = mdp.step(s, Seed{rng()});
      const EpisodeRecord rec = mdp.finish_episode(s);
      Sample smp{result.episodes.size() - 1, {}, 0.0};
      double log_g = 0.0;
      for (std::size_t j = 0; j < depth; ++j) {
        const Vec4& x = sim.disturbances()[j].draw;
        smp.draws.push_back(x);
        log_g += log_density(x, proposal[j]);
      }
      smp.log_weight = *rec.logp - log_g;
      samples.push_back(std::move(smp));
      iter.mean_miss += rec.miss;
      iter.events += rec.event ? 1 : 0;
    }
    iter.mean_miss /= static_cast<double>(count);
    used += count;

    const std::size_t elites = std::min(cfg.elite_count, count);
    std::stable_sort(samples.begin(), samples.end(), [&](const Sample& a, const Sample& b) {
      return result.episodes[a.record].miss < result.episodes[b.record].miss;
    });
    std::vector<std::vector<Vec4>> elite_draws;
    std::vector<double> elite_weights;
    for (std::size_t e = 0; e < elites; ++e) {
      elite_draws.push_back(samples[e].draws);
      elite_weights.push_back(samples[e].log_weight);
    }
    proposal = refit_proposal(elite_draws, elite_weights, cfg.sigma_floor);
    result.iterations.push_back(std::move(iter));
  }
  mdp.set_sink(nullptr);
  sim.set_sampling(saved_sampling);
  result.final_proposal = proposal;
  return result;
}

void RouteDatabase::validate() const {
  if (routes.empty()) throw std::invalid_argument("route database is empty");
  for (const auto& r : routes)
    if (r.waypoints.size() < 2) throw std::invalid_argument("route '" + r.name + "' has fewer than 2 waypoints");
}

std::string route_database_json(const RouteDatabase& db) {
  json j;
  j["routes"] = json::array();
  for (const auto& r : db.routes) {
    json pts = json::array();
    for (const auto& p : r.waypoints) pts.push_back({p.x, p.y});
    j["routes"].push_back({{"name", r.name}, {"waypoints", pts}});
  }
  return j.dump(1);
}

RouteDatabase parse_route_database(const std::string& json_text) {
  RouteDatabase db;
  try {
    const json j = json::parse(json_text);
    for (const auto& r : j.at("routes")) {
      Route route;
      route.name = r.at("name").get<std::string>();
      for (const auto& p : r.at("waypoints")) {
        if (p.size() != 2) throw std::invalid_argument("waypoint must be [x, y]");
        route.waypoints.push_back({p[0].get<double>(), p[1].get<double>()});
      }
      db.routes.push_back(std::move(route));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed route database: ") + e.what());
  }
  db.validate();
  return db;
}

RouteDatabase load_route_database(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open route database " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_route_database(ss.str());
}

void save_route_database(const RouteDatabase& db, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write route database " + file.string());
  out << route_database_json(db) << '\n';
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

RouteDatabase generate_route_database(std::size_t count, std::uint64_t seed, Point origin) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RouteDatabase db;
  for (std::size_t i = 0; i < count; ++i) {
    Route r;
    r.name = "PROC" + std::to_string(i + 1);
    const std::size_t legs = 2 + static_cast<std::size_t>(unit(gen) * 11.0);  // 2..12
    Point p = origin + Point{(unit(gen) - 0.5) * 100.0, (unit(gen) - 0.5) * 100.0};
    double course = unit(gen) * 360.0;
    r.waypoints.push_back(p);
    for (std::size_t l = 0; l < legs; ++l) {
      if (l > 0) course = wrap360(course + (unit(gen) * 2.0 - 1.0) * 120.0);
      const double len = 5.0 + unit(gen) * 55.0;
      p = p + Point{len * std::sin(course * kDeg), len * std::cos(course * kDeg)};
      r.waypoints.push_back(p);
    }
    db.routes.push_back(std::move(r));
  }
  return db;
}

std::vector<EpisodeRecord> navdb_sample(const RouteDatabase& db, std::size_t n, TrajectorySimulation& sim,
                                        std::mt19937_64& rng) {
  db.validate();
  std::vector<EpisodeRecord> records;
  records.reserve(n);
  std::uniform_int_distribution<std::size_t> pick(0, db.routes.size() - 1);
  const RewardConfig reward;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx = pick(rng);
    const auto& route = db.routes[idx];
    FlightPlan plan{route.waypoints.front(), route.waypoints, std::vector<Wind>(route.waypoints.size())};
    sim.initialize();
    const EvalResult r = sim.evaluate_plan(plan);
    EpisodeRecord rec;
    rec.index = i + 1;
    rec.seeds = {idx};
    rec.miss = r.miss;
    rec.event = r.event;
    // Routes carry no likelihood; the reward uses log p = 0.
    rec.reward = reward_episodic(0.0, r.event, r.miss, true, reward);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace ast
