#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "ast/baselines.hpp"

namespace {

using namespace ast;

struct Rig {
  explicit Rig(bool defect = true, std::size_t depth = 12) : sim(config(defect, depth)), mdp(sim, EnvDistribution{}, RewardConfig{}, depth) {}
  static TrajectorySimConfig config(bool defect, std::size_t depth) {
    TrajectorySimConfig c;
    c.defect.enabled = defect;
    c.max_depth = depth;
    return c;
  }
  TrajectorySimulation sim;
  AstMdp mdp;
};

TEST(DirectMc, ZeroEpisodes) {
  Rig s;
  std::mt19937_64 rng(1);
  EXPECT_TRUE(direct_monte_carlo(s.mdp, s.mdp.initial_state(), 0, 12, rng).empty());
  EXPECT_EQ(s.sim.evaluations(), 0u);
}

TEST(DirectMc, SeedsComeStraightFromTheGenerator) {
  Rig s;
  std::mt19937_64 rng(17), mirror(17);
  const auto recs = direct_monte_carlo(s.mdp, s.mdp.initial_state(), 30, 12, rng);
  ASSERT_EQ(recs.size(), 30u);
  EXPECT_EQ(s.sim.evaluations(), 30u);
  for (const auto& r : recs) {
    ASSERT_EQ(r.seeds.size(), 12u);
    for (auto seed : r.seeds) EXPECT_EQ(seed, mirror());
  }
}

TEST(DirectMc, DefectOnFindsRareFailures) {
  Rig s;
  std::mt19937_64 rng(2);
  const auto recs = direct_monte_carlo(s.mdp, s.mdp.initial_state(), 5000, 12, rng);
  std::size_t events = 0;
  for (const auto& r : recs) events += r.event;
  EXPECT_GT(events, 0u);
  EXPECT_LT(events, 250u);  // under 5% of episodes
}

TEST(DirectMc, DefectOffFindsNothing) {
  Rig s(false);
  std::mt19937_64 rng(3);
  for (const auto& r : direct_monte_carlo(s.mdp, s.mdp.initial_state(), 5000, 12, rng)) ASSERT_FALSE(r.event);
}

TEST(Refit, UnitWeightsGiveSampleMoments) {
  std::vector<std::vector<Vec4>> draws{{{1, 2, 3, 4}}, {{3, 2, 5, 8}}, {{5, 2, 7, 0}}};
  const auto fit = refit_proposal(draws, {0.0, 0.0, 0.0}, 1e-3);
  ASSERT_EQ(fit.size(), 1u);
  EXPECT_NEAR(fit[0].mu[0], 3.0, 1e-12);
  EXPECT_NEAR(fit[0].sigma[0], std::sqrt(8.0 / 3.0), 1e-12);
  EXPECT_NEAR(fit[0].sigma[1], 1e-3, 1e-15);  // constant column hits the floor
  EXPECT_NEAR(fit[0].mu[3], 4.0, 1e-12);
}

TEST(Refit, WeightsActLikeRepeats) {
  // Weight 2 on the first sample equals listing it twice.
  std::vector<std::vector<Vec4>> weighted{{{0, 0, 0, 0}}, {{6, 6, 6, 6}}};
  std::vector<std::vector<Vec4>> repeated{{{0, 0, 0, 0}}, {{0, 0, 0, 0}}, {{6, 6, 6, 6}}};
  const auto a = refit_proposal(weighted, {std::log(2.0) - 900.0, -900.0}, 1e-3);
  const auto b = refit_proposal(repeated, {0.0, 0.0, 0.0}, 1e-3);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_NEAR(a[0].mu[c], b[0].mu[c], 1e-12);
    EXPECT_NEAR(a[0].sigma[c], b[0].sigma[c], 1e-12);
  }
}

TEST(Refit, SingleEliteCollapsesToFloor) {
  const auto fit = refit_proposal({{{1, 2, 3, 4}, {5, 6, 7, 8}}}, {-3.0}, 0.25);
  ASSERT_EQ(fit.size(), 2u);
  EXPECT_EQ(fit[1].mu, (Vec4{5, 6, 7, 8}));
  for (double s : fit[1].sigma) EXPECT_EQ(s, 0.25);
}

TEST(Refit, AllWeightsUnderflowed) {
  const double ninf = -std::numeric_limits<double>::infinity();
  EXPECT_THROW(refit_proposal({{{1, 2, 3, 4}}}, {ninf}, 1e-3), std::runtime_error);
  EXPECT_THROW(refit_proposal({}, {}, 1e-3), std::invalid_argument);
}

TEST(LikelihoodRatio, WeightTimesProposalIsTrueDensity) {
  const EnvDistribution f;
  const EnvDistribution g = CemConfig::default_proposal();
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto x = sample_disturbance(Seed{s}, g).draw;
    const double log_w = log_density(x, f) - log_density(x, g);
    const double lhs = std::exp(log_w) * std::exp(log_density(x, g));
    const double rhs = std::exp(log_density(x, f));
    EXPECT_NEAR(lhs / rhs, 1.0, 1e-9);
  }
}

TEST(Cem, ProposalEqualToTruthGivesUnweightedFit) {
  Rig s(true, 4);
  CemConfig cfg;
  cfg.proposal = EnvDistribution{};
  cfg.iterations = 2;
  cfg.population = 40;
  cfg.elite_count = 5;
  std::mt19937_64 rng(8);
  const auto result = cem_search(s.sim, s.mdp, cfg, rng);
  ASSERT_EQ(result.iterations.size(), 2u);
  // First iteration: all ratios are 1, so the refit is the plain elite fit.
  const auto& first = result.episodes;
  std::vector<std::size_t> order(40);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return first[a].miss < first[b].miss; });
  std::vector<std::vector<Vec4>> elites;
  for (std::size_t e = 0; e < 5; ++e) {
    SeedPath p;
    for (auto v : first[order[e]].seeds) p.seeds.push_back(Seed{v});
    std::vector<Vec4> row;
    for (const auto& w : sample_path(p, EnvDistribution{})) row.push_back(w.draw);
    elites.push_back(row);
  }
  const auto expected = refit_proposal(elites, std::vector<double>(5, 0.0), cfg.sigma_floor);
  ASSERT_EQ(result.iterations[1].proposal.size(), expected.size());
  for (std::size_t j = 0; j < expected.size(); ++j)
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_NEAR(result.iterations[1].proposal[j].mu[c], expected[j].mu[c], 1e-9);
      EXPECT_NEAR(result.iterations[1].proposal[j].sigma[c], expected[j].sigma[c], 1e-9);
    }
}

TEST(Cem, BudgetIncludesPartialIteration) {
  Rig s;
  std::mt19937_64 rng(4);
  const auto result = cem_search(s.sim, s.mdp, CemConfig{}, rng, 250);
  EXPECT_EQ(result.episodes.size(), 250u);
  EXPECT_EQ(s.sim.evaluations(), 250u);
  EXPECT_EQ(result.iterations.size(), 3u);
  EXPECT_TRUE(s.sim.sampling().empty());
}

TEST(Cem, FailuresCarryTrueLikelihood) {
  Rig s;
  std::mt19937_64 rng(5);
  CemConfig cfg;
  cfg.iterations = 5;
  const auto result = cem_search(s.sim, s.mdp, cfg, rng);
  std::size_t failures = 0;
  for (const auto& r : result.episodes) {
    ASSERT_TRUE(r.logp.has_value());
    const auto& proposal = result.iterations[(r.index - 1) / cfg.population].proposal;
    SeedPath p;
    for (auto v : r.seeds) p.seeds.push_back(Seed{v});
    const auto ws = sample_path(p, EnvDistribution{}, proposal);
    EXPECT_NEAR(*r.logp, path_log_likelihood(ws, EnvDistribution{}), 1e-9);
    failures += r.event;
  }
  EXPECT_GT(failures, 0u);
}

TEST(Cem, MeanMissImproves) {
  Rig s;
  std::mt19937_64 rng(6);
  const auto result = cem_search(s.sim, s.mdp, CemConfig{}, rng);
  ASSERT_EQ(result.iterations.size(), 50u);
  EXPECT_LT(result.iterations.back().mean_miss, result.iterations.front().mean_miss);
}

TEST(Cem, ConfigValidation) {
  CemConfig c;
  c.elite_count = 200;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = CemConfig{};
  c.sigma_floor = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(RouteDb, JsonRoundTrip) {
  const auto db = generate_route_database(5, 3);
  const auto back = parse_route_database(route_database_json(db));
  ASSERT_EQ(back.routes.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(back.routes[i].name, db.routes[i].name);
    ASSERT_EQ(back.routes[i].waypoints.size(), db.routes[i].waypoints.size());
    for (std::size_t k = 0; k < db.routes[i].waypoints.size(); ++k)
      EXPECT_NEAR(distance(back.routes[i].waypoints[k], db.routes[i].waypoints[k]), 0.0, 1e-9);
  }
}

TEST(RouteDb, RejectsMalformed) {
  EXPECT_THROW(parse_route_database("{"), std::invalid_argument);
  EXPECT_THROW(parse_route_database(R"({"routes": []})"), std::invalid_argument);
  EXPECT_THROW(parse_route_database(R"({"routes": [{"name": "X", "waypoints": [[0, 0]]}]})"), std::invalid_argument);
  EXPECT_THROW(parse_route_database(R"({"routes": [{"name": "X", "waypoints": [[0, 0, 1], [1, 1]]}]})"),
               std::invalid_argument);
}

TEST(RouteDb, GeneratedGeometryIsTame) {
  const auto db = generate_route_database(200, 1);
  EXPECT_EQ(db.routes.size(), 200u);
  for (const auto& r : db.routes) {
    ASSERT_GE(r.waypoints.size(), 3u);
    for (std::size_t i = 1; i < r.waypoints.size(); ++i) EXPECT_GE(distance(r.waypoints[i - 1], r.waypoints[i]), 5.0 - 1e-9);
  }
  EXPECT_EQ(route_database_json(generate_route_database(20, 9)), route_database_json(generate_route_database(20, 9)));
}

TEST(NavDb, SingleRouteEvaluatedOnce) {
  TrajectorySimulation sim(TrajectorySimConfig{});
  RouteDatabase db{{Route{"R", {{0, 0}, {0, 20}, {20, 20}}}}};
  std::mt19937_64 rng(1);
  const auto recs = navdb_sample(db, 1, sim, rng);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].seeds, std::vector<std::uint64_t>{0});
  EXPECT_FALSE(recs[0].logp.has_value());
  EXPECT_EQ(sim.evaluations(), 1u);
}

TEST(NavDb, FeasibleRoutesNeverFail) {
  TrajectorySimulation sim(TrajectorySimConfig{});
  std::mt19937_64 rng(2);
  const auto recs = navdb_sample(generate_route_database(200, 1), 5000, sim, rng);
  EXPECT_EQ(sim.evaluations(), 5000u);
  for (const auto& r : recs) ASSERT_FALSE(r.event);
}

TEST(NavDb, DetectsAnInfeasibleRoute) {
  TrajectorySimulation sim(TrajectorySimConfig{});
  RouteDatabase db{{Route{"BAD", {{0, 0}, {0, 50}, {0.08, 50}, {0.08, 0}}}}};
  std::mt19937_64 rng(1);
  EXPECT_TRUE(navdb_sample(db, 1, sim, rng)[0].event);
}

}  // namespace
