#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ast/harness.hpp"

namespace {

using namespace ast;
namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("astfalsify_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

EpisodeRecord record(std::size_t i, bool e, double miss, std::optional<double> logp) {
  EpisodeRecord r;
  r.index = i;
  r.event = e;
  r.miss = miss;
  r.logp = logp;
  r.reward = logp ? reward_episodic(*logp, e, miss, true, RewardConfig{}) : 0.0;
  r.seeds = {i, i * 3};
  return r;
}

ExperimentConfig small(Algorithm a, std::size_t episodes, std::uint64_t seed = 11) {
  ExperimentConfig c;
  c.algo = a;
  c.episodes = episodes;
  c.master_seed = seed;
  if (a == Algorithm::kNavDb) c.navdb = generate_route_database(200, 1);
  return c;
}

TEST(Algorithms, NamesRoundTrip) {
  for (auto a : {Algorithm::kMcts, Algorithm::kMonteCarlo, Algorithm::kCem, Algorithm::kNavDb})
    EXPECT_EQ(parse_algorithm(to_string(a)), a);
  EXPECT_THROW(parse_algorithm("uct"), std::invalid_argument);
}

TEST(Metrics, HandComputed) {
  const std::vector<EpisodeRecord> recs{record(1, false, 30.0, -40.0), record(2, true, -10.0, -60.0),
                                        record(3, false, 50.0, -20.0), record(4, true, -30.0, -80.0)};
  const Metrics m = compute_metrics(recs);
  EXPECT_EQ(m.episodes, 4u);
  EXPECT_EQ(m.n_events, 2u);
  EXPECT_EQ(m.first_failure, 2u);
  EXPECT_DOUBLE_EQ(m.mean_miss, 10.0);
  // deviations 20, -20, 40, -40 -> sum sq 4000 over n-1 = 3
  EXPECT_NEAR(m.std_miss, std::sqrt(4000.0 / 3.0), 1e-12);
  EXPECT_DOUBLE_EQ(m.min_miss, -30.0);
  EXPECT_DOUBLE_EQ(*m.mean_failure_logp, -70.0);
}

TEST(Metrics, NoFailures) {
  const std::vector<EpisodeRecord> recs{record(1, false, 3.0, -1.0)};
  const Metrics m = compute_metrics(recs);
  EXPECT_FALSE(m.first_failure.has_value());
  EXPECT_FALSE(m.mean_failure_logp.has_value());
}

TEST(RelLog, Examples) {
  const std::vector<double> a{-50.0, -50.0}, b{-40.0, -60.0};
  EXPECT_DOUBLE_EQ(*rel_log(a, b), 1.0);
  const std::vector<double> c{26.2}, d{2.0};
  EXPECT_NEAR(*rel_log(c, d), 13.1, 1e-12);
  EXPECT_FALSE(rel_log({}, b).has_value());
  EXPECT_FALSE(rel_log(a, std::vector<double>{1.0, -1.0}).has_value());
  const std::vector<double> x{-3.0, -9.5, -0.25};
  EXPECT_DOUBLE_EQ(*rel_log(x, x), 1.0);
}

TEST(Csv, HeaderOnlyAndOneRow) {
  EXPECT_EQ(records_csv({}), "episode,event,miss,logp,reward,seeds\n");
  const std::vector<EpisodeRecord> one{record(1, true, -12.5, -33.25)};
  const auto text = records_csv(one);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_NE(text.find("1,1,-12.5,-33.25,"), std::string::npos);
  EXPECT_NE(text.find(",1;3\n"), std::string::npos);
}

TEST(Csv, RoundTrip) {
  std::vector<EpisodeRecord> recs{record(1, false, 1e6, -17.7541234), record(2, true, -0.5, -123.456789),
                                  record(3, false, 12.0, std::nullopt)};
  recs[1].seeds = {0xffffffffffffffffULL, 0};
  const auto back = parse_records_csv(records_csv(recs));
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].index, recs[i].index);
    EXPECT_EQ(back[i].event, recs[i].event);
    EXPECT_EQ(back[i].seeds, recs[i].seeds);
    EXPECT_NEAR(back[i].miss, recs[i].miss, 1e-8 * std::abs(recs[i].miss));
    EXPECT_EQ(back[i].logp.has_value(), recs[i].logp.has_value());
    if (recs[i].logp) EXPECT_NEAR(*back[i].logp, *recs[i].logp, 1e-8 * std::abs(*recs[i].logp));
  }
  EXPECT_EQ(records_csv(back), records_csv(recs));
}

TEST(Csv, Malformed) {
  EXPECT_THROW(parse_records_csv("episode,miss\n"), std::invalid_argument);
  EXPECT_THROW(parse_records_csv("episode,event,miss,logp,reward,seeds\n1,2,3,4,5,6\n"), std::invalid_argument);
  EXPECT_THROW(parse_records_csv("episode,event,miss,logp,reward,seeds\n1,0,x,4,5,6\n"), std::invalid_argument);
  EXPECT_THROW(import_records("/nonexistent/records.csv"), std::runtime_error);
}

TEST(Histogram, SpansRangeAndCountsAll) {
  const std::vector<double> v{0.0, 1.0, 2.0, 3.0, 10.0};
  const auto h = histogram(v, 5);
  EXPECT_EQ(h.lo, 0.0);
  EXPECT_EQ(h.hi, 10.0);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{2, 2, 0, 0, 1}));
  const auto flat = histogram(std::vector<double>{4.0, 4.0}, 50);
  EXPECT_EQ(flat.counts.size(), 50u);
  EXPECT_EQ(flat.counts[0], 2u);
}

TEST(PlotData, SeriesAreConsistent) {
  const auto dir = scratch("plot");
  std::vector<EpisodeRecord> recs;
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n(50.0, 80.0);
  for (std::size_t i = 1; i <= 300; ++i) {
    const double miss = n(gen);
    recs.push_back(record(i, miss <= 0, miss, -20.0 - static_cast<double>(i % 13)));
  }
  export_plot_data(recs, dir);
  const auto mean = lines(dir / "running_mean_miss.csv");
  const auto mins = lines(dir / "running_min_miss.csv");
  const auto cum = lines(dir / "cumulative_events.csv");
  ASSERT_EQ(mean.size(), 301u);
  ASSERT_EQ(cum.size(), 301u);
  double sum = 0.0, prev_min = 1e300;
  for (std::size_t k = 1; k <= 300; ++k) {
    sum += recs[k - 1].miss;
    EXPECT_NEAR(std::stod(mean[k].substr(mean[k].find(',') + 1)), sum / k, 1e-6 * (1 + std::abs(sum / k)));
    const double m = std::stod(mins[k].substr(mins[k].find(',') + 1));
    EXPECT_LE(m, prev_min);
    prev_min = m;
  }
  EXPECT_EQ(std::stoul(cum.back().substr(cum.back().find(',') + 1)), compute_metrics(recs).n_events);
  EXPECT_EQ(lines(dir / "miss_histogram.csv").size(), 51u);
  EXPECT_EQ(lines(dir / "failure_logp_histogram.csv").size(), 51u);
}

TEST(Experiment, BudgetIsExactForEveryAlgorithm) {
  for (auto a : {Algorithm::kMcts, Algorithm::kMonteCarlo, Algorithm::kCem, Algorithm::kNavDb}) {
    const auto r = run_experiment(small(a, 137));
    EXPECT_EQ(r.evaluations, 137u) << to_string(a);
    EXPECT_EQ(r.records.size(), 137u) << to_string(a);
    for (std::size_t i = 0; i < r.records.size(); ++i) EXPECT_EQ(r.records[i].index, i + 1);
  }
}

TEST(Experiment, SameSeedSameMetrics) {
  const auto a = run_experiment(small(Algorithm::kMonteCarlo, 10));
  const auto b = run_experiment(small(Algorithm::kMonteCarlo, 10));
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(records_csv(a.records), records_csv(b.records));
}

TEST(Experiment, MctsWithDefectOffFindsNothing) {
  auto cfg = small(Algorithm::kMcts, 1000);
  cfg.defect.enabled = false;
  const auto r = run_experiment(cfg);
  EXPECT_EQ(r.metrics.n_events, 0u);
  EXPECT_FALSE(r.metrics.first_failure.has_value());
}

TEST(Experiment, TrialsUseDerivedSeeds) {
  const auto cfg = small(Algorithm::kMonteCarlo, 40, 5);
  const auto trials = run_trials(cfg, 3);
  ASSERT_EQ(trials.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    auto c = cfg;
    c.master_seed = derive_seed(5, i);
    EXPECT_EQ(trials[i].records, run_experiment(c).records);
  }
  EXPECT_NE(derive_seed(5, 0), derive_seed(5, 1));
  EXPECT_NE(derive_seed(5, 0), derive_seed(6, 0));
}

TEST(Experiment, OrderingOnReferenceSystem) {
  std::size_t n[4];
  const Algorithm algos[4] = {Algorithm::kMcts, Algorithm::kCem, Algorithm::kMonteCarlo, Algorithm::kNavDb};
  for (int i = 0; i < 4; ++i) n[i] = run_experiment(small(algos[i], 5000, 0)).metrics.n_events;
  EXPECT_GT(n[0], n[1]) << "mcts " << n[0] << " cem " << n[1];
  EXPECT_GE(n[1], n[2]) << "cem " << n[1] << " mc " << n[2];
  EXPECT_GT(n[2], n[3]) << "mc " << n[2];
  EXPECT_EQ(n[3], 0u);
}

TEST(Replay, ExportedRunsReplayCleanly) {
  for (auto a : {Algorithm::kMcts, Algorithm::kMonteCarlo, Algorithm::kCem, Algorithm::kNavDb}) {
    const auto dir = scratch("replay_" + to_string(a));
    const auto cfg = small(a, 300);
    const auto result = run_experiment(cfg);
    write_run(cfg, result, dir);
    const auto records = import_records(dir / "records.csv");
    const auto manifest = read_manifest(dir / "run.json");
    EXPECT_EQ(manifest.algo, a);
    const auto report = replay(records, manifest);
    EXPECT_TRUE(report.mismatches.empty()) << to_string(a) << ": " << report.mismatches.front().detail;
    EXPECT_TRUE(fs::exists(dir / "metrics.json"));
    EXPECT_TRUE(fs::exists(dir / "plot" / "cumulative_events.csv"));
  }
}

TEST(Replay, DefectOffRemovesEvents) {
  const auto dir = scratch("replay_off");
  const auto cfg = small(Algorithm::kCem, 300);
  const auto result = run_experiment(cfg);
  ASSERT_GT(result.metrics.n_events, 0u);
  write_run(cfg, result, dir);
  auto manifest = read_manifest(dir / "run.json");
  manifest.defect.enabled = false;
  const auto report = replay(import_records(dir / "records.csv"), manifest);
  for (const auto& r : report.results) EXPECT_FALSE(r.event);
  EXPECT_FALSE(report.mismatches.empty());
}

TEST(Replay, EditedSeedIsReported) {
  const auto cfg = small(Algorithm::kMonteCarlo, 20);
  auto result = run_experiment(cfg);
  auto manifest = make_manifest(cfg, result);
  result.records[7].seeds[3] ^= 0x5a5a;
  const auto report = replay(result.records, manifest);
  ASSERT_EQ(report.mismatches.size(), 1u);
  EXPECT_EQ(report.mismatches[0].episode, 8u);
}

TEST(Replay, ExportsAreByteIdentical) {
  const auto d1 = scratch("bytes1"), d2 = scratch("bytes2");
  const auto cfg = small(Algorithm::kMcts, 200);
  write_run(cfg, run_experiment(cfg), d1);
  write_run(cfg, run_experiment(cfg), d2);
  for (const char* f : {"records.csv", "run.json", "metrics.json"}) EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
}

TEST(Manifest, MalformedFileIsRejected) {
  const auto dir = scratch("manifest");
  std::ofstream(dir / "run.json") << R"({"algo": "mc"})";
  EXPECT_THROW(read_manifest(dir / "run.json"), std::invalid_argument);
}

}  // namespace
