#include "ast/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ast {

using json = nlohmann::json;

namespace {

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json dist_json(const EnvDistribution& d) { return {{"mu", d.mu}, {"sigma", d.sigma}}; }

EnvDistribution dist_from_json(const json& j) {
  EnvDistribution d;
  d.mu = j.at("mu").get<Vec4>();
  d.sigma = j.at("sigma").get<Vec4>();
  return d;
}

bool close(double a, double b) {
  if (a == b) return true;
  return std::abs(a - b) <= 1e-6 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kMcts: return "mcts";
    case Algorithm::kMonteCarlo: return "mc";
    case Algorithm::kCem: return "cem";
    case Algorithm::kNavDb: return "navdb";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "mcts") return Algorithm::kMcts;
  if (name == "mc") return Algorithm::kMonteCarlo;
  if (name == "cem") return Algorithm::kCem;
  if (name == "navdb") return Algorithm::kNavDb;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

Metrics compute_metrics(std::span<const EpisodeRecord> records) {
  Metrics m;
  m.episodes = records.size();
  if (records.empty()) return m;
  double sum = 0.0;
  m.min_miss = std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    sum += r.miss;
    m.min_miss = std::min(m.min_miss, r.miss);
    if (r.event) {
      ++m.n_events;
      if (!m.first_failure) m.first_failure = r.index;
    }
  }
  m.mean_miss = sum / static_cast<double>(records.size());
  double ss = 0.0;
  for (const auto& r : records) ss += (r.miss - m.mean_miss) * (r.miss - m.mean_miss);
  m.std_miss = records.size() > 1 ? std::sqrt(ss / static_cast<double>(records.size() - 1)) : 0.0;
  const auto logps = failure_logps(records);
  if (!logps.empty())
    m.mean_failure_logp = std::accumulate(logps.begin(), logps.end(), 0.0) / static_cast<double>(logps.size());
  return m;
}

std::vector<double> failure_logps(std::span<const EpisodeRecord> records) {
  std::vector<double> out;
  for (const auto& r : records)
    if (r.event && r.logp) out.push_back(*r.logp);
  return out;
}

std::optional<double> rel_log(std::span<const double> failure_logps_alg, std::span<const double> failure_logps_mc) {
  if (failure_logps_alg.empty() || failure_logps_mc.empty()) return std::nullopt;
  const double alg = std::accumulate(failure_logps_alg.begin(), failure_logps_alg.end(), 0.0) /
                     static_cast<double>(failure_logps_alg.size());
  const double mc = std::accumulate(failure_logps_mc.begin(), failure_logps_mc.end(), 0.0) /
                    static_cast<double>(failure_logps_mc.size());
  if (mc == 0.0) return std::nullopt;
  return alg / mc;
}

TrajectorySimConfig sim_config(const ExperimentConfig& cfg) {
  TrajectorySimConfig sc;
  sc.env = cfg.env.dist;
  sc.origin = cfg.env.origin;
  sc.defect = cfg.defect;
  sc.max_depth = cfg.depth;
  return sc;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.depth == 0) throw std::invalid_argument("depth must be positive");
  TrajectorySimulation sim(sim_config(cfg));
  AstMdp mdp(sim, cfg.env.dist, cfg.reward, cfg.depth, cfg.env.origin);
  std::mt19937_64 rng(cfg.master_seed);

  ExperimentResult result;
  switch (cfg.algo) {
    case Algorithm::kMcts: {
      if (cfg.episodes == 0) break;
      SearchConfig sc = cfg.search;
      sc.episodes = cfg.episodes;
      sc.max_depth = cfg.depth;
      MctsSearch search(mdp, sc, cfg.master_seed);
      auto sr = search.run();
      result.records = std::move(sr.episodes);
      result.best_root_action = sr.best_root_action;
      for_each_node(search.root(), [&](const StateNode&) { ++result.tree_nodes; });
      break;
    }
    case Algorithm::kMonteCarlo:
      result.records = direct_monte_carlo(mdp, mdp.initial_state(), cfg.episodes, cfg.depth, rng);
      break;
    case Algorithm::kCem: {
      if (cfg.episodes == 0) break;
      auto cr = cem_search(sim, mdp, cfg.cem, rng, cfg.episodes);
      result.records = std::move(cr.episodes);
      for (const auto& it : cr.iterations) result.cem_proposals.push_back(it.proposal);
      result.cem_iterations = std::move(cr.iterations);
      break;
    }
    case Algorithm::kNavDb:
      result.records = navdb_sample(cfg.navdb, cfg.episodes, sim, rng);
      break;
  }
  result.evaluations = sim.evaluations();
  result.metrics = compute_metrics(result.records);
  return result;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over the pair.
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<ExperimentResult> run_trials(const ExperimentConfig& cfg, std::size_t trials) {
  std::vector<std::future<ExperimentResult>> futures;
  futures.reserve(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    ExperimentConfig c = cfg;
    c.master_seed = derive_seed(cfg.master_seed, i);
    futures.push_back(std::async(std::launch::async, [c] { return run_experiment(c); }));
  }
  std::vector<ExperimentResult> out;
  out.reserve(trials);
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

std::string records_csv(std::span<const EpisodeRecord> records) {
  std::string out = "episode,event,miss,logp,reward,seeds\n";
  for (const auto& r : records) {
    out += std::to_string(r.index);
    out += r.event ? ",1," : ",0,";
    out += fmt9(r.miss);
    out += ',';
    if (r.logp) out += fmt9(*r.logp);
    out += ',';
    out += fmt9(r.reward);
    out += ',';
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
      if (i) out += ';';
      out += std::to_string(r.seeds[i]);
    }
    out += '\n';
  }
  return out;
}

void export_records(std::span<const EpisodeRecord> records, const std::filesystem::path& path) {
  write_text(path, records_csv(records));
}

std::vector<EpisodeRecord> parse_records_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "episode,event,miss,logp,reward,seeds")
    throw std::invalid_argument("records CSV: unexpected header");
  std::vector<EpisodeRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 6) throw std::invalid_argument("records CSV line " + std::to_string(lineno) + ": expected 6 fields");
    try {
      EpisodeRecord r;
      r.index = std::stoull(f[0]);
      if (f[1] != "0" && f[1] != "1") throw std::invalid_argument("event");
      r.event = f[1] == "1";
      r.miss = std::stod(f[2]);
      if (!f[3].empty()) r.logp = std::stod(f[3]);
      r.reward = std::stod(f[4]);
      std::size_t s = 0;
      while (s < f[5].size()) {
        const auto semi = f[5].find(';', s);
        r.seeds.push_back(std::stoull(f[5].substr(s, semi - s)));
        if (semi == std::string::npos) break;
        s = semi + 1;
      }
      records.push_back(std::move(r));
    } catch (const std::exception&) {
      throw std::invalid_argument("records CSV line " + std::to_string(lineno) + ": malformed field");
    }
  }
  return records;
}

std::vector<EpisodeRecord> import_records(const std::filesystem::path& path) {
  try {
    return parse_records_csv(read_text(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
  Histogram h;
  h.counts.assign(bins, 0);
  if (values.empty() || bins == 0) return h;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  h.lo = *mn;
  h.hi = *mx;
  const double width = (h.hi - h.lo) / static_cast<double>(bins);
  for (double v : values) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - h.lo) / width) : 0;
    h.counts[std::min(b, bins - 1)]++;
  }
  return h;
}

namespace {

std::string histogram_csv(const Histogram& h) {
  std::string out = "bin,lo,hi,count\n";
  const std::size_t bins = h.counts.size();
  const double width = bins ? (h.hi - h.lo) / static_cast<double>(bins) : 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    out += std::to_string(b) + ',' + fmt9(h.lo + width * static_cast<double>(b)) + ',' +
           fmt9(b + 1 == bins ? h.hi : h.lo + width * static_cast<double>(b + 1)) + ',' + std::to_string(h.counts[b]) +
           '\n';
  }
  return out;
}

}  // namespace

void export_plot_data(std::span<const EpisodeRecord> records, const std::filesystem::path& out_dir) {
  if (records.empty()) throw std::invalid_argument("export_plot_data: no records");
  std::filesystem::create_directories(out_dir);
  std::string mean = "episode,running_mean_miss\n";
  std::string mins = "episode,running_min_miss\n";
  std::string cum = "episode,cumulative_events\n";
  double sum = 0.0;
  double lowest = std::numeric_limits<double>::infinity();
  std::size_t events = 0;
  std::vector<double> neg_miss;
  neg_miss.reserve(records.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    sum += r.miss;
    lowest = std::min(lowest, r.miss);
    events += r.event ? 1 : 0;
    const std::string ep = std::to_string(r.index);
    mean += ep + ',' + fmt9(sum / static_cast<double>(k + 1)) + '\n';
    mins += ep + ',' + fmt9(lowest) + '\n';
    cum += ep + ',' + std::to_string(events) + '\n';
    neg_miss.push_back(-r.miss);
  }
  write_text(out_dir / "running_mean_miss.csv", mean);
  write_text(out_dir / "running_min_miss.csv", mins);
  write_text(out_dir / "cumulative_events.csv", cum);
  write_text(out_dir / "miss_histogram.csv", histogram_csv(histogram(neg_miss)));
  const auto logps = failure_logps(records);
  write_text(out_dir / "failure_logp_histogram.csv", histogram_csv(histogram(logps)));
}

RunManifest make_manifest(const ExperimentConfig& cfg, const ExperimentResult& result) {
  RunManifest m;
  m.algo = cfg.algo;
  m.episodes = cfg.episodes;
  m.depth = cfg.depth;
  m.master_seed = cfg.master_seed;
  m.env = cfg.env;
  m.defect = cfg.defect;
  if (cfg.algo == Algorithm::kCem) {
    m.cem_population = cfg.cem.population;
    m.cem_proposals = result.cem_proposals;
  }
  if (cfg.algo == Algorithm::kNavDb) {
    m.navdb_source = cfg.navdb_source;
    m.navdb = cfg.navdb;
  }
  return m;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  json j;
  j["algo"] = to_string(m.algo);
  j["episodes"] = m.episodes;
  j["depth"] = m.depth;
  j["master_seed"] = m.master_seed;
  j["env"] = {{"distribution", dist_json(m.env.dist)},
              {"origin_name", m.env.origin_name},
              {"origin", {m.env.origin.x, m.env.origin.y}}};
  j["defect"] = {{"enabled", m.defect.enabled},
                 {"bank_angle", m.defect.bank_angle},
                 {"airspeed", m.defect.airspeed},
                 {"min_radius", m.defect.min_radius}};
  if (m.algo == Algorithm::kCem) {
    j["cem_population"] = m.cem_population;
    json props = json::array();
    for (const auto& iter : m.cem_proposals) {
      json per = json::array();
      for (const auto& d : iter) per.push_back(dist_json(d));
      props.push_back(per);
    }
    j["cem_proposals"] = props;
  }
  if (m.algo == Algorithm::kNavDb) {
    j["navdb_source"] = m.navdb_source;
    j["navdb"] = json::parse(route_database_json(m.navdb));
  }
  write_text(path, j.dump(1) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
  RunManifest m;
  try {
    const json j = json::parse(read_text(path));
    m.algo = parse_algorithm(j.at("algo").get<std::string>());
    m.episodes = j.at("episodes").get<std::size_t>();
    m.depth = j.at("depth").get<std::size_t>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    const auto& env = j.at("env");
    m.env.dist = dist_from_json(env.at("distribution"));
    m.env.origin_name = env.at("origin_name").get<std::string>();
    m.env.origin = {env.at("origin")[0].get<double>(), env.at("origin")[1].get<double>()};
    const auto& d = j.at("defect");
    m.defect.enabled = d.at("enabled").get<bool>();
    m.defect.bank_angle = d.at("bank_angle").get<double>();
    m.defect.airspeed = d.at("airspeed").get<double>();
    m.defect.min_radius = d.at("min_radius").get<double>();
    if (m.algo == Algorithm::kCem) {
      m.cem_population = j.at("cem_population").get<std::size_t>();
      for (const auto& iter : j.at("cem_proposals")) {
        std::vector<EnvDistribution> per;
        for (const auto& x : iter) per.push_back(dist_from_json(x));
        m.cem_proposals.push_back(std::move(per));
      }
    }
    if (m.algo == Algorithm::kNavDb) {
      m.navdb_source = j.at("navdb_source").get<std::string>();
      m.navdb = parse_route_database(j.at("navdb").dump());
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": malformed run manifest: " + e.what());
  }
  return m;
}

void write_run(const ExperimentConfig& cfg, const ExperimentResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  export_records(result.records, out_dir / "records.csv");
  write_manifest(make_manifest(cfg, result), out_dir / "run.json");
  const Metrics& m = result.metrics;
  json mj;
  mj["algo"] = to_string(cfg.algo);
  mj["episodes"] = m.episodes;
  mj["evaluations"] = result.evaluations;
  mj["n_events"] = m.n_events;
  mj["first_failure"] = m.first_failure ? json(*m.first_failure) : json(nullptr);
  mj["mean_miss"] = m.mean_miss;
  mj["std_miss"] = m.std_miss;
  mj["min_miss"] = m.min_miss;
  mj["mean_failure_logp"] = m.mean_failure_logp ? json(*m.mean_failure_logp) : json(nullptr);
  mj["rel_log"] = m.rel_log ? json(*m.rel_log) : json(nullptr);
  write_text(out_dir / "metrics.json", mj.dump(1) + "\n");
  if (!result.records.empty()) export_plot_data(result.records, out_dir / "plot");
}

ReplayReport replay(std::span<const EpisodeRecord> records, const RunManifest& manifest) {
  TrajectorySimConfig sc;
  sc.env = manifest.env.dist;
  sc.origin = manifest.env.origin;
  sc.defect = manifest.defect;
  sc.max_depth = manifest.depth;
  TrajectorySimulation sim(sc);

  ReplayReport report;
  report.results.reserve(records.size());
  for (const auto& rec : records) {
    sim.initialize();
    EvalResult r;
    try {
      if (manifest.algo == Algorithm::kNavDb) {
        if (rec.seeds.size() != 1 || rec.seeds[0] >= manifest.navdb.routes.size())
          throw std::invalid_argument("route index out of range");
        const auto& route = manifest.navdb.routes[rec.seeds[0]];
        r = sim.evaluate_plan({route.waypoints.front(), route.waypoints, std::vector<Wind>(route.waypoints.size())});
      } else {
        if (manifest.algo == Algorithm::kCem) {
          if (manifest.cem_population == 0 || rec.index == 0) throw std::invalid_argument("no CEM proposal");
          const std::size_t iter = (rec.index - 1) / manifest.cem_population;
          if (iter >= manifest.cem_proposals.size()) throw std::invalid_argument("no CEM proposal for episode");
          sim.set_sampling(manifest.cem_proposals[iter]);
        }
        SeedPath path;
        path.origin = manifest.env.origin;
        for (auto s : rec.seeds) path.seeds.push_back(Seed{s});
        r = sim.evaluate(path);
      }
    } catch (const std::exception& e) {
      report.results.push_back({});
      report.mismatches.push_back({rec.index, e.what()});
      continue;
    }
    report.results.push_back(r);
    std::string detail;
    if (r.event != rec.event) detail += "event recorded " + std::to_string(rec.event) + " replayed " + std::to_string(r.event) + "; ";
    if (!close(r.miss, rec.miss)) detail += "miss recorded " + fmt9(rec.miss) + " replayed " + fmt9(r.miss) + "; ";
    if (rec.logp && !close(r.logp, *rec.logp))
      detail += "logp recorded " + fmt9(*rec.logp) + " replayed " + fmt9(r.logp) + "; ";
    if (!detail.empty()) report.mismatches.push_back({rec.index, detail});
  }
  return report;
}

}  // namespace ast
