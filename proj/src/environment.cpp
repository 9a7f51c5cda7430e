#include "ast/environment.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ast {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double normal_log_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t component_index(const std::string& name) {
  static const std::map<std::string, std::size_t> names{
      {"bearing", kBearing},     {"wpt_bearing", kBearing},   {"distance", kDistance},
      {"wpt_distance", kDistance}, {"wind_dir", kWindDir},    {"wind_direction", kWindDir},
      {"wind_speed", kWindSpeed}, {"wind_magnitude", kWindSpeed}};
  const auto it = names.find(name);
  if (it == names.end()) throw std::invalid_argument("unknown disturbance component '" + name + "'");
  return it->second;
}

}  // namespace

Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
double distance(Point a, Point b) { return std::hypot(b.x - a.x, b.y - a.y); }

double wrap360(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  if (w >= 360.0) w = 0.0;
  return w;
}

double bearing_deg(Point from, Point to) {
  return wrap360(std::atan2(to.x - from.x, to.y - from.y) / kDegToRad);
}

void EnvDistribution::validate() const {
  for (std::size_t i = 0; i < kComponents; ++i) {
    if (!std::isfinite(mu[i])) throw std::invalid_argument("environment mean must be finite");
    if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i]))
      throw std::invalid_argument("environment standard deviations must be positive");
  }
}

Disturbance Disturbance::from_draw(const Vec4& draw) {
  Disturbance w;
  w.draw = draw;
  w.wpt_bearing = wrap360(draw[kBearing]);
  w.wpt_distance = std::max(std::abs(draw[kDistance]), kMinWaypointDistance);
  w.wind_dir = draw[kWindDir];
  w.wind_speed = std::max(draw[kWindSpeed], 0.0);
  return w;
}

Vec4 standard_normals(Seed seed) {
  std::mt19937_64 gen(seed.value);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec4 z{};
  for (auto& v : z) v = normal(gen);
  return z;
}

Disturbance sample_disturbance(Seed seed, const EnvDistribution& dist) {
  const Vec4 z = standard_normals(seed);
  Vec4 draw{};
  for (std::size_t i = 0; i < kComponents; ++i) draw[i] = dist.mu[i] + dist.sigma[i] * z[i];
  return Disturbance::from_draw(draw);
}

double log_density(const Vec4& draw, const EnvDistribution& dist) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kComponents; ++i) sum += normal_log_pdf(draw[i], dist.mu[i], dist.sigma[i]);
  return sum;
}

double log_density(const Disturbance& w, const EnvDistribution& dist) { return log_density(w.draw, dist); }

double path_log_likelihood(std::span<const Disturbance> ws, const EnvDistribution& dist) {
  if (ws.empty()) throw std::invalid_argument("log-likelihood of an empty path");
  double sum = 0.0;
  for (const auto& w : ws) sum += log_density(w, dist);
  return sum;
}

double path_log_likelihood(const SeedPath& path, const EnvDistribution& dist) {
  const auto ws = sample_path(path, dist);
  return path_log_likelihood(ws, dist);
}

std::vector<Disturbance> sample_path(const SeedPath& path, const EnvDistribution& dist,
                                     std::span<const EnvDistribution> sampling) {
  if (!sampling.empty() && sampling.size() < path.size())
    throw std::invalid_argument("sampling distributions shorter than the seed path");
  std::vector<Disturbance> ws;
  ws.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i)
    ws.push_back(sample_disturbance(path.seeds[i], sampling.empty() ? dist : sampling[i]));
  return ws;
}

FlightPlan build_flight_plan(std::span<const Disturbance> ws, Point origin) {
  if (ws.empty()) throw std::invalid_argument("cannot build a flight plan from an empty path");
  FlightPlan plan;
  plan.origin = origin;
  plan.waypoints.reserve(ws.size() + 1);
  plan.winds.reserve(ws.size() + 1);
  plan.waypoints.push_back(origin);
  plan.winds.push_back({ws.front().wind_dir, ws.front().wind_speed});
  for (const auto& w : ws) {
    const double b = w.wpt_bearing * kDegToRad;
    const Point prev = plan.waypoints.back();
    plan.waypoints.push_back({prev.x + w.wpt_distance * std::sin(b), prev.y + w.wpt_distance * std::cos(b)});
    plan.winds.push_back({w.wind_dir, w.wind_speed});
  }
  return plan;
}

FlightPlan build_flight_plan(const SeedPath& path, const EnvDistribution& dist) {
  const auto ws = sample_path(path, dist);
  return build_flight_plan(ws, path.origin);
}

Point origin_preset(const std::string& name) {
  // KLAX sits about 293 nmi from KSFO on a bearing of roughly 137 degrees.
  if (name == "KSFO" || name == "origin" || name.empty()) return {0.0, 0.0};
  if (name == "KLAX") return {199.8, -214.3};
  throw std::invalid_argument("unknown origin preset '" + name + "'");
}

EnvConfig parse_env_config(const std::string& text) {
  EnvConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("env config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::istringstream vs(value);

    auto read_vec = [&](Vec4& out) {
      for (auto& v : out)
        if (!(vs >> v)) throw std::invalid_argument("env config line " + std::to_string(lineno) + ": expected 4 numbers");
    };
    auto read_one = [&]() {
      double v = 0.0;
      if (!(vs >> v)) throw std::invalid_argument("env config line " + std::to_string(lineno) + ": expected a number");
      return v;
    };

    if (key == "mu") {
      read_vec(cfg.dist.mu);
    } else if (key == "sigma") {
      read_vec(cfg.dist.sigma);
    } else if (key == "origin") {
      cfg.origin_name = value;
      cfg.origin = origin_preset(value);
    } else if (key.starts_with("mu.")) {
      cfg.dist.mu[component_index(key.substr(3))] = read_one();
    } else if (key.starts_with("sigma.")) {
      cfg.dist.sigma[component_index(key.substr(6))] = read_one();
    } else {
      throw std::invalid_argument("env config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  cfg.dist.validate();
  return cfg;
}

EnvConfig load_env_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open env config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_env_config(ss.str());
}

}  // namespace ast
