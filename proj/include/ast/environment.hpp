#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ast {

/// Point in the local flat-earth tangent plane, nautical miles.
/// North is +y, east is +x.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

Point operator+(Point a, Point b);
Point operator-(Point a, Point b);
Point operator*(double s, Point p);
double distance(Point a, Point b);

/// Bearing from `from` to `to`, degrees clockwise from north in [0, 360).
double bearing_deg(Point from, Point to);

/// Wraps an angle in degrees to [0, 360).
double wrap360(double deg);

/// The search action: a seed for the disturbance generator.
struct Seed {
  std::uint64_t value = 0;

  friend auto operator<=>(const Seed&, const Seed&) = default;
};

/// Ordered seeds that fully determine a simulated flight plan.
struct SeedPath {
  std::vector<Seed> seeds;
  Point origin;

  std::size_t size() const { return seeds.size(); }
  bool empty() const { return seeds.empty(); }
  friend bool operator==(const SeedPath&, const SeedPath&) = default;
};

/// Component order of the disturbance vector.
enum Component : std::size_t { kBearing = 0, kDistance = 1, kWindDir = 2, kWindSpeed = 3 };
inline constexpr std::size_t kComponents = 4;
using Vec4 = std::array<double, kComponents>;

/// Independent normals over (bearing deg, distance nmi, wind dir deg, wind kts).
/// `sigma` holds standard deviations, not variances.
struct EnvDistribution {
  Vec4 mu{180.0, 50.0, -88.5, 66.8};
  Vec4 sigma{45.0, 30.0, 39.5, 24.4};

  void validate() const;
  friend bool operator==(const EnvDistribution&, const EnvDistribution&) = default;
};

inline constexpr double kMinWaypointDistance = 0.01;  // nmi

/// One sampled waypoint/wind disturbance.
///
/// `draw` is the raw Gaussian sample and is what the likelihood is evaluated
/// on. The four named fields are the values handed to the flight plan:
/// bearing wrapped to [0, 360), distance folded to |x| then floored at
/// kMinWaypointDistance, wind speed floored at zero.
struct Disturbance {
  Vec4 draw{};
  double wpt_bearing = 0.0;
  double wpt_distance = 0.0;
  double wind_dir = 0.0;
  double wind_speed = 0.0;

  static Disturbance from_draw(const Vec4& draw);
  friend bool operator==(const Disturbance&, const Disturbance&) = default;
};

/// Four standard-normal variates from a generator seeded with `seed`.
Vec4 standard_normals(Seed seed);

Disturbance sample_disturbance(Seed seed, const EnvDistribution& dist);

/// Sum of per-component natural-log Gaussian densities of `w.draw`.
double log_density(const Disturbance& w, const EnvDistribution& dist);
double log_density(const Vec4& draw, const EnvDistribution& dist);

double path_log_likelihood(const SeedPath& path, const EnvDistribution& dist);
double path_log_likelihood(std::span<const Disturbance> ws, const EnvDistribution& dist);

struct Wind {
  double dir = 0.0;    // degrees, direction the wind blows from
  double speed = 0.0;  // knots
};

/// Input to the trajectory predictor. `waypoints[0]` is the origin.
struct FlightPlan {
  Point origin;
  std::vector<Point> waypoints;
  std::vector<Wind> winds;  // one per waypoint
};

FlightPlan build_flight_plan(std::span<const Disturbance> ws, Point origin);
FlightPlan build_flight_plan(const SeedPath& path, const EnvDistribution& dist);

/// Draws one disturbance per seed, with a per-index sampling distribution.
/// `sampling` may be empty (use `dist` everywhere) or at least as long as
/// the path.
std::vector<Disturbance> sample_path(const SeedPath& path, const EnvDistribution& dist,
                                     std::span<const EnvDistribution> sampling = {});

/// Named origins in plane coordinates (KSFO at the plane origin).
Point origin_preset(const std::string& name);

/// Environment settings loadable from a key-value file:
///
///     # comment
///     mu = 180 50 -88.5 66.8
///     sigma = 45 30 39.5 24.4
///     origin = KSFO
///
/// Single components may also be set with `mu.bearing`, `sigma.wind_speed`
/// and so on.
struct EnvConfig {
  EnvDistribution dist;
  std::string origin_name = "KSFO";
  Point origin;
};

EnvConfig load_env_config(const std::filesystem::path& file);
EnvConfig parse_env_config(const std::string& text);

}  // namespace ast
