#include "ast/trajsut.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ast {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kTwoPi = 2.0 * kPi;
// Sweeps this close to a full circle are rounding noise around zero.
constexpr double kSweepSnap = 1e-9;
// Heading changes below this are flown straight.
constexpr double kMinTurnDeg = 1e-9;
constexpr double kMinStraight = 1e-9;  // nmi

// Heading change from course `in` to course `out`, degrees in (-180, 180].
// Positive is a right (clockwise) turn.
double heading_change(double in, double out) {
  double d = std::fmod(out - in, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

Point on_circle(Point c, double radius, double azimuth) {
  const double z = azimuth * kDegToRad;
  return {c.x + radius * std::sin(z), c.y + radius * std::cos(z)};
}

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

EvalResult Simulation::evaluate(const SeedPath& path) {
  if (path.empty()) throw std::invalid_argument("evaluate: empty seed path");
  ++evaluations_;
  execute(path);
  return {transition(), is_event(), miss_distance(), is_terminal()};
}

std::size_t LateralPacket::arc_count() const {
  return static_cast<std::size_t>(std::count_if(segments.begin(), segments.end(), [](const Segment& s) {
    return std::holds_alternative<ArcSegment>(s);
  }));
}

Point segment_start(const Segment& s) {
  return std::visit([](const auto& seg) { return seg.start; }, s);
}

Point segment_end(const Segment& s) {
  return std::visit([](const auto& seg) { return seg.end; }, s);
}

void DefectConfig::validate() const {
  if (!(bank_angle > 0.0 && bank_angle <= 45.0)) throw std::invalid_argument("bank angle must be in (0, 45]");
  if (!(airspeed > 0.0)) throw std::invalid_argument("airspeed must be positive");
  if (!(min_radius > 0.0)) throw std::invalid_argument("minimum turn radius must be positive");
}

double turn_radius(double ground_speed_kts, double bank_angle_deg) {
  if (!(ground_speed_kts > 0.0)) throw std::invalid_argument("turn_radius: ground speed must be positive");
  if (!(bank_angle_deg > 0.0 && bank_angle_deg <= 45.0))
    throw std::invalid_argument("turn_radius: bank angle must be in (0, 45]");
  const double v = ground_speed_kts * kMpsPerKnot;
  return v * v / (kGravity * std::tan(bank_angle_deg * kDegToRad)) / kMetersPerNmi;
}

double azimuth_deg(Point center, Point p) { return bearing_deg(center, p); }

double angular_extent(double z_s, double z_e, double r) {
  if (r == 0.0) throw std::invalid_argument("angular_extent: zero radius");
  const double dir = r > 0.0 ? 1.0 : -1.0;
  double a = std::fmod((z_e - z_s) * dir * kDegToRad, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi - kSweepSnap) a = 0.0;
  return a;
}

double geometric_arc_length(const ArcSegment& arc) {
  const double alpha = angular_extent(azimuth_deg(arc.center, arc.start), azimuth_deg(arc.center, arc.end), arc.radius);
  return std::abs(alpha * arc.radius);
}

LateralPacket predict_lateral(const FlightPlan& plan, const DefectConfig& cfg) {
  cfg.validate();
  const auto& wp = plan.waypoints;
  const std::size_t n = wp.size();
  if (n < 2) throw std::invalid_argument("predict_lateral: a flight plan needs at least 2 waypoints");

  std::vector<double> length(n - 1), course(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    length[i] = distance(wp[i], wp[i + 1]);
    // A zero-length leg keeps the previous course.
    course[i] = length[i] > 0.0 ? bearing_deg(wp[i], wp[i + 1]) : (i > 0 ? course[i - 1] : 0.0);
  }

  LateralPacket packet;
  Point cursor = wp.front();
  auto push_straight = [&](Point to) {
    if (distance(cursor, to) > kMinStraight) packet.segments.push_back(StraightSegment{cursor, to});
    cursor = to;
  };

  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double dpsi = heading_change(course[i - 1], course[i]);
    if (std::abs(dpsi) < kMinTurnDeg) continue;

    const Wind wind = i < plan.winds.size() ? plan.winds[i] : Wind{};
    const double along = -wind.speed * std::cos((wind.dir - course[i - 1]) * kDegToRad);
    const double ground_speed = std::max(cfg.airspeed + along, kMinGroundSpeed);
    const double nominal = turn_radius(ground_speed, cfg.bank_angle);

    // The first and last legs have no turn at their far end.
    const double avail_in = i == 1 ? length[i - 1] : 0.5 * length[i - 1];
    const double avail_out = i + 2 == n ? length[i] : 0.5 * length[i];
    const double available = std::min(avail_in, avail_out);

    const double heading = std::abs(dpsi) * kDegToRad;
    const double tan_half = std::tan(0.5 * heading);

    double radius = nominal;
    double sweep = heading;
    bool feasible = true;
    if (nominal * tan_half > available) {
      const double fitted = available / tan_half;
      if (fitted >= cfg.min_radius) {
        radius = fitted;
      } else {
        radius = cfg.min_radius;
        sweep = 2.0 * std::atan(available / cfg.min_radius);
        feasible = false;
      }
    }
    const double anticipation = feasible ? radius * tan_half : available;

    const double dir = dpsi > 0.0 ? 1.0 : -1.0;
    const double c_in = course[i - 1] * kDegToRad;
    const Point u_in{std::sin(c_in), std::cos(c_in)};
    const Point right_normal{u_in.y, -u_in.x};

    ArcSegment arc;
    arc.radius = dir * radius;
    arc.start = wp[i] - anticipation * u_in;
    arc.center = arc.start + (dir * radius) * right_normal;
    const double z_s = azimuth_deg(arc.center, arc.start);
    arc.end = sweep > 0.0 ? on_circle(arc.center, radius, z_s + dir * sweep / kDegToRad) : arc.start;

    if (!feasible && cfg.enabled) {
      arc.reported_beta = radius * heading;  // full heading change, not the clamped sweep
    } else {
      arc.reported_beta = geometric_arc_length(arc);
    }

    push_straight(arc.start);
    packet.segments.push_back(arc);
    cursor = arc.end;
  }
  push_straight(wp.back());
  return packet;
}

double arc_discrepancy(const LateralPacket& packet) {
  double worst = 0.0;
  for (const auto& seg : packet.segments) {
    if (const auto* arc = std::get_if<ArcSegment>(&seg))
      worst = std::max(worst, std::abs(arc->reported_beta - geometric_arc_length(*arc)));
  }
  return worst * kFeetPerNmi;
}

double miss_distance(double maxdiff_ft, double h_ft, double rho) {
  if (maxdiff_ft <= 0.0) return kNoDiscrepancyMiss;
  double d = rho * std::log(h_ft / maxdiff_ft);
  // h / maxdiff can round to 1 just below the threshold.
  if (maxdiff_ft < h_ft && d <= 0.0) d = std::numeric_limits<double>::denorm_min();
  if (maxdiff_ft >= h_ft && d > 0.0) d = 0.0;
  return d;
}

bool is_event(double maxdiff_ft, double h_ft) { return maxdiff_ft >= h_ft; }

void write_packet(std::ostream& out, const LateralPacket& packet) {
  for (const auto& seg : packet.segments) {
    if (const auto* s = std::get_if<StraightSegment>(&seg)) {
      out << "S " << fmt9(s->start.x) << ' ' << fmt9(s->start.y) << ' ' << fmt9(s->end.x) << ' ' << fmt9(s->end.y)
          << '\n';
    } else {
      const auto& a = std::get<ArcSegment>(seg);
      out << "A " << fmt9(a.center.x) << ' ' << fmt9(a.center.y) << ' ' << fmt9(a.radius) << ' ' << fmt9(a.start.x)
          << ' ' << fmt9(a.start.y) << ' ' << fmt9(a.end.x) << ' ' << fmt9(a.end.y) << ' ' << fmt9(a.reported_beta)
          << '\n';
    }
  }
}

std::string format_packet(const LateralPacket& packet) {
  std::ostringstream out;
  write_packet(out, packet);
  return out.str();
}

LateralPacket parse_packet(std::istream& in) {
  LateralPacket packet;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    char tag = 0;
    ls >> tag;
    bool ok = false;
    if (tag == 'S') {
      StraightSegment s;
      ok = static_cast<bool>(ls >> s.start.x >> s.start.y >> s.end.x >> s.end.y);
      packet.segments.push_back(s);
    } else if (tag == 'A') {
      ArcSegment a;
      ok = static_cast<bool>(ls >> a.center.x >> a.center.y >> a.radius >> a.start.x >> a.start.y >> a.end.x >>
                             a.end.y >> a.reported_beta);
      packet.segments.push_back(a);
    }
    if (!ok) throw std::invalid_argument("malformed packet line " + std::to_string(lineno));
  }
  return packet;
}

TrajectorySimulation::TrajectorySimulation(TrajectorySimConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.env.validate();
  cfg_.defect.validate();
  if (!(cfg_.threshold_ft > 0.0) || !(cfg_.rho > 0.0)) throw std::invalid_argument("threshold and rho must be positive");
  initialize();
}

void TrajectorySimulation::initialize() {
  disturbances_.clear();
  plan_ = FlightPlan{cfg_.origin, {}, {}};
  packet_ = LateralPacket{};
  logp_ = 0.0;
  maxdiff_ = 0.0;
  miss_ = 0.0;
  event_ = false;
  terminal_ = false;
}

void TrajectorySimulation::set_sampling(std::vector<EnvDistribution> sampling) {
  for (const auto& d : sampling) d.validate();
  sampling_ = std::move(sampling);
}

void TrajectorySimulation::execute(const SeedPath& path) {
  disturbances_ = sample_path(path, cfg_.env, sampling_);
  plan_ = build_flight_plan(disturbances_, path.origin);
  logp_ = path_log_likelihood(disturbances_, cfg_.env);
  terminal_ = path.size() >= cfg_.max_depth;
  run_predictor();
}

EvalResult TrajectorySimulation::evaluate_plan(const FlightPlan& plan) {
  count_evaluation();
  disturbances_.clear();
  plan_ = plan;
  logp_ = std::numeric_limits<double>::quiet_NaN();
  terminal_ = true;
  run_predictor();
  return {logp_, event_, miss_, terminal_};
}

void TrajectorySimulation::run_predictor() {
  packet_ = predict_lateral(plan_, cfg_.defect);
  maxdiff_ = arc_discrepancy(packet_);
  miss_ = ast::miss_distance(maxdiff_, cfg_.threshold_ft, cfg_.rho);
  event_ = ast::is_event(maxdiff_, cfg_.threshold_ft);
}

}  // namespace ast
