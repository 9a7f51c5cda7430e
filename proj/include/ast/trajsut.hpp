#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ast/blackbox.hpp"
#include "ast/environment.hpp"

namespace ast {

inline constexpr double kFeetPerNmi = 6076.12;
inline constexpr double kMetersPerNmi = 1852.0;
inline constexpr double kMpsPerKnot = 0.514444;
inline constexpr double kGravity = 9.80665;
inline constexpr double kMinGroundSpeed = 60.0;      // kts
inline constexpr double kNoDiscrepancyMiss = 1.0e6;  // miss distance when nothing differs

struct StraightSegment {
  Point start;
  Point end;
};

/// Circular turn arc. `radius` is signed: negative for left turns.
struct ArcSegment {
  Point center;
  double radius = 0.0;
  Point start;
  Point end;
  double reported_beta = 0.0;  // arc length reported by the predictor, nmi
};

using Segment = std::variant<StraightSegment, ArcSegment>;

struct LateralPacket {
  std::vector<Segment> segments;

  std::size_t arc_count() const;
};

Point segment_start(const Segment& s);
Point segment_end(const Segment& s);

/// Predictor settings, including the injected arc-length defect.
///
/// Turns that do not fit their legs at the nominal radius are tightened down
/// to `min_radius`. Below that the turn is infeasible: the sweep is clamped
/// so the arc fits, and with `enabled` set the reported arc length is still
/// the one for the full heading change.
struct DefectConfig {
  bool enabled = true;
  double bank_angle = 25.0;  // degrees, (0, 45]
  double airspeed = 450.0;   // kts
  double min_radius = 0.05;  // nmi

  void validate() const;
};

/// Coordinated-turn radius in nmi (always positive).
double turn_radius(double ground_speed_kts, double bank_angle_deg);

/// Azimuth from `center` to `p`, degrees clockwise from north.
double azimuth_deg(Point center, Point p);

/// Sweep angle in radians from azimuth `z_s` to `z_e` (degrees) in the turn
/// direction given by the sign of `r`, normalized to [0, 2*pi).
double angular_extent(double z_s, double z_e, double r);

/// Geometric arc length |alpha * r| of an arc, nmi.
double geometric_arc_length(const ArcSegment& arc);

LateralPacket predict_lateral(const FlightPlan& plan, const DefectConfig& cfg);

/// Largest |beta - alpha*r| over the packet's arcs, in feet; 0 without arcs.
double arc_discrepancy(const LateralPacket& packet);

/// rho * ln(h / maxdiff), with maxdiff == 0 mapped to kNoDiscrepancyMiss.
/// Non-positive exactly when is_event(maxdiff, h).
double miss_distance(double maxdiff_ft, double h_ft = 10.0, double rho = 100.0);
bool is_event(double maxdiff_ft, double h_ft = 10.0);

/// Text form: one segment per line, `S x1 y1 x2 y2` or
/// `A cx cy r sx sy ex ey beta`, 9 significant digits.
void write_packet(std::ostream& out, const LateralPacket& packet);
std::string format_packet(const LateralPacket& packet);
LateralPacket parse_packet(std::istream& in);

struct TrajectorySimConfig {
  EnvDistribution env;
  Point origin;
  DefectConfig defect;
  std::size_t max_depth = 12;
  double threshold_ft = 10.0;
  double rho = 100.0;
};

/// The reference trajectory predictor behind the black-box contract.
class TrajectorySimulation final : public Simulation {
 public:
  explicit TrajectorySimulation(TrajectorySimConfig cfg);

  void initialize() override;
  double transition() const override { return logp_; }
  double miss_distance() const override { return miss_; }
  bool is_event() const override { return event_; }
  bool is_terminal() const override { return terminal_; }

  /// Evaluates a plan that does not come from the disturbance model (route
  /// database entries). `transition()` is NaN afterwards.
  EvalResult evaluate_plan(const FlightPlan& plan);

  /// Per-index sampling distributions used in place of the true environment
  /// when turning seeds into disturbances. Likelihoods stay under the true
  /// environment. Empty restores plain sampling.
  void set_sampling(std::vector<EnvDistribution> sampling);
  const std::vector<EnvDistribution>& sampling() const { return sampling_; }

  const TrajectorySimConfig& config() const { return cfg_; }
  void set_defect_enabled(bool on) { cfg_.defect.enabled = on; }

  const FlightPlan& plan() const { return plan_; }
  const LateralPacket& packet() const { return packet_; }
  const std::vector<Disturbance>& disturbances() const { return disturbances_; }
  double max_discrepancy_ft() const { return maxdiff_; }

 protected:
  void execute(const SeedPath& path) override;

 private:
  void run_predictor();

  TrajectorySimConfig cfg_;
  std::vector<EnvDistribution> sampling_;
  std::vector<Disturbance> disturbances_;
  FlightPlan plan_;
  LateralPacket packet_;
  double logp_ = 0.0;
  double maxdiff_ = 0.0;
  double miss_ = 0.0;
  bool event_ = false;
  bool terminal_ = false;
};

}  // namespace ast
