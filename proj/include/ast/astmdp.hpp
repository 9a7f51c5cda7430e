#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "ast/blackbox.hpp"
#include "ast/environment.hpp"

namespace ast {

enum class RewardMode { kStandard, kEpisodic };

struct RewardConfig {
  double event_bonus = 100.0;  // R_E
  double gamma = 1.0;
  RewardMode mode = RewardMode::kEpisodic;

  static RewardConfig standard() { return {0.0, 1.0, RewardMode::kStandard}; }
  void validate() const;
};

/// R_E if tau and e; -d if tau and not e; log p otherwise.
double reward_standard(double p_log, bool e, double d, bool tau, const RewardConfig& cfg);
/// (log p - d) R_E if tau and e; log p - d if tau and not e; 0 otherwise.
double reward_episodic(double p_log, bool e, double d, bool tau, const RewardConfig& cfg);

/// Search state: every seed chosen so far.
struct AstState {
  SeedPath path;

  std::size_t depth() const { return path.size(); }
  friend bool operator==(const AstState&, const AstState&) = default;
};

/// One completed rollout. `index` is 1-based and follows evaluation order.
struct EpisodeRecord {
  std::size_t index = 0;
  std::vector<std::uint64_t> seeds;
  std::optional<double> logp;
  double miss = 0.0;
  bool event = false;
  double reward = 0.0;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

using EpisodeSink = std::function<void(const EpisodeRecord&)>;

/// Appends `seed` without touching the system. Throws std::out_of_range at
/// `max_depth`.
AstState step(const AstState& state, Seed seed, std::size_t max_depth);

/// The stress-testing MDP over seed actions with episodic evaluation.
class AstMdp {
 public:
  AstMdp(Simulation& sim, EnvDistribution dist, RewardConfig reward, std::size_t max_depth,
         Point origin = {});

  AstState initial_state() const;
  bool is_terminal(const AstState& s) const { return s.depth() >= max_depth_; }
  AstState step(const AstState& s, Seed seed) const { return ast::step(s, seed, max_depth_); }

  /// Evaluates the system on a full-depth state. Throws std::logic_error
  /// when the state is short of max depth.
  EvalResult evaluate_terminal(const AstState& s);

  /// Total undiscounted episode return for an evaluated terminal state.
  double episode_return(const AstState& s, const EvalResult& r) const;

  /// Evaluates `s`, numbers the episode, and hands the record to the sink.
  EpisodeRecord finish_episode(const AstState& s);

  void set_sink(EpisodeSink sink) { sink_ = std::move(sink); }

  Simulation& simulation() { return sim_; }
  const EnvDistribution& distribution() const { return dist_; }
  const RewardConfig& reward_config() const { return reward_; }
  std::size_t max_depth() const { return max_depth_; }
  std::size_t episodes() const { return episodes_; }

 private:
  Simulation& sim_;
  EnvDistribution dist_;
  RewardConfig reward_;
  std::size_t max_depth_;
  Point origin_;
  std::size_t episodes_ = 0;
  EpisodeSink sink_;
};

}  // namespace ast
