#include "ast/astmdp.hpp"

#include <stdexcept>

namespace ast {

void RewardConfig::validate() const {
  if (!(event_bonus >= 0.0)) throw std::invalid_argument("event bonus must be non-negative");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("discount must be in (0, 1]");
}

double reward_standard(double p_log, bool e, double d, bool tau, const RewardConfig& cfg) {
  if (tau && e) return cfg.event_bonus;
  if (tau) return -d;
  return p_log;
}

double reward_episodic(double p_log, bool e, double d, bool tau, const RewardConfig& cfg) {
  if (tau && e) return (p_log - d) * cfg.event_bonus;
  if (tau) return p_log - d;
  return 0.0;
}

AstState step(const AstState& state, Seed seed, std::size_t max_depth) {
  if (state.depth() >= max_depth) throw std::out_of_range("step: state is already at maximum depth");
  AstState next = state;
  next.path.seeds.push_back(seed);
  return next;
}

AstMdp::AstMdp(Simulation& sim, EnvDistribution dist, RewardConfig reward, std::size_t max_depth, Point origin)
    : sim_(sim), dist_(dist), reward_(reward), max_depth_(max_depth), origin_(origin) {
  dist_.validate();
  reward_.validate();
  if (max_depth_ == 0) throw std::invalid_argument("maximum depth must be positive");
}

AstState AstMdp::initial_state() const {
  AstState s;
  s.path.origin = origin_;
  return s;
}

EvalResult AstMdp::evaluate_terminal(const AstState& s) {
  if (s.depth() != max_depth_) throw std::logic_error("evaluate_terminal: state is not at maximum depth");
  return sim_.evaluate(s.path);
}

double AstMdp::episode_return(const AstState& s, const EvalResult& r) const {
  if (reward_.mode == RewardMode::kEpisodic) return reward_episodic(r.logp, r.event, r.miss, r.terminal, reward_);

  // Standard mode (undiscounted): every transition but the last pays its own
  // log-likelihood, the last one pays the terminal case.
  double last = 0.0;
  if (!s.path.empty()) last = log_density(sample_disturbance(s.path.seeds.back(), dist_), dist_);
  return reward_standard(r.logp - last, false, r.miss, false, reward_) +
         reward_standard(last, r.event, r.miss, r.terminal, reward_);
}

EpisodeRecord AstMdp::finish_episode(const AstState& s) {
  sim_.initialize();
  const EvalResult r = evaluate_terminal(s);
  EpisodeRecord rec;
  rec.index = ++episodes_;
  rec.seeds.reserve(s.depth());
  for (const auto& seed : s.path.seeds) rec.seeds.push_back(seed.value);
  rec.logp = r.logp;
  rec.miss = r.miss;
  rec.event = r.event;
  rec.reward = episode_return(s, r);
  if (sink_) sink_(rec);
  return rec;
}

}  // namespace ast
