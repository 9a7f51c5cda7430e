#include "ast/mcts.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ast {

void SearchConfig::validate() const {
  if (episodes == 0) throw std::invalid_argument("episodes must be positive");
  if (max_depth == 0) throw std::invalid_argument("max depth must be positive");
  if (!(pw_alpha > 0.0 && pw_alpha < 1.0)) throw std::invalid_argument("widening alpha must be in (0, 1)");
  if (!(pw_k >= 1.0)) throw std::invalid_argument("widening k must be >= 1");
  if (!(exploration_c >= 0.0)) throw std::invalid_argument("exploration constant must be non-negative");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("discount must be in (0, 1]");
}

void BestActionStore::update(const std::vector<std::uint64_t>& seeds, double episode_return) {
  for (std::size_t depth = 0; depth < seeds.size(); ++depth) {
    auto it = entries_.find(depth);
    if (it == entries_.end()) {
      entries_.emplace(depth, Entry{Seed{seeds[depth]}, episode_return});
    } else if (episode_return > it->second.value) {
      it->second = Entry{Seed{seeds[depth]}, episode_return};
    }
  }
}

std::optional<BestActionStore::Entry> BestActionStore::at(std::size_t depth) const {
  const auto it = entries_.find(depth);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void update_best_action(BestActionStore& store, const EpisodeRecord& episode) {
  store.update(episode.seeds, episode.reward);
}

double rollout(AstMdp& mdp, const AstState& s, std::size_t depth_remaining, std::mt19937_64& rng,
               BestActionStore* store, RolloutStats* stats) {
  const std::size_t feed_depth = mdp.max_depth() / 2;
  AstState state = s;
  // Intermediate rewards are zero, so the loop only collects seeds.
  for (std::size_t d = depth_remaining; d > 0; --d) {
    std::optional<BestActionStore::Entry> best;
    if (store && d == feed_depth) best = store->at(state.depth());
    Seed seed;
    if (best) {
      seed = best->seed;
      if (stats) ++stats->feeds;
    } else {
      seed = Seed{rng()};
    }
    state = mdp.step(state, seed);
  }
  const EpisodeRecord rec = mdp.finish_episode(state);
  if (store) update_best_action(*store, rec);
  // The terminal reward arrives on the last of `depth_remaining` transitions.
  const double gamma = mdp.reward_config().gamma;
  const double discount = depth_remaining > 0 ? std::pow(gamma, static_cast<double>(depth_remaining - 1)) : 1.0;
  return discount * rec.reward;
}

MctsSearch::MctsSearch(AstMdp& mdp, SearchConfig cfg, std::uint64_t master_seed)
    : mdp_(mdp), cfg_(cfg), rng_(master_seed) {
  cfg_.validate();
  if (cfg_.max_depth != mdp_.max_depth()) throw std::invalid_argument("search depth must match the MDP depth");
  root_ = std::make_unique<StateNode>();
  root_->state = mdp_.initial_state();
}

SearchResult MctsSearch::run() {
  SearchResult result;
  result.episodes.reserve(cfg_.episodes);
  const std::size_t first = mdp_.episodes();
  mdp_.set_sink([&](const EpisodeRecord& r) { result.episodes.push_back(r); });
  for (std::size_t i = 0; i < cfg_.episodes; ++i) simulate(*root_, cfg_.max_depth - root_->state.depth());
  mdp_.set_sink(nullptr);
  if (mdp_.episodes() - first != cfg_.episodes) throw std::logic_error("search did not evaluate once per episode");
  result.best_root_action = best_root_action();
  return result;
}

double MctsSearch::simulate(StateNode& node, std::size_t depth_remaining) {
  if (depth_remaining == 0) {
    // The episodic reward only exists once the full path is evaluated.
    if (mdp_.is_terminal(node.state)) return rollout(mdp_, node.state, 0, rng_, &store_, &stats_);
    return 0.0;
  }
  if (!node.in_tree) {
    node.in_tree = true;
    node.visits = 0;
    return rollout(mdp_, node.state, depth_remaining, rng_, &store_, &stats_);
  }
  ++node.visits;
  ActionNode& action = select_action(node);
  auto [next, r] = deterministic_step(action, node.state);
  if (!action.child) {
    action.child = std::make_unique<StateNode>();
    action.child->state = std::move(next);
  }
  const double q = r + cfg_.gamma * simulate(*action.child, depth_remaining - 1);
  ++action.visits;
  action.q += (q - action.q) / static_cast<double>(action.visits);
  return q;
}

double MctsSearch::ucb_score(const StateNode& node, const ActionNode& action) const {
  if (action.visits == 0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(std::max<std::size_t>(node.visits, 1));
  return action.q + cfg_.exploration_c * std::sqrt(std::log(n) / static_cast<double>(action.visits));
}

ActionNode& MctsSearch::select_action(StateNode& node) {
  const double bound = cfg_.pw_k * std::pow(static_cast<double>(node.visits), cfg_.pw_alpha);
  if (static_cast<double>(node.actions.size()) <= bound) {
    Seed seed{rng_()};
    while (node.actions.contains(seed)) seed = Seed{rng_()};
    auto [it, inserted] = node.actions.try_emplace(seed);
    it->second.seed = seed;
    return it->second;
  }
  // std::map iterates seeds in ascending order, so strict > keeps the lowest on ties.
  ActionNode* best = nullptr;
  double best_score = -std::numeric_limits<double>::infinity();
  for (auto& [seed, action] : node.actions) {
    const double score = ucb_score(node, action);
    if (!best || score > best_score) {
      best = &action;
      best_score = score;
    }
  }
  return *best;
}

std::pair<AstState, double> MctsSearch::deterministic_step(ActionNode& action, const AstState& parent) {
  if (!action.next) {
    action.next = mdp_.step(parent, action.seed);
    action.step_reward = 0.0;
    action.next_visits = 1;
    ++cache_size_;
  } else {
    ++action.next_visits;
  }
  return {*action.next, action.step_reward};
}

std::optional<Seed> MctsSearch::best_root_action() const {
  std::optional<Seed> best;
  double best_q = -std::numeric_limits<double>::infinity();
  for (const auto& [seed, action] : root_->actions) {
    if (action.visits == 0) continue;
    if (!best || action.q > best_q) {
      best = seed;
      best_q = action.q;
    }
  }
  return best;
}

}  // namespace ast
