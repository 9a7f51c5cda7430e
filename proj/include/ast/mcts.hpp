#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "ast/astmdp.hpp"

namespace ast {

struct SearchConfig {
  std::size_t episodes = 5000;
  std::size_t max_depth = 12;
  double exploration_c = 10.0;
  double pw_k = 10.0;
  double pw_alpha = 0.3;
  double gamma = 1.0;

  void validate() const;
};

struct StateNode;

struct ActionNode {
  Seed seed;
  std::size_t visits = 0;  // N(s, a)
  double q = 0.0;          // Q(s, a)
  std::optional<AstState> next;    // cached deterministic successor
  double step_reward = 0.0;        // cached transition reward
  std::size_t next_visits = 0;     // N(s, a, s')
  std::unique_ptr<StateNode> child;
};

struct StateNode {
  AstState state;
  bool in_tree = false;
  std::size_t visits = 0;  // N(s)
  std::map<Seed, ActionNode> actions;
};

/// Best episode seen per absolute path depth.
class BestActionStore {
 public:
  struct Entry {
    Seed seed;
    double value = 0.0;
  };

  /// Replaces the entry at every depth of `seeds` whose stored value is lower.
  void update(const std::vector<std::uint64_t>& seeds, double episode_return);
  std::optional<Entry> at(std::size_t depth) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::map<std::size_t, Entry> entries_;
};

void update_best_action(BestActionStore& store, const EpisodeRecord& episode);

struct RolloutStats {
  std::size_t feeds = 0;  // rollouts that replayed a stored best action
};

/// Random-seed rollout that evaluates the system once at depth 0. When
/// `store` is given, the stored best action is replayed at remaining depth
/// floor(max_depth / 2) and the store is updated with the finished episode.
double rollout(AstMdp& mdp, const AstState& s, std::size_t depth_remaining, std::mt19937_64& rng,
               BestActionStore* store, RolloutStats* stats = nullptr);

struct SearchResult {
  std::optional<Seed> best_root_action;
  std::vector<EpisodeRecord> episodes;
};

/// Monte Carlo tree search with progressive widening over seed actions,
/// one deterministic successor per action, and end-of-rollout evaluation.
/// Single-threaded.
class MctsSearch {
 public:
  MctsSearch(AstMdp& mdp, SearchConfig cfg, std::uint64_t master_seed);

  /// Runs `cfg.episodes` simulations from the root.
  SearchResult run();

  /// One simulation from `node` with `depth_remaining` levels left.
  double simulate(StateNode& node, std::size_t depth_remaining);

  /// Widens `node` with a fresh seed when |A(s)| <= k N(s)^alpha, otherwise
  /// picks the UCB argmax (ties to the lowest seed).
  ActionNode& select_action(StateNode& node);

  /// Successor of `parent` under `action`; generated once and cached.
  std::pair<AstState, double> deterministic_step(ActionNode& action, const AstState& parent);

  /// Q(s,a) + c sqrt(ln N(s) / N(s,a)); unvisited actions score +inf.
  double ucb_score(const StateNode& node, const ActionNode& action) const;

  StateNode& root() { return *root_; }
  const StateNode& root() const { return *root_; }
  const BestActionStore& best_actions() const { return store_; }
  const RolloutStats& rollout_stats() const { return stats_; }
  std::size_t cache_size() const { return cache_size_; }
  const SearchConfig& config() const { return cfg_; }

  /// argmax_a Q(root, a); ties to the lowest seed.
  std::optional<Seed> best_root_action() const;

 private:
  AstMdp& mdp_;
  SearchConfig cfg_;
  std::mt19937_64 rng_;
  std::unique_ptr<StateNode> root_;
  BestActionStore store_;
  RolloutStats stats_;
  std::size_t cache_size_ = 0;
};

/// Visits every state node (pre-order).
template <typename F>
void for_each_node(const StateNode& node, F&& f) {
  f(node);
  for (const auto& [seed, action] : node.actions) {
    if (action.child) for_each_node(*action.child, f);
  }
}

}  // namespace ast
