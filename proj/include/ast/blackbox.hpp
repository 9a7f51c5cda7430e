#pragma once

#include <cstdint>

#include "ast/environment.hpp"

namespace ast {

/// What the reward function sees after a system evaluation: <p, e, d, tau>.
/// `logp` is a natural-log likelihood of the whole disturbance path.
struct EvalResult {
  double logp = 0.0;
  bool event = false;
  double miss = 0.0;
  bool terminal = false;

  friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

/// Contract for a system under test wrapped in its simulation.
///
/// Implementations provide the subroutines; `evaluate` composes them and
/// keeps the evaluation count every search algorithm is budgeted against.
/// Not thread-safe; use one instance per thread.
class Simulation {
 public:
  virtual ~Simulation() = default;

  /// Resets the simulation and the system to the constructed state.
  virtual void initialize() = 0;

  /// Runs the system on the plan reached by `path` and returns <p, e, d, tau>.
  /// Throws std::invalid_argument on an empty path.
  EvalResult evaluate(const SeedPath& path);

  virtual double transition() const = 0;
  virtual double miss_distance() const = 0;
  virtual bool is_event() const = 0;
  virtual bool is_terminal() const = 0;

  std::uint64_t evaluations() const { return evaluations_; }

 protected:
  /// Executes the system for `path`; called once per `evaluate`.
  virtual void execute(const SeedPath& path) = 0;

  /// For evaluations that do not go through a seed path.
  void count_evaluation() { ++evaluations_; }

 private:
  std::uint64_t evaluations_ = 0;
};

}  // namespace ast
