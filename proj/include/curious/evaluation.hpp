#ifndef CURIOUS_EVALUATION_HPP_
#define CURIOUS_EVALUATION_HPP_

#include <functional>
#include <random>
#include <vector>

#include "curious/agent.hpp"

namespace curious {

struct EvaluationResult {
  // Per module; NaN for modules that were not evaluated.
  std::vector<double> success_rate;
  std::vector<int> attempts;
  // Fraction of successful rollouts over all evaluated goals.
  double average = 0.0;
  int rollouts = 0;
  // 95% half-width bound of a Bernoulli estimate from `rollouts` samples.
  double half_width = 0.0;
};

// 1.96 * sqrt(0.25 / n).
double SuccessHalfWidthBound(int n_rollouts);

using PolicyRouter = std::function<const LearnerState&(int module)>;

// Offline evaluation: achievable modules and goals drawn uniformly, noise-free
// rollouts on fresh worlds, success judged at the final step. Nothing is
// stored anywhere.
EvaluationResult Evaluate(const PolicyRouter& policy, const ModuleSet& modules,
                          const WorldConfig& world, int n_rollouts,
                          std::mt19937_64& rng);

// Holistic-goal evaluation: success needs every achievable slice at once.
// Per-module rates report how often each slice alone was satisfied.
EvaluationResult EvaluateFlat(const LearnerState& learner,
                              const ModuleSet& modules, const WorldConfig& world,
                              int n_rollouts, std::mt19937_64& rng);

// Dispatches on the agent's variant.
EvaluationResult EvaluateAgent(const Agent& agent, int n_rollouts,
                               std::mt19937_64& rng);

}  // namespace curious

#endif  // CURIOUS_EVALUATION_HPP_
