#include "curious/evaluation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace curious {

double SuccessHalfWidthBound(int n_rollouts) {
  return 1.96 * std::sqrt(0.25 / n_rollouts);
}

namespace {

void Finish(EvaluationResult& result, int successes) {
  for (std::size_t i = 0; i < result.success_rate.size(); ++i) {
    if (result.attempts[i] > 0) {
      result.success_rate[i] /= result.attempts[i];
    } else {
      result.success_rate[i] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  result.average = double(successes) / result.rollouts;
  result.half_width = SuccessHalfWidthBound(result.rollouts);
}

}  // namespace

EvaluationResult Evaluate(const PolicyRouter& policy, const ModuleSet& modules,
                          const WorldConfig& world, int n_rollouts,
                          std::mt19937_64& rng) {
  if (n_rollouts < 1) throw std::invalid_argument("need at least one rollout");
  const std::vector<int> achievable = modules.AchievableModules();
  if (achievable.empty()) throw std::invalid_argument("no achievable module");
  EvaluationResult result;
  result.success_rate.assign(modules.size(), 0.0);
  result.attempts.assign(modules.size(), 0);
  result.rollouts = n_rollouts;
  std::uniform_int_distribution<std::size_t> pick(0, achievable.size() - 1);
  int successes = 0;
  for (int r = 0; r < n_rollouts; ++r) {
    const int module = achievable[pick(rng)];
    const std::uint64_t world_seed = rng();
    const RolloutResult rollout = RunSampledRollout(
        world, policy(module), modules, module, true, world_seed, rng);
    const bool success = rollout.success.value_or(false);
    ++result.attempts[module];
    result.success_rate[module] += success ? 1.0 : 0.0;
    successes += success ? 1 : 0;
  }
  Finish(result, successes);
  return result;
}

EvaluationResult EvaluateFlat(const LearnerState& learner,
                              const ModuleSet& modules, const WorldConfig& world,
                              int n_rollouts, std::mt19937_64& rng) {
  if (n_rollouts < 1) throw std::invalid_argument("need at least one rollout");
  EvaluationResult result;
  result.success_rate.assign(modules.size(), 0.0);
  result.attempts.assign(modules.size(), 0);
  result.rollouts = n_rollouts;
  int successes = 0;
  for (int r = 0; r < n_rollouts; ++r) {
    const std::uint64_t world_seed = rng();
    const RolloutResult rollout =
        HerFlatEpisode(world, learner, modules, false, world_seed, rng);
    const Episode& episode = rollout.episode;
    const Observation& last = episode.observations.back();
    for (int i = 0; i < modules.size(); ++i) {
      const ModuleSpec& spec = modules.spec(i);
      if (!spec.achievable) continue;
      const Vector goal = episode.goal.segment(modules.offset(i), spec.goal_dim);
      ++result.attempts[i];
      if (InternalReward(spec, goal, ExtractOutcome(last, spec),
                         GripperPosition(last)) == 0.0) {
        result.success_rate[i] += 1.0;
      }
    }
    successes += rollout.success.value_or(false) ? 1 : 0;
  }
  Finish(result, successes);
  return result;
}

EvaluationResult EvaluateAgent(const Agent& agent, int n_rollouts,
                               std::mt19937_64& rng) {
  if (agent.config().variant.variant == Variant::kHerFlat) {
    return EvaluateFlat(agent.learner(0), agent.modules(), agent.config().world,
                        n_rollouts, rng);
  }
  const PolicyRouter router = [&agent](int module) -> const LearnerState& {
    return agent.PolicyFor(module);
  };
  return Evaluate(router, agent.modules(), agent.config().world, n_rollouts, rng);
}

}  // namespace curious
