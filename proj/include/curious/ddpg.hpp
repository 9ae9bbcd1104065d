#ifndef CURIOUS_DDPG_HPP_
#define CURIOUS_DDPG_HPP_

#include <random>
#include <span>
#include <vector>

#include "curious/modules.hpp"
#include "curious/neural.hpp"
#include "curious/replay.hpp"
#include "curious/world.hpp"

namespace curious {

inline constexpr int kActionDim = 4;

struct LearnerConfig {
  std::vector<int> hidden{64, 64};
  double gamma = 0.98;
  // Target tracking: target <- polyak * target + (1 - polyak) * online.
  double polyak = 0.95;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double noise_sigma = 0.2;
  double random_action_prob = 0.3;
  // Penalty on squared actor outputs in the actor loss. 0 disables it.
  double action_l2 = 0.0;
  // Map policy inputs to roughly unit range before they enter the networks.
  bool normalize_inputs = true;
};

// Fixed affine map from policy inputs to network inputs. Observation slots
// are centered on the workspace and scaled by its half extent; a goal slice
// uses the map of its outcome slots, but only while its descriptor entry is
// set, so masked slices stay exactly zero. Empty means identity.
struct InputNormalizer {
  struct GoalSlice {
    int offset = 0;      // first goal slot in the policy input
    int outcome = 0;     // matching observation slot
    int dim = 0;
    int descriptor = 0;  // descriptor slot in the policy input
  };
  Vector shift;  // observation part only
  Vector scale;
  std::vector<GoalSlice> goals;

  bool empty() const { return shift.size() == 0; }
  Matrix Apply(const Matrix& inputs) const;
};

InputNormalizer MakeInputNormalizer(const WorldConfig& world,
                                    const ModuleSet& modules);

// Actor, critic, their target copies and optimizers.
struct LearnerState {
  LearnerConfig config;
  NetworkParams actor;
  NetworkParams critic;
  NetworkParams actor_target;
  NetworkParams critic_target;
  AdamState actor_opt;
  AdamState critic_opt;
  InputNormalizer normalizer;

  int input_dim() const { return actor.input_dim(); }
};

LearnerState MakeLearner(int policy_input_dim, const LearnerConfig& config,
                         std::mt19937_64& rng);

// Columns are samples. Critic inputs are [policy input; action].
struct LearnerBatch {
  Matrix inputs;
  Matrix actions;
  Matrix next_inputs;
  Vector rewards;

  int size() const { return static_cast<int>(rewards.size()); }
};

// Actor output; when exploring, either a uniform random action (with the
// configured probability) or the output plus Gaussian noise, clipped.
Action BehavioralAction(const LearnerState& learner, const Vector& policy_input,
                        std::mt19937_64& rng, bool explore);

// r + gamma * Q'(s', pi'(s')), clipped to [-1 / (1 - gamma), 0].
Vector CriticTargets(const LearnerState& learner, const LearnerBatch& batch);

// Q(s, a) for every column of already normalized inputs.
Vector CriticValues(const NetworkParams& critic, const Matrix& inputs,
                    const Matrix& actions);

struct TrainMetrics {
  double critic_loss = 0.0;
  double mean_q = 0.0;
  double actor_objective = 0.0;
};

// Gradient of the actor loss -mean Q(s, pi(s)) (+ the optional action
// penalty) with respect to the actor parameters, critic held fixed.
NetworkParams ActorGradient(const LearnerState& learner, const Matrix& inputs,
                            double* objective = nullptr);

// One critic step on the mean squared Bellman error, one actor step, then
// Polyak tracking of both targets. Throws NumericError on a non-finite loss.
TrainMetrics TrainStep(LearnerState& learner, const LearnerBatch& batch);

// Builds network inputs from relabelled samples.
Vector EncodeSampleInput(const Observation& obs, const TrainingSample& sample,
                         const ModuleSet& modules);
LearnerBatch EncodeBatch(std::span<const TrainingSample> samples,
                         const ModuleSet& modules);

// Holistic goal input: [obs, full goal, all-ones descriptor].
Vector EncodeFlatInput(const Observation& obs, const Vector& flat_goal,
                       const ModuleSet& modules);

}  // namespace curious

#endif  // CURIOUS_DDPG_HPP_
