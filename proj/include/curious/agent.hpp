#ifndef CURIOUS_AGENT_HPP_
#define CURIOUS_AGENT_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "curious/ddpg.hpp"
#include "curious/lp_tracker.hpp"
#include "curious/modules.hpp"
#include "curious/replay.hpp"
#include "curious/world.hpp"

namespace curious {

enum class Variant {
  kCurious,      // LP-driven module selection and replay
  kMuvfaRandom,  // same architecture, uniform module selection and replay
  kHerFlat,      // holistic goal space, no module masking
  kMgMe,         // one multi-goal expert per module
};

const char* ToString(Variant variant);
Variant ParseVariant(const std::string& name);

struct VariantConfig {
  Variant variant = Variant::kCurious;
  // Probability that a rollout is a noise-free self-evaluation.
  double p_eval = 0.1;
  double epsilon = 0.4;
  int lp_window = 30;
  int actors = 4;
  int episodes_per_actor = 50;
  int minibatch = 64;
  int updates_per_episode = 1;
  double p_future = kDefaultHindsightProbability;
  std::size_t buffer_capacity = 1000;
  // Collect actor rollouts on separate threads. Results do not depend on it.
  bool threads = false;

  void Validate() const;
};

struct AgentConfig {
  VariantConfig variant;
  LearnerConfig learner;
  WorldConfig world;
  // Module names; empty selects the standard set for the world.
  std::vector<std::string> modules;
  std::uint64_t seed = 0;
};

ModuleSet BuildModules(const AgentConfig& config);

struct EpochReport {
  int epoch = 0;
  std::vector<double> competence;
  std::vector<double> progress;
  std::vector<double> probabilities;
  std::vector<long> evaluations;
  // Rollouts per targeted module this epoch (self-evaluations included).
  std::vector<int> module_draws;
  int episodes = 0;
  int self_evaluations = 0;
  int train_steps = 0;
  TrainMetrics metrics;  // averaged over the epoch's train steps
};

struct RolloutResult {
  Episode episode;
  std::optional<bool> success;  // set for noise-free rollouts
};

// Resets a fresh world from `world_seed` and runs one episode towards
// `assignment`. With `self_eval` actions are noise-free and success is judged
// at the final step.
RolloutResult RunRollout(const WorldConfig& world, const LearnerState& learner,
                         const ModuleSet& modules,
                         const GoalAssignment& assignment, bool self_eval,
                         std::uint64_t world_seed, std::mt19937_64& rng);

// Same, with the goal sampled for `module` from the reset observation.
RolloutResult RunSampledRollout(const WorldConfig& world,
                                const LearnerState& learner,
                                const ModuleSet& modules, int module,
                                bool self_eval, std::uint64_t world_seed,
                                std::mt19937_64& rng);

// Holistic-goal rollout: every slice gets a goal and the descriptor is all
// ones. Success (if noise-free) requires every achievable slice at once.
RolloutResult HerFlatEpisode(const WorldConfig& world,
                             const LearnerState& learner,
                             const ModuleSet& modules, bool explore,
                             std::uint64_t world_seed, std::mt19937_64& rng);

// Elementwise mean of actor, critic and both targets. Optimizer state is
// taken from the first learner.
LearnerState AverageLearners(std::span<const LearnerState> learners);

// Expert trained and used for data collection during `epoch`.
inline int MgMeSchedule(int epoch, int n_modules) { return epoch % n_modules; }

// Owns every piece of state of one run and advances it epoch by epoch.
class Agent {
 public:
  explicit Agent(AgentConfig config);

  EpochReport RunEpoch();

  const AgentConfig& config() const { return config_; }
  const ModuleSet& modules() const { return modules_; }
  const LpTracker& lp() const { return lp_; }
  int epoch() const { return epoch_; }
  int n_experts() const;
  // Buffers seen by one expert (all identical outside mg-me).
  const InterestBuffers& buffers(int expert = 0) const;
  // Policy used to act on `module` (its expert under mg-me).
  const LearnerState& PolicyFor(int module) const;
  const LearnerState& learner(int actor, int expert = 0) const;

  // Changes what the actors perceive from now on (sensor perturbation).
  void SetWorld(const WorldConfig& world);

  void SaveCheckpoint(std::ostream& out) const;
  static Agent LoadCheckpoint(std::istream& in);

 private:
  struct Collected {
    RolloutResult rollout;
    int module = -1;
    bool self_eval = false;
  };

  Collected Collect(int actor);
  void Train(int actor, TrainMetrics& sum, int& steps);
  std::vector<double> ReplayProbabilities() const;
  bool Warm(int expert) const;

  AgentConfig config_;
  ModuleSet modules_;
  LpTracker lp_;
  // learners_[actor][expert]
  std::vector<std::vector<LearnerState>> learners_;
  // One buffer set per expert.
  std::vector<InterestBuffers> buffers_;
  std::vector<std::mt19937_64> actor_rngs_;
  int epoch_ = 0;
};

}  // namespace curious

#endif  // CURIOUS_AGENT_HPP_
