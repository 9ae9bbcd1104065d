#ifndef CURIOUS_REPLAY_HPP_
#define CURIOUS_REPLAY_HPP_

#include <deque>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "curious/modules.hpp"
#include "curious/world.hpp"

namespace curious {

class EmptyMemoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Probability that a replayed goal is replaced by a future achieved outcome.
inline constexpr double kDefaultHindsightProbability = 0.8;

// One rollout. observations[t] -> actions[t] -> observations[t + 1].
struct Episode {
  std::vector<Observation> observations;
  std::vector<Action> actions;
  // Module targeted at collection time; -1 for holistic (flat) goals.
  int module = -1;
  Vector goal;
  // outcomes[i][t]: outcome of module i in observations[t].
  std::vector<std::vector<Vector>> outcomes;
  // interest[i]: module i's outcome changed during the episode.
  std::vector<bool> interest;

  int length() const { return static_cast<int>(actions.size()); }
};

using EpisodePtr = std::shared_ptr<const Episode>;

// Fills in outcome trajectories and interest flags.
Episode MakeEpisode(std::vector<Observation> observations,
                    std::vector<Action> actions, int module, Vector goal,
                    const ModuleSet& modules);

// N + 1 FIFO buffers of episode references. Buffer i < N holds episodes in
// which module i's outcome changed, buffer N the remaining ones.
class InterestBuffers {
 public:
  InterestBuffers(int n_modules, std::size_t capacity);

  void Store(EpisodePtr episode);

  int n_modules() const { return n_modules_; }
  std::size_t capacity() const { return capacity_; }
  // i in [0, n_modules]; n_modules is the remainder buffer.
  const std::deque<EpisodePtr>& buffer(int i) const { return buffers_.at(i); }
  // Every stored episode in arrival order, bounded by the same capacity.
  const std::deque<EpisodePtr>& all() const { return all_; }
  long stored() const { return stored_; }
  // Transitions held by the union of the module buffers.
  long ModuleTransitions() const;

  // Replaces the whole content, e.g. when restoring a checkpoint.
  void Restore(std::vector<std::deque<EpisodePtr>> buffers,
               std::deque<EpisodePtr> all, long stored);

 private:
  int n_modules_;
  std::size_t capacity_;
  std::vector<std::deque<EpisodePtr>> buffers_;
  std::deque<EpisodePtr> all_;
  long stored_ = 0;
};

struct ReplayDraw {
  EpisodePtr episode;
  int step = 0;
  // Module the sample is replayed for; -1 for holistic goals.
  int module = -1;
};

// floor(n * p_i) draws from each module buffer, leftovers assigned to modules
// drawn from p. Empty buffers are dropped and p renormalized over the others.
std::vector<ReplayDraw> ComposeMinibatch(const InterestBuffers& buffers,
                                         std::span<const double> probabilities,
                                         int n_samples, std::mt19937_64& rng);

// Per-module quotas before the leftover fill (exposed for tests).
std::vector<int> MinibatchQuotas(const InterestBuffers& buffers,
                                 std::span<const double> probabilities,
                                 int n_samples);

// Uniform draws over every stored episode, for the holistic baseline.
std::vector<ReplayDraw> ComposeUniformMinibatch(const InterestBuffers& buffers,
                                                int n_samples,
                                                std::mt19937_64& rng);

// A relabelled transition ready for the learner.
struct TrainingSample {
  Observation state;
  Action action;
  Observation next_state;
  // Substituted module; -1 for holistic goals.
  int module = -1;
  // Substituted goal (module slice, or the full vector for holistic goals).
  Vector goal;
  double reward = -1.0;
  bool hindsight = false;
  // Step whose outcome became the goal when hindsight fired.
  int future_step = -1;
};

// Module-descriptor substitution, then hindsight ("future" strategy) with
// probability p_future or a fresh goal from the module's space, then the
// internal reward of the new (module, goal) on the next state.
TrainingSample SubstituteAndReward(const ReplayDraw& draw,
                                   const ModuleSet& modules,
                                   std::mt19937_64& rng,
                                   double p_future = kDefaultHindsightProbability);

// Holistic variant: goals span every module slice, reward is FlatReward.
TrainingSample SubstituteAndRewardFlat(
    const ReplayDraw& draw, const ModuleSet& modules, std::mt19937_64& rng,
    double p_future = kDefaultHindsightProbability);

// A holistic goal: every slice sampled from its module's space.
Vector SampleFlatGoal(const ModuleSet& modules, const Observation& episode_start,
                      std::mt19937_64& rng);

}  // namespace curious

#endif  // CURIOUS_REPLAY_HPP_
