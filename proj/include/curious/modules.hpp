#ifndef CURIOUS_MODULES_HPP_
#define CURIOUS_MODULES_HPP_

#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "curious/world.hpp"

namespace curious {

// Success radius shared by every module.
inline constexpr double kReachEpsilon = 0.05;
// Stack additionally requires the gripper to stay this many radii away.
inline constexpr double kStackClearanceFactor = 1.2;
// Minimal outcome displacement for an episode to count as eventful.
inline constexpr double kOutcomeChangeThreshold = 1e-4;

class DimensionMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnknownModuleError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

enum class ModuleKind { kReach, kPush, kPickPlace, kStack };

const char* ToString(ModuleKind kind);

// One goal module: a goal space plus the reward rule evaluated on an outcome.
struct ModuleSpec {
  std::string name;
  ModuleKind kind = ModuleKind::kReach;
  int goal_dim = 3;
  // Push modules only use the xy extent.
  Box goal_bounds;
  // Block whose position is the outcome (-1: the gripper).
  int block = -1;
  // Stack: block that must end up underneath.
  int support_block = -1;
  bool achievable = true;
  // First observation slot of the outcome.
  int outcome_offset = 0;
  // Stack: observation slot of the support block.
  int support_offset = 0;
  // Stack: vertical offset of the goal above the support block center.
  double stack_height = 0.0;
};

// Ordered, immutable list of modules with their slices in the concatenated
// goal vector.
class ModuleSet {
 public:
  ModuleSet(std::vector<ModuleSpec> specs, const WorldConfig& world);

  int size() const { return static_cast<int>(specs_.size()); }
  const ModuleSpec& spec(int module) const;
  const std::vector<ModuleSpec>& specs() const { return specs_; }
  // Total goal dimension, the sum of module goal dimensions.
  int goal_dim() const { return goal_dim_; }
  int offset(int module) const { return offsets_.at(module); }
  int observation_dim() const { return observation_dim_; }
  int input_dim() const { return observation_dim_ + goal_dim_ + size(); }
  double table_height() const { return table_height_; }
  std::vector<int> AchievableModules() const;
  // Position of a module by name, or -1.
  int Find(const std::string& name) const;

 private:
  std::vector<ModuleSpec> specs_;
  std::vector<int> offsets_;
  int goal_dim_ = 0;
  int observation_dim_ = 0;
  double table_height_ = 0.0;
};

struct GoalAssignment {
  int module = 0;
  Vector goal;
};

ModuleSpec MakeReachModule(const WorldConfig& world);
// `block` may name a reachable block or a distractor (non-achievable).
ModuleSpec MakePushModule(const WorldConfig& world, int block);
ModuleSpec MakePickPlaceModule(const WorldConfig& world, int block);
ModuleSpec MakeStackModule(const WorldConfig& world, int block,
                           int support_block);

// [Reach, Push cube 1, PickPlace cube 1, Stack cube 1 on cube 2] followed by
// one Push module per distractor block of `world`.
ModuleSet BuildModuleSet(const WorldConfig& world);

// Builds a set from module names such as "reach", "push_cube1",
// "pick_place_cube1", "stack_cube1_on_cube2", "push_cube2",
// "push_distractor1".
ModuleSet BuildModuleSet(const WorldConfig& world,
                         std::span<const std::string> names);

// Uniform goal inside the module's goal space. Stack goals sit on top of the
// support block as perceived in `episode_start`.
GoalAssignment SampleGoal(const ModuleSet& modules, int module,
                          const Observation& episode_start,
                          std::mt19937_64& rng);
Vector SampleGoalVector(const ModuleSpec& spec,
                        const Observation& episode_start, std::mt19937_64& rng);

// Goal as a world-space point (Push goals are lifted to table height).
Vec3 LiftGoal(const ModuleSpec& spec, const Vector& goal, double table_height);

// [obs, goal vector zero outside the active slice, one-hot module].
Vector EncodePolicyInput(const Observation& obs,
                         const GoalAssignment& assignment,
                         const ModuleSet& modules);
GoalAssignment DecodePolicyInput(const Vector& input, const ModuleSet& modules);

Vector ExtractOutcome(const Observation& obs, const ModuleSpec& spec);
// Concatenated outcome of every module, aligned with the goal slices.
Vector ExtractAllOutcomes(const Observation& obs, const ModuleSet& modules);
inline Vec3 GripperPosition(const Observation& obs) {
  return obs.segment<3>(ObservationLayout::kGripper);
}

// 0 when the outcome satisfies the module constraints for `goal`, else -1.
double InternalReward(const ModuleSpec& spec, const Vector& goal,
                      const Vector& outcome, const Vec3& gripper);

// Reward of the holistic goal space: 0 only if every achievable slice is
// satisfied at once.
double FlatReward(const ModuleSet& modules, const Vector& flat_goal,
                  const Vector& flat_outcome, const Vec3& gripper);

// True iff the outcome moved by more than the change threshold at some step.
bool OutcomeChanged(std::span<const Vector> outcomes);

}  // namespace curious

#endif  // CURIOUS_MODULES_HPP_
