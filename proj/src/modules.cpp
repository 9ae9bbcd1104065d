#include "curious/modules.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

namespace curious {

namespace {

void CheckDim(const Vector& v, int expected, const char* what) {
  if (v.size() != expected) {
    throw DimensionMismatchError(std::string(what) + ": expected dimension " +
                                 std::to_string(expected) + ", got " +
                                 std::to_string(v.size()));
  }
}

// Goal box shared by reachable-block modules: the spawn rectangle.
Box TableGoalBox(const WorldConfig& world, double z_min, double z_max) {
  return Box{Vec3(world.spawn_region.min.x(), world.spawn_region.min.y(), z_min),
             Vec3(world.spawn_region.max.x(), world.spawn_region.max.y(), z_max)};
}

void CheckReachableBlock(const WorldConfig& world, int block) {
  if (block < 0 || block >= world.n_reachable_blocks) {
    throw UnknownModuleError("module refers to unknown reachable block " +
                             std::to_string(block));
  }
}

}  // namespace

const char* ToString(ModuleKind kind) {
  switch (kind) {
    case ModuleKind::kReach:
      return "reach";
    case ModuleKind::kPush:
      return "push";
    case ModuleKind::kPickPlace:
      return "pick_place";
    case ModuleKind::kStack:
      return "stack";
  }
  return "?";
}

ModuleSet::ModuleSet(std::vector<ModuleSpec> specs, const WorldConfig& world)
    : specs_(std::move(specs)),
      observation_dim_(world.observation_dim()),
      table_height_(world.table_height) {
  for (const ModuleSpec& spec : specs_) {
    offsets_.push_back(goal_dim_);
    goal_dim_ += spec.goal_dim;
  }
}

const ModuleSpec& ModuleSet::spec(int module) const {
  if (module < 0 || module >= size()) {
    throw UnknownModuleError("unknown module id " + std::to_string(module));
  }
  return specs_[module];
}

std::vector<int> ModuleSet::AchievableModules() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (specs_[i].achievable) out.push_back(i);
  }
  return out;
}

int ModuleSet::Find(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (specs_[i].name == name) return i;
  }
  return -1;
}

ModuleSpec MakeReachModule(const WorldConfig& world) {
  ModuleSpec spec;
  spec.name = "reach";
  spec.kind = ModuleKind::kReach;
  spec.goal_dim = 3;
  spec.goal_bounds = TableGoalBox(world, world.workspace.min.z(),
                                  world.workspace.min.z() + 0.2);
  spec.outcome_offset = ObservationLayout::kGripper;
  return spec;
}

ModuleSpec MakePushModule(const WorldConfig& world, int block) {
  if (block < 0 || block >= world.n_blocks()) {
    throw UnknownModuleError("push module refers to unknown block " +
                             std::to_string(block));
  }
  const ObservationLayout layout(world);
  ModuleSpec spec;
  spec.kind = ModuleKind::kPush;
  spec.goal_dim = 2;
  spec.block = block;
  spec.outcome_offset = layout.Block(block);
  if (block < world.n_reachable_blocks) {
    spec.name = "push_cube" + std::to_string(block + 1);
    spec.goal_bounds =
        TableGoalBox(world, world.table_height, world.table_height);
  } else {
    spec.name = "push_distractor" +
                std::to_string(block - world.n_reachable_blocks + 1);
    spec.achievable = false;
    spec.goal_bounds = world.distractor_region;
    spec.goal_bounds.min.z() = spec.goal_bounds.max.z() = world.table_height;
  }
  return spec;
}

ModuleSpec MakePickPlaceModule(const WorldConfig& world, int block) {
  CheckReachableBlock(world, block);
  const ObservationLayout layout(world);
  ModuleSpec spec;
  spec.name = "pick_place_cube" + std::to_string(block + 1);
  spec.kind = ModuleKind::kPickPlace;
  spec.goal_dim = 3;
  spec.block = block;
  spec.outcome_offset = layout.ReachableBlock(block);
  spec.goal_bounds =
      TableGoalBox(world, world.RestingHeight(), world.RestingHeight() + 0.175);
  return spec;
}

ModuleSpec MakeStackModule(const WorldConfig& world, int block,
                           int support_block) {
  CheckReachableBlock(world, block);
  CheckReachableBlock(world, support_block);
  if (block == support_block) {
    throw UnknownModuleError("stack module needs two distinct blocks");
  }
  const ObservationLayout layout(world);
  ModuleSpec spec;
  spec.name = "stack_cube" + std::to_string(block + 1) + "_on_cube" +
              std::to_string(support_block + 1);
  spec.kind = ModuleKind::kStack;
  spec.goal_dim = 3;
  spec.block = block;
  spec.support_block = support_block;
  spec.outcome_offset = layout.ReachableBlock(block);
  spec.support_offset = layout.ReachableBlock(support_block);
  spec.stack_height = 2.0 * world.block_half_size;
  // Reachable stacking heights; the goal itself comes from the support block.
  spec.goal_bounds = TableGoalBox(world, world.RestingHeight(),
                                  world.RestingHeight() + 4 * world.block_half_size);
  return spec;
}

ModuleSet BuildModuleSet(const WorldConfig& world) {
  std::vector<ModuleSpec> specs{MakeReachModule(world),
                                MakePushModule(world, 0),
                                MakePickPlaceModule(world, 0),
                                MakeStackModule(world, 0, 1)};
  for (int d = 0; d < world.n_distractor_blocks; ++d) {
    specs.push_back(MakePushModule(world, world.n_reachable_blocks + d));
  }
  return ModuleSet(std::move(specs), world);
}

ModuleSet BuildModuleSet(const WorldConfig& world,
                         std::span<const std::string> names) {
  static const std::regex kPush(R"(push_cube(\d+))");
  static const std::regex kDistractor(R"(push_distractor(\d+))");
  static const std::regex kPickPlace(R"(pick_place_cube(\d+))");
  static const std::regex kStack(R"(stack_cube(\d+)_on_cube(\d+))");
  std::vector<ModuleSpec> specs;
  for (const std::string& name : names) {
    std::smatch m;
    if (name == "reach") {
      specs.push_back(MakeReachModule(world));
    } else if (std::regex_match(name, m, kPush)) {
      const int block = std::stoi(m[1]) - 1;
      CheckReachableBlock(world, block);
      specs.push_back(MakePushModule(world, block));
    } else if (std::regex_match(name, m, kDistractor)) {
      const int d = std::stoi(m[1]) - 1;
      if (d < 0 || d >= world.n_distractor_blocks) {
        throw UnknownModuleError("unknown distractor in module " + name);
      }
      specs.push_back(MakePushModule(world, world.n_reachable_blocks + d));
    } else if (std::regex_match(name, m, kPickPlace)) {
      specs.push_back(MakePickPlaceModule(world, std::stoi(m[1]) - 1));
    } else if (std::regex_match(name, m, kStack)) {
      specs.push_back(
          MakeStackModule(world, std::stoi(m[1]) - 1, std::stoi(m[2]) - 1));
    } else {
      throw UnknownModuleError("unknown module name '" + name + "'");
    }
  }
  return ModuleSet(std::move(specs), world);
}

Vector SampleGoalVector(const ModuleSpec& spec,
                        const Observation& episode_start, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Box& box = spec.goal_bounds;
  auto draw = [&](int axis) {
    return box.min[axis] + unit(rng) * (box.max[axis] - box.min[axis]);
  };
  switch (spec.kind) {
    case ModuleKind::kPush: {
      const double x = draw(0);
      const double y = draw(1);
      return Eigen::Vector2d(x, y);
    }
    case ModuleKind::kStack: {
      const Vec3 support = episode_start.segment<3>(spec.support_offset);
      return Vec3(support.x(), support.y(), support.z() + spec.stack_height);
    }
    case ModuleKind::kReach:
    case ModuleKind::kPickPlace: {
      const double x = draw(0);
      const double y = draw(1);
      const double z = draw(2);
      return Vec3(x, y, z);
    }
  }
  return Vector();
}

GoalAssignment SampleGoal(const ModuleSet& modules, int module,
                          const Observation& episode_start,
                          std::mt19937_64& rng) {
  return GoalAssignment{
      module, SampleGoalVector(modules.spec(module), episode_start, rng)};
}

Vec3 LiftGoal(const ModuleSpec& spec, const Vector& goal, double table_height) {
  if (spec.kind == ModuleKind::kPush) {
    CheckDim(goal, 2, "push goal");
    return Vec3(goal[0], goal[1], table_height);
  }
  CheckDim(goal, 3, "goal");
  return goal;
}

Vector EncodePolicyInput(const Observation& obs,
                         const GoalAssignment& assignment,
                         const ModuleSet& modules) {
  const ModuleSpec& spec = modules.spec(assignment.module);
  CheckDim(obs, modules.observation_dim(), "observation");
  CheckDim(assignment.goal, spec.goal_dim, "goal");
  Vector input = Vector::Zero(modules.input_dim());
  const int obs_dim = modules.observation_dim();
  input.head(obs_dim) = obs;
  input.segment(obs_dim + modules.offset(assignment.module), spec.goal_dim) =
      assignment.goal;
  input[obs_dim + modules.goal_dim() + assignment.module] = 1.0;
  return input;
}

GoalAssignment DecodePolicyInput(const Vector& input, const ModuleSet& modules) {
  CheckDim(input, modules.input_dim(), "policy input");
  const int descriptor_start = modules.observation_dim() + modules.goal_dim();
  GoalAssignment out;
  Eigen::Index module = 0;
  input.segment(descriptor_start, modules.size()).maxCoeff(&module);
  out.module = static_cast<int>(module);
  out.goal = input.segment(modules.observation_dim() + modules.offset(out.module),
                           modules.spec(out.module).goal_dim);
  return out;
}

Vector ExtractOutcome(const Observation& obs, const ModuleSpec& spec) {
  return obs.segment(spec.outcome_offset, spec.goal_dim);
}

Vector ExtractAllOutcomes(const Observation& obs, const ModuleSet& modules) {
  Vector out(modules.goal_dim());
  for (int i = 0; i < modules.size(); ++i) {
    const ModuleSpec& spec = modules.spec(i);
    out.segment(modules.offset(i), spec.goal_dim) = ExtractOutcome(obs, spec);
  }
  return out;
}

double InternalReward(const ModuleSpec& spec, const Vector& goal,
                      const Vector& outcome, const Vec3& gripper) {
  CheckDim(goal, spec.goal_dim, "goal");
  CheckDim(outcome, spec.goal_dim, "outcome");
  const bool reached = (outcome - goal).norm() < kReachEpsilon;
  if (!reached) return -1.0;
  if (spec.kind == ModuleKind::kStack) {
    const double clearance = (gripper - Vec3(outcome)).norm();
    if (!(clearance > kStackClearanceFactor * kReachEpsilon)) return -1.0;
  }
  return 0.0;
}

double FlatReward(const ModuleSet& modules, const Vector& flat_goal,
                  const Vector& flat_outcome, const Vec3& gripper) {
  CheckDim(flat_goal, modules.goal_dim(), "flat goal");
  CheckDim(flat_outcome, modules.goal_dim(), "flat outcome");
  for (int i = 0; i < modules.size(); ++i) {
    const ModuleSpec& spec = modules.spec(i);
    if (!spec.achievable) continue;
    const int off = modules.offset(i);
    if (InternalReward(spec, flat_goal.segment(off, spec.goal_dim),
                       flat_outcome.segment(off, spec.goal_dim),
                       gripper) != 0.0) {
      return -1.0;
    }
  }
  return 0.0;
}

bool OutcomeChanged(std::span<const Vector> outcomes) {
  if (outcomes.empty()) return false;
  const Vector& first = outcomes.front();
  return std::any_of(outcomes.begin(), outcomes.end(), [&](const Vector& o) {
    return (o - first).norm() > kOutcomeChangeThreshold;
  });
}

}  // namespace curious
