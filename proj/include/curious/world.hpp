#ifndef CURIOUS_WORLD_HPP_
#define CURIOUS_WORLD_HPP_

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace curious {

using Vec3 = Eigen::Vector3d;
using Vector = Eigen::VectorXd;

// Axis-aligned box in simulation units.
struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool Contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() &&
           (p.array() <= max.array() + tol).all();
  }
  Vec3 Clip(const Vec3& p) const { return p.cwiseMax(min).cwiseMin(max); }
  Vec3 Center() const { return 0.5 * (min + max); }
};

class PlacementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EpisodeExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Geometry and dynamics constants of the kinematic arm surrogate. Blocks are
// indexed 0..n_reachable-1 (cube 1 is index 0) followed by the distractors.
struct WorldConfig {
  // Reachable region of the gripper. Its xy extent doubles as table bounds.
  Box workspace{Vec3(-0.2, -0.2, 0.45), Vec3(0.2, 0.2, 0.7)};
  // Reachable blocks spawn uniformly in this xy rectangle.
  Box spawn_region{Vec3(-0.15, -0.15, 0.0), Vec3(0.15, 0.15, 0.0)};
  // Distractor blocks wander inside this xy rectangle, off the workspace.
  Box distractor_region{Vec3(0.3, -0.4, 0.0), Vec3(0.7, 0.4, 0.0)};
  Vec3 gripper_start{0.0, 0.0, 0.5};
  double table_height = 0.4;
  double block_half_size = 0.025;
  int n_reachable_blocks = 2;
  int n_distractor_blocks = 0;
  double max_displacement = 0.05;
  double grasp_radius = 0.05;
  int episode_length = 50;
  double distractor_step = 0.02;
  // One entry per block (reachable then distractor); zero when empty.
  std::vector<Vec3> perception_offsets;

  int n_blocks() const { return n_reachable_blocks + n_distractor_blocks; }
  int observation_dim() const {
    return 4 + 6 * n_reachable_blocks + 3 * n_distractor_blocks;
  }
  Vec3 PerceptionOffset(int block) const;
  // Height of a block center resting on the table.
  double RestingHeight() const { return table_height + block_half_size; }

  // Throws InvalidConfigError when an invariant does not hold.
  void Validate() const;
};

WorldConfig DefaultWorldConfig(int n_distractors = 0);

struct Action {
  // dx, dy, dz, grip. Grip < 0 closes the gripper.
  std::array<double, 4> values{0.0, 0.0, 0.0, 0.0};

  static Action FromVector(const Vector& v);
  Vector ToVector() const;
  Action Clipped() const;
};

// Full simulator state. Block positions are block centers.
struct WorldState {
  Vec3 gripper = Vec3::Zero();
  double aperture = 1.0;
  std::vector<Vec3> blocks;
  std::optional<int> held_block;
  std::vector<std::minstd_rand> distractor_streams;
  int t = 0;

  bool operator==(const WorldState& other) const;
};

// Flat observation vector:
//   [gripper(3), aperture(1),
//    per reachable block: perceived position(3), perceived - gripper(3),
//    per distractor: perceived position(3)]
using Observation = Vector;

// Index helpers into the observation layout.
struct ObservationLayout {
  int n_reachable = 2;
  int n_distractors = 0;

  explicit ObservationLayout(const WorldConfig& config)
      : n_reachable(config.n_reachable_blocks),
        n_distractors(config.n_distractor_blocks) {}
  ObservationLayout(int reachable, int distractors)
      : n_reachable(reachable), n_distractors(distractors) {}

  static constexpr int kGripper = 0;
  static constexpr int kAperture = 3;
  int ReachableBlock(int b) const { return 4 + 6 * b; }
  int ReachableRelative(int b) const { return 4 + 6 * b + 3; }
  int Distractor(int d) const { return 4 + 6 * n_reachable + 3 * d; }
  // Perceived position slot for any block index (reachable first).
  int Block(int block) const {
    return block < n_reachable ? ReachableBlock(block)
                               : Distractor(block - n_reachable);
  }
  int dim() const { return 4 + 6 * n_reachable + 3 * n_distractors; }
};

std::pair<WorldState, Observation> Reset(const WorldConfig& config,
                                         std::uint64_t seed);

std::pair<WorldState, Observation> Step(const WorldConfig& config,
                                        const WorldState& state,
                                        const Action& action);

Observation Observe(const WorldConfig& config, const WorldState& state);

// Returns a copy of `config` whose perceived position of `block` is shifted by
// `offset`. Dynamics are untouched.
WorldConfig InjectPerturbation(const WorldConfig& config, int block,
                               const Vec3& offset);

}  // namespace curious

#endif  // CURIOUS_WORLD_HPP_
