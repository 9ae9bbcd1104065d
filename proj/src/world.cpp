#include "curious/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace curious {

namespace {

constexpr int kPlacementAttempts = 100;

double HorizontalDistance(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x() - b.x(), a.y() - b.y());
}

double Reflect(double v, double lo, double hi) {
  // Step sizes are small compared to the region, one fold is enough.
  if (v < lo) v = lo + (lo - v);
  if (v > hi) v = hi - (v - hi);
  return std::clamp(v, lo, hi);
}

}  // namespace

Vec3 WorldConfig::PerceptionOffset(int block) const {
  if (block < 0 || block >= static_cast<int>(perception_offsets.size())) {
    return Vec3::Zero();
  }
  return perception_offsets[block];
}

void WorldConfig::Validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) {
      throw InvalidConfigError(std::string("world config: ") + what +
                               " must be > 0");
    }
  };
  positive(table_height, "table height");
  positive(block_half_size, "block half-size");
  positive(max_displacement, "max displacement");
  positive(grasp_radius, "grasp radius");
  positive(distractor_step, "distractor step");
  if (episode_length < 1) {
    throw InvalidConfigError("world config: episode length must be >= 1");
  }
  if (n_reachable_blocks < 0 || n_distractor_blocks < 0) {
    throw InvalidConfigError("world config: block counts must be >= 0");
  }
  if ((workspace.max.array() <= workspace.min.array()).any()) {
    throw InvalidConfigError("world config: empty workspace");
  }
  if (!workspace.Contains(gripper_start)) {
    throw InvalidConfigError("world config: gripper start outside workspace");
  }
  if (!perception_offsets.empty() &&
      static_cast<int>(perception_offsets.size()) != n_blocks()) {
    throw InvalidConfigError(
        "world config: perception offsets must have one entry per block");
  }
  // Distractors must be out of reach.
  const bool overlaps_x = distractor_region.min.x() < workspace.max.x() &&
                          distractor_region.max.x() > workspace.min.x();
  const bool overlaps_y = distractor_region.min.y() < workspace.max.y() &&
                          distractor_region.max.y() > workspace.min.y();
  if (n_distractor_blocks > 0 && overlaps_x && overlaps_y) {
    throw InvalidConfigError(
        "world config: distractor region intersects the workspace");
  }
}

WorldConfig DefaultWorldConfig(int n_distractors) {
  WorldConfig config;
  config.n_distractor_blocks = n_distractors;
  return config;
}

Action Action::FromVector(const Vector& v) {
  if (v.size() != 4) {
    throw std::invalid_argument("action must have 4 components");
  }
  Action a;
  for (int i = 0; i < 4; ++i) a.values[i] = v[i];
  return a;
}

Vector Action::ToVector() const {
  return Eigen::Map<const Eigen::Vector4d>(values.data());
}

Action Action::Clipped() const {
  Action a;
  for (int i = 0; i < 4; ++i) a.values[i] = std::clamp(values[i], -1.0, 1.0);
  return a;
}

bool WorldState::operator==(const WorldState& other) const {
  if (gripper != other.gripper || aperture != other.aperture ||
      held_block != other.held_block || t != other.t ||
      blocks.size() != other.blocks.size() ||
      distractor_streams != other.distractor_streams) {
    return false;
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i] != other.blocks[i]) return false;
  }
  return true;
}

Observation Observe(const WorldConfig& config, const WorldState& state) {
  const ObservationLayout layout(config);
  Observation obs(layout.dim());
  obs.segment<3>(ObservationLayout::kGripper) = state.gripper;
  obs[ObservationLayout::kAperture] = state.aperture;
  for (int b = 0; b < config.n_reachable_blocks; ++b) {
    const Vec3 perceived = state.blocks[b] + config.PerceptionOffset(b);
    obs.segment<3>(layout.ReachableBlock(b)) = perceived;
    obs.segment<3>(layout.ReachableRelative(b)) = perceived - state.gripper;
  }
  for (int d = 0; d < config.n_distractor_blocks; ++d) {
    const int block = config.n_reachable_blocks + d;
    obs.segment<3>(layout.Distractor(d)) =
        state.blocks[block] + config.PerceptionOffset(block);
  }
  return obs;
}

std::pair<WorldState, Observation> Reset(const WorldConfig& config,
                                         std::uint64_t seed) {
  config.Validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  WorldState state;
  state.gripper = config.gripper_start;
  state.aperture = 1.0;
  state.t = 0;

  const double min_separation = 2.0 * config.block_half_size;
  const Box& spawn = config.spawn_region;
  for (int b = 0; b < config.n_reachable_blocks; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const Vec3 candidate(
          spawn.min.x() + unit(rng) * (spawn.max.x() - spawn.min.x()),
          spawn.min.y() + unit(rng) * (spawn.max.y() - spawn.min.y()),
          config.RestingHeight());
      placed = std::all_of(state.blocks.begin(), state.blocks.end(),
                           [&](const Vec3& other) {
                             return HorizontalDistance(candidate, other) >=
                                    min_separation;
                           });
      if (placed) state.blocks.push_back(candidate);
    }
    if (!placed) {
      throw PlacementError("could not place block " + std::to_string(b) +
                           " without overlap");
    }
  }

  const Box& region = config.distractor_region;
  for (int d = 0; d < config.n_distractor_blocks; ++d) {
    state.blocks.emplace_back(
        region.min.x() + unit(rng) * (region.max.x() - region.min.x()),
        region.min.y() + unit(rng) * (region.max.y() - region.min.y()),
        config.RestingHeight());
    // minstd_rand rejects a zero seed modulo its modulus; keep it in range.
    state.distractor_streams.emplace_back(
        static_cast<std::uint_fast32_t>(rng() % 2147483646u + 1u));
  }

  Observation obs = Observe(config, state);
  return {std::move(state), std::move(obs)};
}

std::pair<WorldState, Observation> Step(const WorldConfig& config,
                                        const WorldState& state,
                                        const Action& action) {
  if (state.t >= config.episode_length) {
    throw EpisodeExhaustedError("step called after the last step (t = " +
                                std::to_string(state.t) + ")");
  }
  const Action a = action.Clipped();
  const double half = config.block_half_size;
  const Vec3 grip_offset(0.0, 0.0, half);

  WorldState next = state;
  const Vec3 previous = state.gripper;
  const Vec3 delta(a.values[0], a.values[1], a.values[2]);
  next.gripper = config.workspace.Clip(previous + config.max_displacement * delta);
  next.aperture = a.values[3] < 0.0 ? 0.0 : 1.0;

  // Release.
  if (next.held_block && next.aperture > 0.0) {
    const int b = *next.held_block;
    Vec3& block = next.blocks[b];
    double rest = config.RestingHeight();
    for (int other = 0; other < config.n_reachable_blocks; ++other) {
      if (other == b) continue;
      if (HorizontalDistance(block, next.blocks[other]) <= half) {
        rest = std::max(rest, next.blocks[other].z() + 2.0 * half);
      }
    }
    block.z() = rest;
    next.held_block.reset();
  }

  // Grasp: the closest reachable block around the fingertips.
  if (!next.held_block && next.aperture == 0.0) {
    const Vec3 fingertips = next.gripper - grip_offset;
    double best = config.grasp_radius;
    for (int b = 0; b < config.n_reachable_blocks; ++b) {
      const double d = (next.blocks[b] - fingertips).norm();
      if (d < best) {
        best = d;
        next.held_block = b;
      }
    }
  }

  if (next.held_block) {
    next.blocks[*next.held_block] = next.gripper - grip_offset;
  }

  // Push: the fingertips sweep blocks whose top they are below.
  const double reach = 2.0 * half;
  const double fingertip_z = next.gripper.z() - half;
  const Eigen::Vector2d motion = (next.gripper - previous).head<2>();
  for (int b = 0; b < config.n_reachable_blocks; ++b) {
    if (next.held_block == b) continue;
    Vec3& block = next.blocks[b];
    if (fingertip_z >= block.z() + half) continue;
    const double before = HorizontalDistance(previous, block);
    const double after = HorizontalDistance(next.gripper, block);
    if (after >= reach || after >= before || motion.isZero(0.0)) continue;
    Eigen::Vector2d direction = (block - next.gripper).head<2>();
    direction = after > 0.0 ? Eigen::Vector2d(direction / after)
                            : Eigen::Vector2d(motion.normalized());
    const Eigen::Vector2d shift = (reach - after) * direction;
    block.x() = std::clamp(block.x() + shift.x(), config.workspace.min.x(),
                           config.workspace.max.x());
    block.y() = std::clamp(block.y() + shift.y(), config.workspace.min.y(),
                           config.workspace.max.y());
  }

  // Distractors random-walk inside their region.
  const Box& region = config.distractor_region;
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  for (int d = 0; d < config.n_distractor_blocks; ++d) {
    Vec3& block = next.blocks[config.n_reachable_blocks + d];
    const double theta = angle(next.distractor_streams[d]);
    block.x() = Reflect(block.x() + config.distractor_step * std::cos(theta),
                        region.min.x(), region.max.x());
    block.y() = Reflect(block.y() + config.distractor_step * std::sin(theta),
                        region.min.y(), region.max.y());
  }

  ++next.t;
  Observation obs = Observe(config, next);
  return {std::move(next), std::move(obs)};
}

WorldConfig InjectPerturbation(const WorldConfig& config, int block,
                               const Vec3& offset) {
  if (block < 0 || block >= config.n_blocks()) {
    throw std::out_of_range("unknown block id " + std::to_string(block));
  }
  WorldConfig perturbed = config;
  if (perturbed.perception_offsets.empty()) {
    perturbed.perception_offsets.assign(config.n_blocks(), Vec3::Zero());
  }
  perturbed.perception_offsets[block] = offset;
  return perturbed;
}

}  // namespace curious
