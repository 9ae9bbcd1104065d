#include "curious/ddpg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace curious {

namespace {

Matrix CriticInput(const Matrix& inputs, const Matrix& actions) {
  Matrix x(inputs.rows() + actions.rows(), inputs.cols());
  x.topRows(inputs.rows()) = inputs;
  x.bottomRows(actions.rows()) = actions;
  return x;
}

Matrix NetworkInputs(const LearnerState& learner, const Matrix& inputs) {
  if (learner.normalizer.empty()) return inputs;
  return learner.normalizer.Apply(inputs);
}

}  // namespace

Matrix InputNormalizer::Apply(const Matrix& inputs) const {
  const Eigen::Index obs_dim = shift.size();
  Matrix out = inputs;
  out.topRows(obs_dim) =
      scale.asDiagonal() * (inputs.topRows(obs_dim).colwise() - shift);
  for (const GoalSlice& g : goals) {
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
      if (inputs(g.descriptor, c) == 0.0) continue;
      for (int k = 0; k < g.dim; ++k) {
        out(g.offset + k, c) = scale[g.outcome + k] *
                               (inputs(g.offset + k, c) - shift[g.outcome + k]);
      }
    }
  }
  return out;
}

InputNormalizer MakeInputNormalizer(const WorldConfig& world,
                                    const ModuleSet& modules) {
  const ObservationLayout layout(world);
  const Vec3 center = world.workspace.Center();
  const Vec3 inv_half =
      (0.5 * (world.workspace.max - world.workspace.min)).cwiseInverse();
  InputNormalizer n;
  n.shift = Vector::Zero(layout.dim());
  n.scale = Vector::Ones(layout.dim());
  auto position = [&](int slot) {
    n.shift.segment<3>(slot) = center;
    n.scale.segment<3>(slot) = inv_half;
  };
  position(ObservationLayout::kGripper);
  n.shift[ObservationLayout::kAperture] = 0.5;
  n.scale[ObservationLayout::kAperture] = 2.0;
  for (int b = 0; b < world.n_reachable_blocks; ++b) {
    position(layout.ReachableBlock(b));
    n.scale.segment<3>(layout.ReachableRelative(b)) = inv_half;
  }
  // Distractors live off the workspace; center them on their own region
  // (the region is flat, so z keeps the workspace map).
  const Box& region = world.distractor_region;
  Vec3 d_center = region.Center();
  Vec3 d_inv_half = (0.5 * (region.max - region.min)).cwiseInverse();
  d_center.z() = center.z();
  d_inv_half.z() = inv_half.z();
  for (int d = 0; d < world.n_distractor_blocks; ++d) {
    const int slot = layout.Distractor(d);
    n.shift.segment<3>(slot) = d_center;
    n.scale.segment<3>(slot) = d_inv_half;
  }
  const int obs_dim = modules.observation_dim();
  for (int i = 0; i < modules.size(); ++i) {
    const ModuleSpec& spec = modules.spec(i);
    n.goals.push_back({obs_dim + modules.offset(i), spec.outcome_offset,
                       spec.goal_dim, obs_dim + modules.goal_dim() + i});
  }
  return n;
}

LearnerState MakeLearner(int policy_input_dim, const LearnerConfig& config,
                         std::mt19937_64& rng) {
  if (!(config.gamma > 0.0 && config.gamma < 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1)");
  }
  if (!(config.polyak >= 0.0 && config.polyak <= 1.0)) {
    throw std::invalid_argument("polyak coefficient must lie in [0, 1]");
  }
  std::vector<int> actor_sizes{policy_input_dim};
  actor_sizes.insert(actor_sizes.end(), config.hidden.begin(), config.hidden.end());
  actor_sizes.push_back(kActionDim);
  std::vector<int> critic_sizes{policy_input_dim + kActionDim};
  critic_sizes.insert(critic_sizes.end(), config.hidden.begin(), config.hidden.end());
  critic_sizes.push_back(1);

  LearnerState learner;
  learner.config = config;
  learner.actor = InitNetwork(actor_sizes, Activation::kTanh, rng);
  learner.critic = InitNetwork(critic_sizes, Activation::kIdentity, rng);
  learner.actor_target = learner.actor;
  learner.critic_target = learner.critic;
  learner.actor_opt = MakeAdam(learner.actor, config.actor_lr);
  learner.critic_opt = MakeAdam(learner.critic, config.critic_lr);
  return learner;
}

Action BehavioralAction(const LearnerState& learner, const Vector& policy_input,
                        std::mt19937_64& rng, bool explore) {
  const Vector out =
      Forward(learner.actor, Vector(NetworkInputs(learner, policy_input)));
  Action a = Action::FromVector(out);
  if (!explore) return a;
  std::bernoulli_distribution random_action(learner.config.random_action_prob);
  if (random_action(rng)) {
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    for (double& v : a.values) v = uniform(rng);
    return a;
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  for (double& v : a.values) v += learner.config.noise_sigma * noise(rng);
  return a.Clipped();
}

Vector CriticValues(const NetworkParams& critic, const Matrix& inputs,
                    const Matrix& actions) {
  return ForwardBatch(critic, CriticInput(inputs, actions)).row(0).transpose();
}

Vector CriticTargets(const LearnerState& learner, const LearnerBatch& batch) {
  const double gamma = learner.config.gamma;
  const Matrix next = NetworkInputs(learner, batch.next_inputs);
  const Matrix next_actions = ForwardBatch(learner.actor_target, next);
  const Vector next_q = CriticValues(learner.critic_target, next, next_actions);
  const double lower = -1.0 / (1.0 - gamma);
  return (batch.rewards + gamma * next_q).cwiseMax(lower).cwiseMin(0.0);
}

NetworkParams ActorGradient(const LearnerState& learner,
                            const Matrix& raw_inputs, double* objective) {
  const int n = static_cast<int>(raw_inputs.cols());
  const Matrix inputs = NetworkInputs(learner, raw_inputs);
  ForwardCache actor_cache;
  const Matrix actions = ForwardBatch(learner.actor, inputs, &actor_cache);
  ForwardCache critic_cache;
  const Matrix q =
      ForwardBatch(learner.critic, CriticInput(inputs, actions), &critic_cache);
  // d(-mean Q)/dQ = -1/n per sample.
  const Matrix upstream = Matrix::Constant(1, n, -1.0 / n);
  const Gradients critic_grads = Backward(learner.critic, critic_cache, upstream);
  Matrix action_grad = critic_grads.input.bottomRows(kActionDim);
  const double l2 = learner.config.action_l2;
  if (l2 > 0.0) action_grad += (2.0 * l2 / n) * actions;
  if (objective) {
    *objective = q.mean() - l2 * actions.squaredNorm() / n;
  }
  return Backward(learner.actor, actor_cache, action_grad).params;
}

TrainMetrics TrainStep(LearnerState& learner, const LearnerBatch& batch) {
  const int n = batch.size();
  if (n == 0) throw std::invalid_argument("empty training batch");
  const Vector targets = CriticTargets(learner, batch);

  ForwardCache critic_cache;
  const Vector q =
      ForwardBatch(learner.critic,
                   CriticInput(NetworkInputs(learner, batch.inputs),
                               batch.actions),
                   &critic_cache)
          .row(0)
          .transpose();
  const Vector error = q - targets;
  TrainMetrics metrics;
  metrics.critic_loss = error.squaredNorm() / n;
  metrics.mean_q = q.mean();
  if (!std::isfinite(metrics.critic_loss)) {
    std::ostringstream msg;
    msg << "critic loss is not finite (mean Q " << metrics.mean_q
        << ", mean target " << targets.mean() << ", batch " << n << ")";
    throw NumericError(msg.str());
  }
  const Matrix upstream = (2.0 / n) * error.transpose();
  const NetworkParams critic_grad =
      Backward(learner.critic, critic_cache, upstream).params;
  const NetworkParams actor_grad =
      ActorGradient(learner, batch.inputs, &metrics.actor_objective);
  if (!std::isfinite(metrics.actor_objective)) {
    throw NumericError("actor objective is not finite");
  }

  AdamStep(learner.critic, critic_grad, learner.critic_opt);
  AdamStep(learner.actor, actor_grad, learner.actor_opt);
  learner.actor_target =
      Polyak(learner.actor_target, learner.actor, learner.config.polyak);
  learner.critic_target =
      Polyak(learner.critic_target, learner.critic, learner.config.polyak);
  return metrics;
}

Vector EncodeFlatInput(const Observation& obs, const Vector& flat_goal,
                       const ModuleSet& modules) {
  if (flat_goal.size() != modules.goal_dim()) {
    throw DimensionMismatchError("flat goal dimension mismatch");
  }
  Vector input(modules.input_dim());
  input << obs, flat_goal, Vector::Ones(modules.size());
  return input;
}

Vector EncodeSampleInput(const Observation& obs, const TrainingSample& sample,
                         const ModuleSet& modules) {
  if (sample.module < 0) return EncodeFlatInput(obs, sample.goal, modules);
  return EncodePolicyInput(obs, GoalAssignment{sample.module, sample.goal},
                           modules);
}

LearnerBatch EncodeBatch(std::span<const TrainingSample> samples,
                         const ModuleSet& modules) {
  const int n = static_cast<int>(samples.size());
  LearnerBatch batch;
  batch.inputs.resize(modules.input_dim(), n);
  batch.next_inputs.resize(modules.input_dim(), n);
  batch.actions.resize(kActionDim, n);
  batch.rewards.resize(n);
  for (int k = 0; k < n; ++k) {
    const TrainingSample& s = samples[k];
    batch.inputs.col(k) = EncodeSampleInput(s.state, s, modules);
    batch.next_inputs.col(k) = EncodeSampleInput(s.next_state, s, modules);
    batch.actions.col(k) = s.action.ToVector();
    batch.rewards[k] = s.reward;
  }
  return batch;
}

}  // namespace curious
