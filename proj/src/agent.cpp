#include "curious/agent.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <thread>

namespace curious {

const char* ToString(Variant variant) {
  switch (variant) {
    case Variant::kCurious:
      return "curious";
    case Variant::kMuvfaRandom:
      return "m-uvfa-random";
    case Variant::kHerFlat:
      return "her-flat";
    case Variant::kMgMe:
      return "mg-me";
  }
  return "?";
}

Variant ParseVariant(const std::string& name) {
  if (name == "curious") return Variant::kCurious;
  if (name == "m-uvfa-random" || name == "m-uvfa") return Variant::kMuvfaRandom;
  if (name == "her-flat" || name == "her") return Variant::kHerFlat;
  if (name == "mg-me") return Variant::kMgMe;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

void VariantConfig::Validate() const {
  auto probability = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
    }
  };
  probability(p_eval, "p_eval");
  probability(epsilon, "epsilon");
  probability(p_future, "p_future");
  if (actors < 1) throw std::invalid_argument("actor count must be >= 1");
  if (episodes_per_actor < 1) {
    throw std::invalid_argument("episodes per actor must be >= 1");
  }
  if (lp_window < 1) throw std::invalid_argument("LP window must be >= 1");
  if (minibatch < 1) throw std::invalid_argument("minibatch must be >= 1");
  if (updates_per_episode < 0) {
    throw std::invalid_argument("updates per episode must be >= 0");
  }
  if (buffer_capacity < 1) throw std::invalid_argument("buffer capacity must be >= 1");
}

ModuleSet BuildModules(const AgentConfig& config) {
  if (config.modules.empty()) return BuildModuleSet(config.world);
  return BuildModuleSet(config.world, config.modules);
}

namespace {

using InputFn = std::function<Vector(const Observation&)>;

// Runs one full episode; `encode` maps observations to policy inputs.
std::pair<std::vector<Observation>, std::vector<Action>> Roll(
    const WorldConfig& world, const LearnerState& learner, WorldState state,
    Observation obs, const InputFn& encode, bool explore, std::mt19937_64& rng) {
  std::vector<Observation> observations;
  std::vector<Action> actions;
  observations.reserve(world.episode_length + 1);
  actions.reserve(world.episode_length);
  observations.push_back(obs);
  for (int t = 0; t < world.episode_length; ++t) {
    const Action a = BehavioralAction(learner, encode(obs), rng, explore);
    auto [next_state, next_obs] = Step(world, state, a);
    state = std::move(next_state);
    obs = std::move(next_obs);
    actions.push_back(a);
    observations.push_back(obs);
  }
  return {std::move(observations), std::move(actions)};
}

RolloutResult FinishModuleRollout(const WorldConfig& world,
                                  const LearnerState& learner,
                                  const ModuleSet& modules,
                                  const GoalAssignment& assignment,
                                  bool self_eval, WorldState state,
                                  Observation obs, std::mt19937_64& rng) {
  const InputFn encode = [&](const Observation& o) {
    return EncodePolicyInput(o, assignment, modules);
  };
  auto [observations, actions] =
      Roll(world, learner, std::move(state), std::move(obs), encode, !self_eval, rng);
  RolloutResult result;
  if (self_eval) {
    const Observation& last = observations.back();
    const ModuleSpec& spec = modules.spec(assignment.module);
    result.success = InternalReward(spec, assignment.goal,
                                    ExtractOutcome(last, spec),
                                    GripperPosition(last)) == 0.0;
  }
  result.episode = MakeEpisode(std::move(observations), std::move(actions),
                               assignment.module, assignment.goal, modules);
  return result;
}

}  // namespace

RolloutResult RunRollout(const WorldConfig& world, const LearnerState& learner,
                         const ModuleSet& modules,
                         const GoalAssignment& assignment, bool self_eval,
                         std::uint64_t world_seed, std::mt19937_64& rng) {
  auto [state, obs] = Reset(world, world_seed);
  return FinishModuleRollout(world, learner, modules, assignment, self_eval,
                             std::move(state), std::move(obs), rng);
}

RolloutResult RunSampledRollout(const WorldConfig& world,
                                const LearnerState& learner,
                                const ModuleSet& modules, int module,
                                bool self_eval, std::uint64_t world_seed,
                                std::mt19937_64& rng) {
  auto [state, obs] = Reset(world, world_seed);
  const GoalAssignment assignment = SampleGoal(modules, module, obs, rng);
  return FinishModuleRollout(world, learner, modules, assignment, self_eval,
                             std::move(state), std::move(obs), rng);
}

RolloutResult HerFlatEpisode(const WorldConfig& world,
                             const LearnerState& learner,
                             const ModuleSet& modules, bool explore,
                             std::uint64_t world_seed, std::mt19937_64& rng) {
  auto [state, obs] = Reset(world, world_seed);
  const Vector goal = SampleFlatGoal(modules, obs, rng);
  const InputFn encode = [&](const Observation& o) {
    return EncodeFlatInput(o, goal, modules);
  };
  auto [observations, actions] =
      Roll(world, learner, std::move(state), std::move(obs), encode, explore, rng);
  RolloutResult result;
  if (!explore) {
    const Observation& last = observations.back();
    result.success = FlatReward(modules, goal, ExtractAllOutcomes(last, modules),
                                GripperPosition(last)) == 0.0;
  }
  result.episode = MakeEpisode(std::move(observations), std::move(actions), -1,
                               goal, modules);
  return result;
}

LearnerState AverageLearners(std::span<const LearnerState> learners) {
  if (learners.empty()) throw std::invalid_argument("no learners to average");
  auto collect = [&](auto member) {
    std::vector<NetworkParams> sets;
    sets.reserve(learners.size());
    for (const LearnerState& l : learners) sets.push_back(l.*member);
    return Average(sets);
  };
  LearnerState out = learners.front();
  out.actor = collect(&LearnerState::actor);
  out.critic = collect(&LearnerState::critic);
  out.actor_target = collect(&LearnerState::actor_target);
  out.critic_target = collect(&LearnerState::critic_target);
  return out;
}

Agent::Agent(AgentConfig config)
    : config_(std::move(config)),
      modules_(BuildModules(config_)),
      lp_(modules_.size(), config_.variant.lp_window, config_.variant.epsilon) {
  config_.variant.Validate();
  config_.world.Validate();
  const int n_experts = this->n_experts();
  std::seed_seq init_seq{config_.seed, std::uint64_t{0x1eaf}};
  std::mt19937_64 init_rng(init_seq);
  std::vector<LearnerState> experts;
  for (int e = 0; e < n_experts; ++e) {
    experts.push_back(MakeLearner(modules_.input_dim(), config_.learner, init_rng));
    if (config_.learner.normalize_inputs) {
      experts.back().normalizer = MakeInputNormalizer(config_.world, modules_);
    }
  }
  // Every actor starts from the same parameters.
  learners_.assign(config_.variant.actors, experts);
  buffers_.assign(n_experts, InterestBuffers(modules_.size(),
                                             config_.variant.buffer_capacity));
  for (int k = 0; k < config_.variant.actors; ++k) {
    std::seed_seq seq{config_.seed, std::uint64_t{0xac7}, std::uint64_t(k)};
    actor_rngs_.emplace_back(seq);
  }
}

int Agent::n_experts() const {
  return config_.variant.variant == Variant::kMgMe ? modules_.size() : 1;
}

const InterestBuffers& Agent::buffers(int expert) const {
  return buffers_.at(expert);
}

const LearnerState& Agent::learner(int actor, int expert) const {
  return learners_.at(actor).at(expert);
}

const LearnerState& Agent::PolicyFor(int module) const {
  const int expert = config_.variant.variant == Variant::kMgMe ? module : 0;
  return learners_.front().at(expert);
}

void Agent::SetWorld(const WorldConfig& world) {
  world.Validate();
  if (world.observation_dim() != config_.world.observation_dim()) {
    throw std::invalid_argument("new world changes the observation layout");
  }
  config_.world = world;
}

Agent::Collected Agent::Collect(int actor) {
  std::mt19937_64& rng = actor_rngs_[actor];
  const std::uint64_t world_seed = rng();
  const VariantConfig& vc = config_.variant;
  Collected out;
  switch (vc.variant) {
    case Variant::kHerFlat:
      out.rollout = HerFlatEpisode(config_.world, learners_[actor][0], modules_,
                                   true, world_seed, rng);
      return out;
    case Variant::kMgMe: {
      const int expert = MgMeSchedule(epoch_, modules_.size());
      out.module = expert;
      out.rollout = RunSampledRollout(config_.world, learners_[actor][expert],
                                      modules_, expert, false, world_seed, rng);
      return out;
    }
    case Variant::kCurious:
    case Variant::kMuvfaRandom: {
      out.self_eval = std::bernoulli_distribution(vc.p_eval)(rng);
      if (vc.variant == Variant::kCurious) {
        out.module = lp_.SelectModule(rng, out.self_eval);
      } else {
        out.module =
            std::uniform_int_distribution<int>(0, modules_.size() - 1)(rng);
      }
      out.rollout = RunSampledRollout(config_.world, learners_[actor][0],
                                      modules_, out.module, out.self_eval,
                                      world_seed, rng);
      return out;
    }
  }
  return out;
}

std::vector<double> Agent::ReplayProbabilities() const {
  switch (config_.variant.variant) {
    case Variant::kCurious:
      return lp_.Probabilities();
    case Variant::kMgMe: {
      std::vector<double> p(modules_.size(), 0.0);
      p[MgMeSchedule(epoch_, modules_.size())] = 1.0;
      return p;
    }
    default:
      return std::vector<double>(modules_.size(), 1.0 / modules_.size());
  }
}

bool Agent::Warm(int expert) const {
  const InterestBuffers& buffers = buffers_[expert];
  const long needed = config_.variant.minibatch;
  if (config_.variant.variant == Variant::kHerFlat) {
    long transitions = 0;
    for (const EpisodePtr& e : buffers.all()) transitions += e->length();
    return transitions >= needed;
  }
  if (config_.variant.variant == Variant::kMgMe &&
      buffers.buffer(expert).empty()) {
    return false;
  }
  return buffers.ModuleTransitions() >= needed;
}

void Agent::Train(int actor, TrainMetrics& sum, int& steps) {
  const VariantConfig& vc = config_.variant;
  const int expert = vc.variant == Variant::kMgMe
                         ? MgMeSchedule(epoch_, modules_.size())
                         : 0;
  if (!Warm(expert)) return;
  std::mt19937_64& rng = actor_rngs_[actor];
  const std::vector<double> p = ReplayProbabilities();
  LearnerState& learner = learners_[actor][expert];
  std::vector<TrainingSample> samples;
  for (int u = 0; u < vc.updates_per_episode; ++u) {
    samples.clear();
    if (vc.variant == Variant::kHerFlat) {
      for (const ReplayDraw& d : ComposeUniformMinibatch(buffers_[0], vc.minibatch, rng)) {
        samples.push_back(SubstituteAndRewardFlat(d, modules_, rng, vc.p_future));
      }
    } else {
      for (const ReplayDraw& d :
           ComposeMinibatch(buffers_[expert], p, vc.minibatch, rng)) {
        samples.push_back(SubstituteAndReward(d, modules_, rng, vc.p_future));
      }
    }
    const TrainMetrics m = TrainStep(learner, EncodeBatch(samples, modules_));
    sum.critic_loss += m.critic_loss;
    sum.mean_q += m.mean_q;
    sum.actor_objective += m.actor_objective;
    ++steps;
  }
}

EpochReport Agent::RunEpoch() {
  const VariantConfig& vc = config_.variant;
  EpochReport report;
  report.epoch = epoch_;
  report.module_draws.assign(modules_.size(), 0);
  TrainMetrics sum;
  int steps = 0;

  std::vector<Collected> collected(vc.actors);
  for (int cycle = 0; cycle < vc.episodes_per_actor; ++cycle) {
    if (vc.threads && vc.actors > 1) {
      std::vector<std::thread> workers;
      for (int k = 0; k < vc.actors; ++k) {
        workers.emplace_back([this, k, &collected] { collected[k] = Collect(k); });
      }
      for (std::thread& w : workers) w.join();
    } else {
      for (int k = 0; k < vc.actors; ++k) collected[k] = Collect(k);
    }

    for (int k = 0; k < vc.actors; ++k) {
      Collected& c = collected[k];
      auto episode = std::make_shared<const Episode>(std::move(c.rollout.episode));
      for (InterestBuffers& buffers : buffers_) buffers.Store(episode);
      ++report.episodes;
      if (c.module >= 0) ++report.module_draws[c.module];
      if (c.self_eval && c.rollout.success) {
        lp_.RecordResult(c.module, *c.rollout.success);
        ++report.self_evaluations;
      }
      Train(k, sum, steps);
    }
  }

  if (vc.actors > 1) {
    for (int e = 0; e < n_experts(); ++e) {
      std::vector<LearnerState> per_actor;
      for (int k = 0; k < vc.actors; ++k) per_actor.push_back(learners_[k][e]);
      const LearnerState mean = AverageLearners(per_actor);
      for (int k = 0; k < vc.actors; ++k) {
        LearnerState& l = learners_[k][e];
        l.actor = mean.actor;
        l.critic = mean.critic;
        l.actor_target = mean.actor_target;
        l.critic_target = mean.critic_target;
      }
    }
  }

  ++epoch_;
  report.train_steps = steps;
  if (steps > 0) {
    report.metrics.critic_loss = sum.critic_loss / steps;
    report.metrics.mean_q = sum.mean_q / steps;
    report.metrics.actor_objective = sum.actor_objective / steps;
  }
  for (int i = 0; i < modules_.size(); ++i) {
    report.competence.push_back(lp_.Competence(i));
    report.progress.push_back(lp_.LearningProgress(i));
    report.evaluations.push_back(lp_.evaluations(i));
  }
  report.probabilities = lp_.Probabilities();
  return report;
}

}  // namespace curious
