#include "curious/replay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace curious {

Episode MakeEpisode(std::vector<Observation> observations,
                    std::vector<Action> actions, int module, Vector goal,
                    const ModuleSet& modules) {
  if (observations.size() != actions.size() + 1) {
    throw std::invalid_argument("episode needs one more observation than actions");
  }
  Episode episode;
  episode.observations = std::move(observations);
  episode.actions = std::move(actions);
  episode.module = module;
  episode.goal = std::move(goal);
  episode.outcomes.resize(modules.size());
  episode.interest.resize(modules.size());
  for (int i = 0; i < modules.size(); ++i) {
    auto& trajectory = episode.outcomes[i];
    trajectory.reserve(episode.observations.size());
    for (const Observation& obs : episode.observations) {
      trajectory.push_back(ExtractOutcome(obs, modules.spec(i)));
    }
    episode.interest[i] = OutcomeChanged(trajectory);
  }
  return episode;
}

InterestBuffers::InterestBuffers(int n_modules, std::size_t capacity)
    : n_modules_(n_modules), capacity_(capacity), buffers_(n_modules + 1) {
  if (n_modules < 1) throw std::invalid_argument("need at least one module");
  if (capacity < 1) throw std::invalid_argument("buffer capacity must be >= 1");
}

void InterestBuffers::Store(EpisodePtr episode) {
  if (static_cast<int>(episode->interest.size()) != n_modules_) {
    throw std::invalid_argument("episode interest flags do not match buffers");
  }
  auto push = [this](std::deque<EpisodePtr>& buffer, const EpisodePtr& e) {
    buffer.push_back(e);
    if (buffer.size() > capacity_) buffer.pop_front();
  };
  bool any = false;
  for (int i = 0; i < n_modules_; ++i) {
    if (episode->interest[i]) {
      push(buffers_[i], episode);
      any = true;
    }
  }
  if (!any) push(buffers_[n_modules_], episode);
  push(all_, episode);
  ++stored_;
}

void InterestBuffers::Restore(std::vector<std::deque<EpisodePtr>> buffers,
                              std::deque<EpisodePtr> all, long stored) {
  if (static_cast<int>(buffers.size()) != n_modules_ + 1) {
    throw std::invalid_argument("buffer count does not match module count");
  }
  buffers_ = std::move(buffers);
  all_ = std::move(all);
  stored_ = stored;
}

long InterestBuffers::ModuleTransitions() const {
  std::unordered_set<const Episode*> seen;
  long transitions = 0;
  for (int i = 0; i < n_modules_; ++i) {
    for (const EpisodePtr& e : buffers_[i]) {
      if (seen.insert(e.get()).second) transitions += e->length();
    }
  }
  return transitions;
}

namespace {

std::vector<double> RenormalizedOverNonEmpty(const InterestBuffers& buffers,
                                             std::span<const double> p) {
  if (static_cast<int>(p.size()) != buffers.n_modules()) {
    throw std::invalid_argument("probability vector does not match module count");
  }
  std::vector<double> q(p.size(), 0.0);
  double total = 0.0;
  bool any_nonempty = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!buffers.buffer(static_cast<int>(i)).empty()) {
      any_nonempty = true;
      q[i] = std::max(p[i], 0.0);
      total += q[i];
    }
  }
  if (!any_nonempty) {
    throw EmptyMemoryError("every module buffer is empty");
  }
  if (total <= 0.0) {
    // All mass sits on empty buffers: spread it over the non-empty ones.
    for (std::size_t i = 0; i < p.size(); ++i) {
      q[i] = buffers.buffer(static_cast<int>(i)).empty() ? 0.0 : 1.0;
      total += q[i];
    }
  }
  for (double& v : q) v /= total;
  return q;
}

ReplayDraw DrawFrom(const std::deque<EpisodePtr>& buffer, int module,
                    std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
  EpisodePtr episode = buffer[pick(rng)];
  std::uniform_int_distribution<int> step(0, episode->length() - 1);
  const int t = step(rng);
  return ReplayDraw{std::move(episode), t, module};
}

}  // namespace

std::vector<int> MinibatchQuotas(const InterestBuffers& buffers,
                                 std::span<const double> probabilities,
                                 int n_samples) {
  const std::vector<double> q = RenormalizedOverNonEmpty(buffers, probabilities);
  std::vector<int> quotas(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    quotas[i] = static_cast<int>(std::floor(n_samples * q[i]));
  }
  return quotas;
}

std::vector<ReplayDraw> ComposeMinibatch(const InterestBuffers& buffers,
                                         std::span<const double> probabilities,
                                         int n_samples, std::mt19937_64& rng) {
  if (n_samples < 1) throw std::invalid_argument("minibatch size must be >= 1");
  const std::vector<double> q = RenormalizedOverNonEmpty(buffers, probabilities);
  std::vector<int> quotas(q.size());
  int assigned = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    quotas[i] = static_cast<int>(std::floor(n_samples * q[i]));
    assigned += quotas[i];
  }
  std::discrete_distribution<int> leftover(q.begin(), q.end());
  for (; assigned < n_samples; ++assigned) ++quotas[leftover(rng)];

  std::vector<ReplayDraw> draws;
  draws.reserve(n_samples);
  for (std::size_t i = 0; i < quotas.size(); ++i) {
    for (int k = 0; k < quotas[i]; ++k) {
      draws.push_back(
          DrawFrom(buffers.buffer(static_cast<int>(i)), static_cast<int>(i), rng));
    }
  }
  return draws;
}

std::vector<ReplayDraw> ComposeUniformMinibatch(const InterestBuffers& buffers,
                                                int n_samples,
                                                std::mt19937_64& rng) {
  if (n_samples < 1) throw std::invalid_argument("minibatch size must be >= 1");
  if (buffers.all().empty()) throw EmptyMemoryError("replay memory is empty");
  std::vector<ReplayDraw> draws;
  draws.reserve(n_samples);
  for (int k = 0; k < n_samples; ++k) draws.push_back(DrawFrom(buffers.all(), -1, rng));
  return draws;
}

namespace {

// Uniform step in (t, T].
int FutureStep(int t, int length, std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(t + 1, length)(rng);
}

}  // namespace

TrainingSample SubstituteAndReward(const ReplayDraw& draw,
                                   const ModuleSet& modules,
                                   std::mt19937_64& rng, double p_future) {
  const Episode& episode = *draw.episode;
  const ModuleSpec& spec = modules.spec(draw.module);
  TrainingSample sample;
  sample.state = episode.observations[draw.step];
  sample.action = episode.actions[draw.step];
  sample.next_state = episode.observations[draw.step + 1];
  sample.module = draw.module;
  std::bernoulli_distribution hindsight(p_future);
  if (hindsight(rng)) {
    sample.hindsight = true;
    sample.future_step = FutureStep(draw.step, episode.length(), rng);
    sample.goal = episode.outcomes[draw.module][sample.future_step];
  } else {
    sample.goal = SampleGoalVector(spec, episode.observations.front(), rng);
  }
  sample.reward = InternalReward(spec, sample.goal,
                                 ExtractOutcome(sample.next_state, spec),
                                 GripperPosition(sample.next_state));
  return sample;
}

Vector SampleFlatGoal(const ModuleSet& modules, const Observation& episode_start,
                      std::mt19937_64& rng) {
  Vector goal(modules.goal_dim());
  for (int i = 0; i < modules.size(); ++i) {
    const ModuleSpec& spec = modules.spec(i);
    goal.segment(modules.offset(i), spec.goal_dim) =
        SampleGoalVector(spec, episode_start, rng);
  }
  return goal;
}

TrainingSample SubstituteAndRewardFlat(const ReplayDraw& draw,
                                       const ModuleSet& modules,
                                       std::mt19937_64& rng, double p_future) {
  const Episode& episode = *draw.episode;
  TrainingSample sample;
  sample.state = episode.observations[draw.step];
  sample.action = episode.actions[draw.step];
  sample.next_state = episode.observations[draw.step + 1];
  sample.module = -1;
  std::bernoulli_distribution hindsight(p_future);
  if (hindsight(rng)) {
    sample.hindsight = true;
    sample.future_step = FutureStep(draw.step, episode.length(), rng);
    sample.goal =
        ExtractAllOutcomes(episode.observations[sample.future_step], modules);
  } else {
    sample.goal = SampleFlatGoal(modules, episode.observations.front(), rng);
  }
  sample.reward =
      FlatReward(modules, sample.goal,
                 ExtractAllOutcomes(sample.next_state, modules),
                 GripperPosition(sample.next_state));
  return sample;
}

}  // namespace curious
