#include <map>
#include <random>

#include "curious/replay.hpp"
#include "doctest.h"

using namespace curious;

namespace {

// Episode driven by `policy(t, obs)`.
template <typename Policy>
EpisodePtr Simulate(const WorldConfig& w, const ModuleSet& m, std::uint64_t seed,
                    Policy policy) {
  auto [s, obs] = Reset(w, seed);
  std::vector<Observation> observations{obs};
  std::vector<Action> actions;
  for (int t = 0; t < w.episode_length; ++t) {
    const Action a = policy(t, obs);
    std::tie(s, obs) = Step(w, s, a);
    actions.push_back(a);
    observations.push_back(obs);
  }
  std::mt19937_64 rng(seed);
  const Vector goal = SampleGoalVector(m.spec(0), observations.front(), rng);
  return std::make_shared<const Episode>(
      MakeEpisode(std::move(observations), std::move(actions), 0, goal, m));
}

EpisodePtr RandomEpisode(const WorldConfig& w, const ModuleSet& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 31 + 1);
  std::uniform_real_distribution<double> u(-1, 1);
  return Simulate(w, m, seed, [&](int, const Observation&) {
    return Action{{u(rng), u(rng), u(rng), u(rng)}};
  });
}

// Heads down to the table and sweeps through cube 1.
EpisodePtr PushEpisode(const WorldConfig& w, const ModuleSet& m, std::uint64_t seed) {
  const ObservationLayout layout(w);
  return Simulate(w, m, seed, [&](int t, const Observation& obs) {
    const Vec3 gripper = obs.segment<3>(0);
    const Vec3 block = obs.segment<3>(layout.ReachableBlock(0));
    Vec3 target = block - Vec3(0.06, 0, 0);
    if (t < 10) target.z() = 0.6;
    else target.z() = w.workspace.min.z();
    if (t >= 20) target = block + Vec3(0.05, 0, 0);
    if (t >= 20) target.z() = w.workspace.min.z();
    const Vec3 d = (target - gripper) / w.max_displacement;
    return Action{{d.x(), d.y(), d.z(), 1.0}};
  });
}

}  // namespace

TEST_CASE("episodes carry outcomes and interest") {
  const WorldConfig w = DefaultWorldConfig(2);
  const ModuleSet m = BuildModuleSet(w);
  const EpisodePtr e = RandomEpisode(w, m, 0);
  CHECK(e->length() == w.episode_length);
  REQUIRE(e->outcomes.size() == static_cast<std::size_t>(m.size()));
  for (int i = 0; i < m.size(); ++i) {
    for (int t = 0; t <= e->length(); ++t) {
      CHECK(e->outcomes[i][t] == ExtractOutcome(e->observations[t], m.spec(i)));
    }
  }
  CHECK_THROWS_AS(MakeEpisode({Vector::Zero(w.observation_dim())}, {Action{}}, 0,
                              Vector::Zero(3), m),
                  std::invalid_argument);
}

TEST_CASE("a still episode only interests distractor modules") {
  const WorldConfig w = DefaultWorldConfig(4);
  const ModuleSet m = BuildModuleSet(w);
  const EpisodePtr e = Simulate(w, m, 3, [](int, const Observation&) { return Action{}; });
  InterestBuffers b(m.size(), 10);
  b.Store(e);
  for (int i = 0; i < 4; ++i) CHECK(b.buffer(i).empty());
  for (int i = 4; i < 8; ++i) CHECK(b.buffer(i).size() == 1);
  CHECK(b.buffer(m.size()).empty());
}

TEST_CASE("a still episode without distractors lands in the remainder buffer") {
  const WorldConfig w = DefaultWorldConfig(0);
  const ModuleSet m = BuildModuleSet(w);
  InterestBuffers b(m.size(), 10);
  b.Store(Simulate(w, m, 3, [](int, const Observation&) { return Action{}; }));
  CHECK(b.buffer(m.size()).size() == 1);
  CHECK(b.all().size() == 1);
}

TEST_CASE("pushing cube 1 interests every cube-1 module") {
  const WorldConfig w = DefaultWorldConfig();
  const ModuleSet m = BuildModuleSet(w);
  const EpisodePtr e = PushEpisode(w, m, 5);
  REQUIRE(e->interest[1]);
  CHECK(e->interest[0]);
  CHECK(e->interest[2]);
  CHECK(e->interest[3]);
}

TEST_CASE("buffer membership equals outcome change") {
  const WorldConfig w = DefaultWorldConfig(4);
  const ModuleSet m = BuildModuleSet(w);
  InterestBuffers b(m.size(), 1000);
  std::vector<EpisodePtr> episodes;
  for (int k = 0; k < 200; ++k) {
    episodes.push_back(k % 3 == 0 ? PushEpisode(w, m, k) : RandomEpisode(w, m, k));
    b.Store(episodes.back());
  }
  for (const EpisodePtr& e : episodes) {
    bool any = false;
    for (int i = 0; i < m.size(); ++i) {
      const bool changed = OutcomeChanged(e->outcomes[i]);
      const auto& buf = b.buffer(i);
      const bool member = std::find(buf.begin(), buf.end(), e) != buf.end();
      CHECK(member == changed);
      any = any || member;
    }
    const auto& rest = b.buffer(m.size());
    CHECK((std::find(rest.begin(), rest.end(), e) != rest.end()) == !any);
  }
}

TEST_CASE("FIFO eviction") {
  const WorldConfig w = DefaultWorldConfig();
  const ModuleSet m = BuildModuleSet(w);
  InterestBuffers b(m.size(), 3);
  std::vector<EpisodePtr> es;
  for (int k = 0; k < 5; ++k) {
    es.push_back(RandomEpisode(w, m, k));
    b.Store(es.back());
  }
  CHECK(b.all().size() == 3);
  CHECK(b.all().front() == es[2]);
  CHECK(b.stored() == 5);
  CHECK(b.buffer(0).size() <= 3);
}

TEST_CASE("minibatch quotas") {
  const WorldConfig w = DefaultWorldConfig();
  const ModuleSet m = BuildModuleSet(w, std::vector<std::string>{"reach", "push_cube1",
                                                                  "pick_place_cube1"});
  InterestBuffers b(m.size(), 100);
  for (int k = 0; k < 4; ++k) b.Store(PushEpisode(w, m, k));
  std::mt19937_64 rng(0);

  const std::vector<double> p{0.6, 0.2, 0.2};
  CHECK(MinibatchQuotas(b, p, 10) == std::vector<int>{6, 2, 2});
  const auto draws = ComposeMinibatch(b, p, 10, rng);
  std::map<int, int> counts;
  for (const ReplayDraw& d : draws) ++counts[d.module];
  CHECK(counts[0] == 6);
  CHECK(counts[1] == 2);
  CHECK(counts[2] == 2);

  const std::vector<double> one_hot{0, 1, 0};
  for (const ReplayDraw& d : ComposeMinibatch(b, one_hot, 32, rng)) CHECK(d.module == 1);
}

TEST_CASE("empty buffers hand their quota to the others") {
  const WorldConfig w = DefaultWorldConfig(1);
  const ModuleSet m = BuildModuleSet(
      w, std::vector<std::string>{"push_cube1", "push_distractor1", "reach"});
  InterestBuffers b(m.size(), 100);
  // Still episodes: only the distractor module is interested.
  for (int k = 0; k < 3; ++k) {
    b.Store(Simulate(w, m, k, [](int, const Observation&) { return Action{}; }));
  }
  REQUIRE(b.buffer(0).empty());
  std::mt19937_64 rng(1);
  const std::vector<double> p{0.5, 0.5, 0.0};
  for (const ReplayDraw& d : ComposeMinibatch(b, p, 50, rng)) CHECK(d.module == 1);
  CHECK(MinibatchQuotas(b, p, 50) == std::vector<int>{0, 50, 0});
}

TEST_CASE("empty memory") {
  const WorldConfig w = DefaultWorldConfig();
  const ModuleSet m = BuildModuleSet(w);
  InterestBuffers b(m.size(), 10);
  std::mt19937_64 rng(1);
  const std::vector<double> p(m.size(), 0.25);
  CHECK_THROWS_AS(ComposeMinibatch(b, p, 8, rng), EmptyMemoryError);
  CHECK_THROWS_AS(ComposeUniformMinibatch(b, 8, rng), EmptyMemoryError);
}

TEST_CASE("quota law with random probabilities") {
  const WorldConfig w = DefaultWorldConfig(4);
  const ModuleSet m = BuildModuleSet(w);
  InterestBuffers b(m.size(), 1000);
  for (int k = 0; k < 30; ++k) b.Store(PushEpisode(w, m, k));
  for (int k = 0; k < 30; ++k) b.Store(RandomEpisode(w, m, k + 100));
  for (int i = 0; i < m.size(); ++i) REQUIRE_FALSE(b.buffer(i).empty());
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(m.size());
    double sum = 0;
    for (double& v : p) sum += (v = u(rng));
    for (double& v : p) v /= sum;
    const int n = 1 + static_cast<int>(rng() % 200);
    const auto quotas = MinibatchQuotas(b, p, n);
    for (int i = 0; i < m.size(); ++i) CHECK(std::abs(quotas[i] - n * p[i]) < 1.0);
    CHECK(static_cast<int>(ComposeMinibatch(b, p, n, rng).size()) == n);
  }
}

TEST_CASE("substitution keeps rewards consistent and hindsight honest") {
  const WorldConfig w = DefaultWorldConfig(2);
  const ModuleSet m = BuildModuleSet(w);
  InterestBuffers b(m.size(), 1000);
  for (int k = 0; k < 20; ++k) b.Store(k % 2 ? PushEpisode(w, m, k) : RandomEpisode(w, m, k));
  std::mt19937_64 rng(5);
  const std::vector<double> p(m.size(), 1.0 / m.size());
  int hindsight = 0;
  int n = 0;
  while (n < 10000) {
    for (const ReplayDraw& d : ComposeMinibatch(b, p, 100, rng)) {
      const TrainingSample s = SubstituteAndReward(d, m, rng);
      const ModuleSpec& spec = m.spec(s.module);
      CHECK(s.module == d.module);
      CHECK(s.reward == InternalReward(spec, s.goal, ExtractOutcome(s.next_state, spec),
                                       GripperPosition(s.next_state)));
      CHECK((s.reward == 0.0 || s.reward == -1.0));
      CHECK(s.state == d.episode->observations[d.step]);
      CHECK(s.next_state == d.episode->observations[d.step + 1]);
      if (s.hindsight) {
        ++hindsight;
        CHECK(s.future_step > d.step);
        CHECK(s.future_step <= d.episode->length());
        CHECK(s.goal == d.episode->outcomes[s.module][s.future_step]);
      }
      ++n;
    }
  }
  CHECK(std::abs(hindsight / double(n) - 0.8) < 0.02);
}

TEST_CASE("next-step hindsight gives zero reward") {
  const WorldConfig w = DefaultWorldConfig();
  const ModuleSet m = BuildModuleSet(w);
  const EpisodePtr e = RandomEpisode(w, m, 2);
  std::mt19937_64 rng(3);
  const int last = e->length() - 1;
  for (int module : {0, 1, 2}) {
    const TrainingSample s = SubstituteAndReward({e, last, module}, m, rng, 1.0);
    REQUIRE(s.future_step == last + 1);
    CHECK(s.reward == 0.0);
  }
  // Probability 0 never substitutes an achieved outcome.
  const TrainingSample miss = SubstituteAndReward({e, 0, 0}, m, rng, 0.0);
  CHECK_FALSE(miss.hindsight);
}

TEST_CASE("flat substitution") {
  const WorldConfig w = DefaultWorldConfig(1);
  const ModuleSet m = BuildModuleSet(w);
  InterestBuffers b(m.size(), 100);
  for (int k = 0; k < 5; ++k) b.Store(RandomEpisode(w, m, k));
  std::mt19937_64 rng(6);
  for (const ReplayDraw& d : ComposeUniformMinibatch(b, 500, rng)) {
    CHECK(d.module == -1);
    const TrainingSample s = SubstituteAndRewardFlat(d, m, rng);
    CHECK(s.goal.size() == m.goal_dim());
    CHECK(s.reward == FlatReward(m, s.goal, ExtractAllOutcomes(s.next_state, m),
                                 GripperPosition(s.next_state)));
    if (s.hindsight) {
      CHECK(s.goal == ExtractAllOutcomes(d.episode->observations[s.future_step], m));
    }
  }
}
