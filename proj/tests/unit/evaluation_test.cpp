#include <cmath>

#include "curious/evaluation.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace curious;

TEST_CASE("half-width bound") {
  CHECK(SuccessHalfWidthBound(100) == doctest::Approx(0.098).epsilon(1e-12));
  CHECK(SuccessHalfWidthBound(95) < 0.101);
}

TEST_CASE("an untrained policy rarely succeeds") {
  const WorldConfig w = DefaultWorldConfig(0);
  const ModuleSet m = BuildModuleSet(w);
  std::mt19937_64 rng(1);
  const LearnerState l = MakeLearner(m.input_dim(), LearnerConfig{}, rng);
  const EvaluationResult r = Evaluate([&](int) -> const LearnerState& { return l; },
                                      m, w, 200, rng);
  CHECK(r.rollouts == 200);
  CHECK(r.average < 0.1);
  int attempts = 0;
  for (int a : r.attempts) attempts += a;
  CHECK(attempts == 200);
}

TEST_CASE("a scripted reach controller scores 1") {
  const WorldConfig w = DefaultWorldConfig(0);
  const std::vector<std::string> names{"reach"};
  const ModuleSet m = BuildModuleSet(w, names);
  const LearnerState l = oracle::ScriptedReachLearner(m, 0, 1.0 / w.max_displacement);
  std::mt19937_64 rng(2);
  const EvaluationResult r = Evaluate([&](int) -> const LearnerState& { return l; },
                                      m, w, 100, rng);
  CHECK(r.average == 1.0);
  CHECK(r.success_rate[0] == 1.0);
}

TEST_CASE("distractor modules are never evaluated") {
  const WorldConfig w = DefaultWorldConfig(4);
  const ModuleSet m = BuildModuleSet(w);
  std::mt19937_64 rng(3);
  const LearnerState l = MakeLearner(m.input_dim(), LearnerConfig{}, rng);
  const EvaluationResult r = Evaluate([&](int) -> const LearnerState& { return l; },
                                      m, w, 200, rng);
  for (int i = 0; i < m.size(); ++i) {
    if (m.spec(i).achievable) {
      CHECK(r.attempts[i] > 20);
    } else {
      CHECK(r.attempts[i] == 0);
      CHECK(std::isnan(r.success_rate[i]));
    }
  }
}

TEST_CASE("evaluation leaves the agent untouched") {
  AgentConfig c;
  c.variant.actors = 1;
  c.variant.episodes_per_actor = 4;
  c.variant.minibatch = 8;
  c.variant.updates_per_episode = 1;
  c.variant.p_eval = 0.5;
  c.learner.hidden = {8};
  c.world.episode_length = 10;
  for (Variant v : {Variant::kCurious, Variant::kHerFlat, Variant::kMgMe}) {
    c.variant.variant = v;
    Agent a(c);
    a.RunEpoch();
    const std::size_t stored = a.buffers().all().size();
    const std::vector<double> p = a.lp().Probabilities();
    std::vector<long> evaluations;
    for (int i = 0; i < a.modules().size(); ++i) evaluations.push_back(a.lp().evaluations(i));
    const NetworkParams actor = a.learner(0).actor;
    std::mt19937_64 rng(4);
    const EvaluationResult r = EvaluateAgent(a, 30, rng);
    CHECK(r.rollouts == 30);
    CHECK(a.buffers().all().size() == stored);
    CHECK(a.lp().Probabilities() == p);
    for (int i = 0; i < a.modules().size(); ++i) {
      CHECK(a.lp().evaluations(i) == evaluations[i]);
    }
    CHECK(a.learner(0).actor == actor);
    // Same stream, same answer.
    std::mt19937_64 again(4);
    CHECK(EvaluateAgent(a, 30, again).average == r.average);
  }
}

TEST_CASE("flat evaluation needs every slice at once") {
  const WorldConfig w = DefaultWorldConfig(0);
  const ModuleSet m = BuildModuleSet(w);
  std::mt19937_64 rng(5);
  LearnerState l = MakeLearner(m.input_dim(), LearnerConfig{}, rng);
  const EvaluationResult r = EvaluateFlat(l, m, w, 100, rng);
  double lowest = 1.0;
  for (int i = 0; i < m.size(); ++i) lowest = std::min(lowest, r.success_rate[i]);
  CHECK(r.average <= lowest);
  CHECK_THROWS_AS(EvaluateFlat(l, m, w, 0, rng), std::invalid_argument);
}
