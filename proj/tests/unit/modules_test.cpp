#include <cmath>
#include <random>

#include "curious/modules.hpp"
#include "doctest.h"

using namespace curious;

namespace {

// Two toy modules: a 2D goal space and a 1D goal space.
ModuleSet ToyModules(const WorldConfig& world) {
  ModuleSpec a;
  a.name = "a";
  a.goal_dim = 2;
  ModuleSpec b;
  b.name = "b";
  b.goal_dim = 1;
  return ModuleSet({a, b}, world);
}

}  // namespace

TEST_CASE("standard module sets") {
  const ModuleSet m0 = BuildModuleSet(DefaultWorldConfig(0));
  CHECK(m0.size() == 4);
  CHECK(m0.goal_dim() == 11);
  CHECK(m0.spec(0).name == "reach");
  CHECK(m0.spec(1).name == "push_cube1");
  CHECK(m0.spec(2).name == "pick_place_cube1");
  CHECK(m0.spec(3).name == "stack_cube1_on_cube2");
  CHECK(BuildModuleSet(DefaultWorldConfig(4)).size() == 8);
  const ModuleSet m7 = BuildModuleSet(DefaultWorldConfig(7));
  CHECK(m7.size() == 11);
  CHECK(m7.AchievableModules() == std::vector<int>{0, 1, 2, 3});
  // Slices are contiguous and cover the goal vector exactly.
  int next = 0;
  for (int i = 0; i < m7.size(); ++i) {
    CHECK(m7.offset(i) == next);
    next += m7.spec(i).goal_dim;
  }
  CHECK(next == m7.goal_dim());
  // Achievable goal boxes lie within the workspace in xy.
  const WorldConfig w = DefaultWorldConfig(7);
  for (const ModuleSpec& s : m7.specs()) {
    if (!s.achievable) continue;
    CHECK(s.goal_bounds.min.x() >= w.workspace.min.x());
    CHECK(s.goal_bounds.max.x() <= w.workspace.max.x());
    CHECK(s.goal_bounds.min.y() >= w.workspace.min.y());
    CHECK(s.goal_bounds.max.y() <= w.workspace.max.y());
  }
}

TEST_CASE("modules by name") {
  const WorldConfig w = DefaultWorldConfig(2);
  const std::vector<std::string> names{"reach", "push_cube2", "push_distractor2",
                                       "stack_cube2_on_cube1"};
  const ModuleSet m = BuildModuleSet(w, names);
  CHECK(m.Find("push_cube2") == 1);
  CHECK(m.Find("nope") == -1);
  CHECK(m.spec(1).block == 1);
  CHECK_FALSE(m.spec(2).achievable);
  CHECK(m.spec(3).support_block == 0);
  const std::vector<std::string> bad{"push_distractor3"};
  CHECK_THROWS_AS(BuildModuleSet(w, bad), UnknownModuleError);
  const std::vector<std::string> bad2{"fly"};
  CHECK_THROWS_AS(BuildModuleSet(w, bad2), UnknownModuleError);
  CHECK_THROWS_AS(m.spec(4), UnknownModuleError);
}

TEST_CASE("goal sampling") {
  const WorldConfig w = DefaultWorldConfig(4);
  const ModuleSet m = BuildModuleSet(w);
  const auto [s, obs] = Reset(w, 2);
  std::mt19937_64 rng(1);

  SUBCASE("push goals are planar and lift to table height") {
    const GoalAssignment g = SampleGoal(m, 1, obs, rng);
    CHECK(g.goal.size() == 2);
    CHECK(LiftGoal(m.spec(1), g.goal, w.table_height).z() == w.table_height);
  }
  SUBCASE("stack goal sits on the support block") {
    const GoalAssignment g = SampleGoal(m, 3, obs, rng);
    const Vec3 support = s.blocks[1];
    CHECK(g.goal[0] == support.x());
    CHECK(g.goal[1] == support.y());
    CHECK(g.goal[2] == doctest::Approx(support.z() + 2 * w.block_half_size));
  }
  SUBCASE("reach goals are uniform in their box") {
    const Box& box = m.spec(0).goal_bounds;
    const int n = 10000;
    Vec3 sum = Vec3::Zero();
    for (int k = 0; k < n; ++k) {
      const Vector g = SampleGoal(m, 0, obs, rng).goal;
      CHECK(box.Contains(g));
      sum += g;
    }
    const Vec3 mean = sum / n;
    for (int axis = 0; axis < 3; ++axis) {
      const double width = box.max[axis] - box.min[axis];
      const double sigma = width / std::sqrt(12.0 * n);
      CHECK(std::abs(mean[axis] - box.Center()[axis]) < 3 * sigma + 1e-12);
    }
  }
  SUBCASE("distractor goals are drawn over the distractor region") {
    for (int k = 0; k < 200; ++k) {
      const Vector g = SampleGoal(m, 5, obs, rng).goal;
      CHECK(g[0] >= w.distractor_region.min.x());
      CHECK(g[0] <= w.distractor_region.max.x());
    }
  }
}

TEST_CASE("policy input encoding of the toy example") {
  const WorldConfig w = DefaultWorldConfig();
  const ModuleSet m = ToyModules(w);
  const Observation obs = Vector::LinSpaced(w.observation_dim(), 1, 2);
  const int od = w.observation_dim();

  Vector g1(2);
  g1 << 0.3, 0.7;
  const Vector in1 = EncodePolicyInput(obs, {0, g1}, m);
  REQUIRE(in1.size() == od + 3 + 2);
  CHECK(in1.head(od) == obs);
  CHECK(in1[od] == 0.3);
  CHECK(in1[od + 1] == 0.7);
  CHECK(in1[od + 2] == 0.0);
  CHECK(in1[od + 3] == 1.0);
  CHECK(in1[od + 4] == 0.0);

  Vector g2(1);
  g2 << 0.5;
  const Vector in2 = EncodePolicyInput(obs, {1, g2}, m);
  CHECK(in2[od] == 0.0);
  CHECK(in2[od + 1] == 0.0);
  CHECK(in2[od + 2] == 0.5);
  CHECK(in2[od + 3] == 0.0);
  CHECK(in2[od + 4] == 1.0);

  CHECK_THROWS_AS(EncodePolicyInput(obs, {1, g1}, m), DimensionMismatchError);
  CHECK_THROWS_AS(EncodePolicyInput(obs, {2, g1}, m), UnknownModuleError);
}

TEST_CASE("encoding masks every inactive slice and decodes back") {
  const WorldConfig w = DefaultWorldConfig(4);
  const ModuleSet m = BuildModuleSet(w);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 100; ++k) {
    const auto [s, obs] = Reset(w, k);
    const int module = static_cast<int>(rng() % m.size());
    const GoalAssignment a = SampleGoal(m, module, obs, rng);
    const Vector in = EncodePolicyInput(obs, a, m);
    const Vector descriptor = in.tail(m.size());
    CHECK((descriptor.array() != 0.0).count() == 1);
    CHECK(descriptor[module] == 1.0);
    Vector goal = in.segment(m.observation_dim(), m.goal_dim());
    goal.segment(m.offset(module), m.spec(module).goal_dim).setZero();
    CHECK(goal.norm() == 0.0);
    const GoalAssignment back = DecodePolicyInput(in, m);
    CHECK(back.module == module);
    CHECK(back.goal == a.goal);
  }
}

TEST_CASE("outcome extraction uses perceived positions") {
  WorldConfig w = DefaultWorldConfig();
  const ModuleSet m = BuildModuleSet(w);
  auto [s, obs] = Reset(w, 4);
  s.gripper = Vec3(0.1, 0.2, 0.5);
  obs = Observe(w, s);
  CHECK(Vec3(ExtractOutcome(obs, m.spec(0))) == Vec3(0.1, 0.2, 0.5));
  for (const ModuleSpec& spec : m.specs()) {
    CHECK(ExtractOutcome(obs, spec).size() == spec.goal_dim);
  }
  const WorldConfig p = InjectPerturbation(w, 0, Vec3(0.05, 0, 0));
  const Observation shifted = Observe(p, s);
  CHECK(ExtractOutcome(shifted, m.spec(1))[0] ==
        doctest::Approx(s.blocks[0].x() + 0.05));
  CHECK(ExtractAllOutcomes(obs, m).size() == m.goal_dim());
}

TEST_CASE("reward examples and threshold") {
  const WorldConfig w = DefaultWorldConfig();
  const ModuleSet m = BuildModuleSet(w);
  const ModuleSpec& reach = m.spec(0);
  const ModuleSpec& stack = m.spec(3);
  const Vec3 far(1, 1, 1);
  CHECK(InternalReward(reach, Vec3(0.5, 0.5, 0.5), Vec3(0.5, 0.5, 0.52), far) == 0.0);
  CHECK(InternalReward(stack, Vec3(0.1, 0.1, 0.5), Vec3(0.1, 0.1, 0.5),
                       Vec3(0.1, 0.1, 0.5)) == -1.0);
  for (const ModuleSpec& spec : m.specs()) {
    const Vector g = Vector::Constant(spec.goal_dim, 0.1);
    CHECK(InternalReward(spec, g, g, far) == 0.0);
  }
  // Boundary at 0.05 with a 1e-6 margin on each side.
  const Vec3 goal(0, 0, 0.5);
  CHECK(InternalReward(reach, goal, goal + Vec3(0.05 - 1e-6, 0, 0), far) == 0.0);
  CHECK(InternalReward(reach, goal, goal + Vec3(0.05 + 1e-6, 0, 0), far) == -1.0);
  CHECK_THROWS_AS(InternalReward(reach, Eigen::Vector2d(0, 0), goal, far),
                  DimensionMismatchError);
}

TEST_CASE("reward is invariant under joint translation") {
  const ModuleSet m = BuildModuleSet(DefaultWorldConfig());
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int k = 0; k < 1000; ++k) {
    const ModuleSpec& spec = m.spec(static_cast<int>(rng() % 3));
    Vector g(spec.goal_dim), o(spec.goal_dim), t(spec.goal_dim);
    for (int i = 0; i < spec.goal_dim; ++i) {
      g[i] = u(rng);
      o[i] = g[i] + 0.5 * u(rng);
      t[i] = 3 * u(rng);
    }
    CHECK(InternalReward(spec, g, o, Vec3(5, 5, 5)) ==
          InternalReward(spec, g + t, o + t, Vec3(5, 5, 5)));
  }
}

TEST_CASE("flat reward is the conjunction over achievable slices") {
  const WorldConfig w = DefaultWorldConfig(2);
  const ModuleSet m = BuildModuleSet(w);
  const auto [s, obs] = Reset(w, 0);
  const Vector outcome = ExtractAllOutcomes(obs, m);
  const Vec3 gripper = GripperPosition(obs);
  Vector goal = outcome;
  // Stack's clearance cannot hold when block 1 rests on the table here; move
  // the gripper away instead.
  const Vec3 away(0.2, 0.2, 0.7);
  CHECK(FlatReward(m, goal, outcome, away) == 0.0);
  goal[m.offset(1)] += 0.2;
  CHECK(FlatReward(m, goal, outcome, away) == -1.0);
  // Distractor slices do not matter.
  goal = outcome;
  goal[m.offset(5)] += 1.0;
  CHECK(FlatReward(m, goal, outcome, away) == 0.0);
  (void)gripper;
  CHECK_THROWS_AS(FlatReward(m, Vector::Zero(3), outcome, away), DimensionMismatchError);
}

TEST_CASE("random flat goals are essentially never met") {
  const WorldConfig w = DefaultWorldConfig();
  const ModuleSet m = BuildModuleSet(w);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);
  int hits = 0;
  for (int k = 0; k < 10000; ++k) {
    auto [s, obs] = Reset(w, k);
    for (int t = 0; t < 5; ++t) {
      std::tie(s, obs) = Step(w, s, Action{{u(rng), u(rng), u(rng), u(rng)}});
    }
    const Vector goal = [&] {
      Vector g(m.goal_dim());
      for (int i = 0; i < m.size(); ++i) {
        g.segment(m.offset(i), m.spec(i).goal_dim) =
            SampleGoalVector(m.spec(i), obs, rng);
      }
      return g;
    }();
    if (FlatReward(m, goal, ExtractAllOutcomes(obs, m), GripperPosition(obs)) == 0.0) {
      ++hits;
    }
  }
  CHECK(hits <= 1);
}

TEST_CASE("outcome change test") {
  const WorldConfig w = DefaultWorldConfig(1);
  const ModuleSet m = BuildModuleSet(w);
  auto run = [&](const Action& first) {
    auto [s, obs] = Reset(w, 3);
    std::vector<std::vector<Vector>> out(m.size());
    for (int t = 0; t <= w.episode_length; ++t) {
      for (int i = 0; i < m.size(); ++i) out[i].push_back(ExtractOutcome(obs, m.spec(i)));
      if (t < w.episode_length) {
        std::tie(s, obs) = Step(w, s, t == 0 ? first : Action{});
      }
    }
    return out;
  };
  const auto still = run(Action{});
  CHECK_FALSE(OutcomeChanged(still[0]));
  CHECK_FALSE(OutcomeChanged(still[1]));
  CHECK(OutcomeChanged(still[4]));  // the distractor walks
  const auto moved = run(Action{{0.3, 0, 0, 0}});
  CHECK(OutcomeChanged(moved[0]));
  CHECK_FALSE(OutcomeChanged(std::vector<Vector>{}));
}
