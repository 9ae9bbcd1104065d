#include <sstream>

#include "curious/config.hpp"
#include "doctest.h"

using namespace curious;

TEST_CASE("presets validate and render round trip") {
  for (const char* preset : {"desk", "paper", "acceptance"}) {
    for (ExperimentKind kind :
         {ExperimentKind::kCompareArch, ExperimentKind::kCurriculumViz,
          ExperimentKind::kPerturbation, ExperimentKind::kDistractors}) {
      CAPTURE(preset);
      CAPTURE(ToString(kind));
      const ExperimentConfig c = MakePreset(preset, kind);
      CHECK_NOTHROW(c.Validate());
      const std::string text = RenderConfig(c);
      // Applying the rendering onto a different config reproduces it.
      ExperimentConfig other = MakePreset("desk", ExperimentKind::kCompareArch);
      std::istringstream in(text);
      ApplyConfigText(other, in);
      CHECK(RenderConfig(other) == text);
      CHECK(ParseExperiment(ToString(kind)) == kind);
    }
  }
  CHECK_THROWS_AS(MakePreset("laptop", ExperimentKind::kCompareArch), ConfigError);
  CHECK_THROWS_AS(ParseExperiment("ablation"), ConfigError);
}

TEST_CASE("preset contents") {
  const ExperimentConfig desk = MakePreset("desk", ExperimentKind::kCompareArch);
  CHECK(desk.agent.variant.actors == 4);
  CHECK(desk.agent.variant.lp_window == 30);
  CHECK(desk.seeds.size() == 10);
  CHECK(desk.variants.size() == 4);
  const ExperimentConfig paper = MakePreset("paper", ExperimentKind::kCompareArch);
  CHECK(paper.agent.variant.actors == 19);
  CHECK(paper.agent.variant.lp_window == 300);
  CHECK(paper.agent.learner.hidden == std::vector<int>{256, 256, 256});
  const ExperimentConfig pert = MakePreset("desk", ExperimentKind::kPerturbation);
  CHECK(pert.perturbation.enabled);
  CHECK(pert.perturbation.block == 1);
  CHECK(pert.perturbation.offset == Vec3(0.05, 0, 0));
  const ExperimentConfig dis = MakePreset("desk", ExperimentKind::kDistractors);
  CHECK(dis.distractors == std::vector<int>{0, 4, 7});
}

TEST_CASE("settings") {
  ExperimentConfig c = MakePreset("desk", ExperimentKind::kCompareArch);
  ApplySetting(c, "seeds", "3-6");
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 4, 5, 6});
  ApplySetting(c, "seeds", "1,4,9");
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 4, 9});
  ApplySetting(c, "variants", "curious, her-flat");
  CHECK(c.variants == std::vector<Variant>{Variant::kCurious, Variant::kHerFlat});
  ApplySetting(c, "learner.hidden", "32,16");
  CHECK(c.agent.learner.hidden == std::vector<int>{32, 16});
  ApplySetting(c, "modules", "reach,push_cube1");
  CHECK(c.agent.modules == std::vector<std::string>{"reach", "push_cube1"});
  ApplySetting(c, "variant.threads", "true");
  CHECK(c.agent.variant.threads);
  ApplySetting(c, "world.gripper_start", "0.1,0,0.5");
  CHECK(c.agent.world.gripper_start == Vec3(0.1, 0, 0.5));
  ApplySetting(c, "variant.epsilon", "1");
  CHECK(c.agent.variant.epsilon == 1.0);

  std::istringstream text("# comment\n\nepochs = 12\nalpha=0.05  # trailing\n");
  ApplyConfigText(c, text);
  CHECK(c.epochs == 12);
  CHECK(c.alpha == 0.05);
}

TEST_CASE("setting errors") {
  ExperimentConfig c = MakePreset("desk", ExperimentKind::kCompareArch);
  CHECK_THROWS_AS(ApplySetting(c, "nonsense", "1"), ConfigError);
  CHECK_THROWS_AS(ApplySetting(c, "epochs", "ten"), ConfigError);
  CHECK_THROWS_AS(ApplySetting(c, "epochs", "1.5"), ConfigError);
  CHECK_THROWS_AS(ApplySetting(c, "variant.threads", "maybe"), ConfigError);
  CHECK_THROWS_AS(ApplySetting(c, "world.gripper_start", "1,2"), ConfigError);
  CHECK_THROWS_AS(ApplySetting(c, "seeds", "9-3"), ConfigError);
  CHECK_THROWS_AS(ApplySetting(c, "variants", "curious,ddpg"), ConfigError);
  CHECK_THROWS_AS(ApplySetting(c, "learner.hidden", "0"), ConfigError);
  std::istringstream bad("epochs\n");
  CHECK_THROWS_AS(ApplyConfigText(c, bad), ConfigError);
  CHECK_THROWS_AS(ApplyConfigFile(c, "/nonexistent/config.txt"), ConfigError);
  CHECK(!ConfigKeys().empty());
}

TEST_CASE("validation") {
  auto invalid = [](const char* key, const char* value) {
    ExperimentConfig c = MakePreset("desk", ExperimentKind::kCompareArch);
    ApplySetting(c, key, value);
    CHECK_THROWS_AS(c.Validate(), ConfigError);
  };
  invalid("epochs", "0");
  invalid("eval_rollouts", "0");
  invalid("alpha", "1");
  invalid("distractors", "-1");
  invalid("variant.p_eval", "1.2");
  invalid("variant.actors", "0");
  invalid("world.episode_length", "0");
  ExperimentConfig c = MakePreset("desk", ExperimentKind::kPerturbation);
  c.perturbation.epoch = c.epochs;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
}
