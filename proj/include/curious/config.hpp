#ifndef CURIOUS_CONFIG_HPP_
#define CURIOUS_CONFIG_HPP_

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "curious/agent.hpp"

namespace curious {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ExperimentKind { kCompareArch, kCurriculumViz, kPerturbation, kDistractors };

const char* ToString(ExperimentKind kind);
ExperimentKind ParseExperiment(const std::string& name);

struct PerturbationSpec {
  bool enabled = false;
  int epoch = 0;  // injected before this epoch runs
  int block = 1;  // cube 2
  Vec3 offset{0.05, 0.0, 0.0};
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kCompareArch;
  std::vector<Variant> variants;
  std::vector<int> distractors{0};
  std::vector<std::uint64_t> seeds;
  int epochs = 150;
  int eval_rollouts = 20;
  PerturbationSpec perturbation;
  // Significance level of the per-epoch curious vs m-uvfa-random test.
  double alpha = 0.01;
  std::string out_dir = "results";
  // Worker threads for independent cells; 0 picks the hardware count.
  int jobs = 0;
  // Write an agent checkpoint next to every finished run.
  bool save_checkpoints = false;
  // Template for every cell; variant, seed and distractor count are set per
  // cell.
  AgentConfig agent;

  void Validate() const;
};

// Named presets: "desk", "paper" and "acceptance" (single actor, short
// epochs). Experiment-specific defaults (variants, modules, perturbation)
// are filled in for `kind`.
ExperimentConfig MakePreset(const std::string& preset, ExperimentKind kind);

// Applies one key=value setting. Throws ConfigError on unknown keys or
// malformed values.
void ApplySetting(ExperimentConfig& config, const std::string& key,
                  const std::string& value);

// Flat key=value lines; '#' starts a comment, blank lines are ignored.
void ApplyConfigText(ExperimentConfig& config, std::istream& in);
void ApplyConfigFile(ExperimentConfig& config, const std::string& path);

// Every setting as sorted key=value lines. Applying the output to any config
// reproduces `config`.
std::string RenderConfig(const ExperimentConfig& config);

// Key names understood by ApplySetting.
std::vector<std::string> ConfigKeys();

}  // namespace curious

#endif  // CURIOUS_CONFIG_HPP_
