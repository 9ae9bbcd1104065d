// Command-line front end: run experiments, evaluate checkpoints, plot
// results and self-check the statistics.

#include <glob.h>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "curious/config.hpp"
#include "curious/evaluation.hpp"
#include "curious/experiments.hpp"
#include "curious/plot.hpp"
#include "curious/stats.hpp"

namespace {

using namespace curious;

struct RunOptions {
  std::string experiment = "compare-arch";
  std::string preset = "desk";
  std::string config_file;
  std::string variants;
  std::string seeds;
  std::string distractors;
  int epochs = 0;
  int actors = 0;
  int jobs = -1;
  std::string out;
  std::vector<std::string> settings;
  bool print_config = false;
};

int Run(const RunOptions& o) {
  ExperimentConfig config = MakePreset(o.preset, ParseExperiment(o.experiment));
  if (!o.config_file.empty()) ApplyConfigFile(config, o.config_file);
  if (!o.variants.empty()) ApplySetting(config, "variants", o.variants);
  if (!o.seeds.empty()) ApplySetting(config, "seeds", o.seeds);
  if (!o.distractors.empty()) ApplySetting(config, "distractors", o.distractors);
  if (o.epochs > 0) config.epochs = o.epochs;
  if (o.actors > 0) config.agent.variant.actors = o.actors;
  if (o.jobs >= 0) config.jobs = o.jobs;
  if (!o.out.empty()) config.out_dir = o.out;
  for (const std::string& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got '" + s + "'");
    }
    ApplySetting(config, s.substr(0, eq), s.substr(eq + 1));
  }
  config.Validate();
  if (o.print_config) {
    std::cout << RenderConfig(config);
    return 0;
  }
  const ExperimentOutcome outcome = RunExperiment(config, std::cerr);
  std::cerr << outcome.completed.size() << " completed, " << outcome.skipped.size()
            << " already done, " << outcome.failed.size() << " failed; results in "
            << config.out_dir << "\n";
  return outcome.failed.empty() ? 0 : 1;
}

int EvaluateCheckpoint(const std::string& path, int rollouts, std::uint64_t seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot open " << path << "\n";
    return 1;
  }
  const Agent agent = Agent::LoadCheckpoint(in);
  std::mt19937_64 rng(seed);
  const EvaluationResult r = EvaluateAgent(agent, rollouts, rng);
  std::cout << "variant " << ToString(agent.config().variant.variant) << ", epoch "
            << agent.epoch() << ", " << r.rollouts << " rollouts\n";
  std::cout << std::fixed << std::setprecision(3);
  for (int i = 0; i < agent.modules().size(); ++i) {
    std::cout << "  " << std::left << std::setw(24) << agent.modules().spec(i).name;
    if (r.attempts[i] == 0) {
      std::cout << "-\n";
    } else {
      std::cout << r.success_rate[i] << "  (" << r.attempts[i] << " goals)\n";
    }
  }
  std::cout << "  average                 " << r.average << "  (+- "
            << r.half_width << ")\n";
  return 0;
}

int Plot(const std::string& pattern, const std::string& out_dir) {
  glob_t g{};
  const int rc = glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<std::string> paths;
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) {
      const std::string p = g.gl_pathv[i];
      // Summary tables live next to the run files.
      const std::string base = p.substr(p.find_last_of('/') + 1);
      if (base == "summary.csv" || base == "significance.csv") continue;
      paths.push_back(p);
    }
  }
  globfree(&g);
  if (paths.empty()) {
    std::cerr << "no files match " << pattern << "\n";
    return 1;
  }
  for (const std::string& p : PlotFiles(paths, out_dir)) std::cout << p << "\n";
  return 0;
}

// Checks the U test against known values and a permutation test.
int TestStats() {
  bool ok = true;
  auto report = [&](const std::string& what, bool pass, double value) {
    std::cout << (pass ? "PASS " : "FAIL ") << what << " (" << value << ")\n";
    ok = ok && pass;
  };
  const std::vector<double> low{1, 2, 3};
  const std::vector<double> high{4, 5, 6};
  const UTestResult extreme = MannWhitneyU(high, low);
  report("{4,5,6} > {1,2,3}: p = 0.05", std::abs(extreme.p - 0.05) < 1e-12,
         extreme.p);
  const UTestResult same = MannWhitneyU(low, low);
  report("identical samples: p = 0.5", std::abs(same.p - 0.5) < 1e-12, same.p);

  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(10);
    std::vector<double> b(10);
    for (double& x : a) x = normal(rng) + 0.5;
    for (double& x : b) x = normal(rng);
    const double u_obs = MannWhitneyU(a, b).u;
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const int resamples = 100000;
    int hits = 0;
    for (int k = 0; k < resamples; ++k) {
      std::shuffle(pooled.begin(), pooled.end(), rng);
      const std::span<const double> all(pooled);
      if (MannWhitneyU(all.first(10), all.subspan(10)).u >= u_obs - 1e-9) ++hits;
    }
    const double p_perm = static_cast<double>(hits) / resamples;
    worst = std::max(worst, std::abs(p_perm - MannWhitneyU(a, b).p));
  }
  report("10 vs 10 against permutation test: |dp| < 0.01", worst < 0.01, worst);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curiosity-driven modular multi-goal reinforcement learning"};
  app.require_subcommand(1);

  RunOptions run;
  CLI::App* run_cmd = app.add_subcommand("run", "Run an experiment");
  run_cmd->add_option("--experiment", run.experiment,
                      "compare-arch, curriculum-viz, perturbation or distractors")
      ->capture_default_str();
  run_cmd->add_option("--preset", run.preset, "desk, paper or acceptance")
      ->capture_default_str();
  run_cmd->add_option("--config", run.config_file, "key=value file");
  run_cmd->add_option("--variant", run.variants,
                      "comma list of curious, m-uvfa-random, her-flat, mg-me");
  run_cmd->add_option("--seeds", run.seeds, "e.g. 0-9 or 0,3,5");
  run_cmd->add_option("--distractors", run.distractors, "comma list, e.g. 0,4,7");
  run_cmd->add_option("--epochs", run.epochs);
  run_cmd->add_option("--actors", run.actors);
  run_cmd->add_option("--jobs", run.jobs, "parallel cells, 0 = all cores");
  run_cmd->add_option("--out", run.out, "output directory");
  run_cmd->add_option("--set", run.settings, "override any key=value");
  run_cmd->add_flag("--print-config", run.print_config,
                    "print the resolved configuration and exit");

  std::string checkpoint;
  int rollouts = 100;
  std::uint64_t eval_seed = 0;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  eval_cmd->add_option("checkpoint", checkpoint)->required();
  eval_cmd->add_option("--rollouts", rollouts)->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_seed)->capture_default_str();

  std::string pattern;
  std::string plot_out = "plots";
  CLI::App* plot_cmd = app.add_subcommand("plot", "Plot result CSVs");
  plot_cmd->add_option("glob", pattern, "e.g. 'results/*.csv'")->required();
  plot_cmd->add_option("--out", plot_out)->capture_default_str();

  CLI::App* stats_cmd =
      app.add_subcommand("test-stats", "Self-check the Mann-Whitney U test");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return Run(run);
    if (*eval_cmd) return EvaluateCheckpoint(checkpoint, rollouts, eval_seed);
    if (*plot_cmd) return Plot(pattern, plot_out);
    if (*stats_cmd) return TestStats();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
