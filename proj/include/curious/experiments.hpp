#ifndef CURIOUS_EXPERIMENTS_HPP_
#define CURIOUS_EXPERIMENTS_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "curious/agent.hpp"
#include "curious/config.hpp"
#include "curious/evaluation.hpp"

namespace curious {

// One (variant, distractor count, seed) combination of an experiment.
struct CellSpec {
  Variant variant = Variant::kCurious;
  int n_distractors = 0;
  std::uint64_t seed = 0;

  // File stem, e.g. "curious_d4_s3".
  std::string Name() const;
};

std::vector<CellSpec> ExpandCells(const ExperimentConfig& config);

// Agent configuration of a single cell.
AgentConfig CellAgentConfig(const ExperimentConfig& config, const CellSpec& cell);

// Per-epoch series of one run. Module series are indexed [epoch][module].
struct RunResults {
  CellSpec cell;
  std::vector<std::string> modules;
  std::vector<std::vector<double>> success;
  std::vector<std::vector<double>> competence;
  std::vector<std::vector<double>> progress;
  std::vector<std::vector<double>> probability;
  std::vector<double> average;  // success averaged over achievable modules
  std::vector<double> critic_loss;

  int epochs() const { return static_cast<int>(average.size()); }
  int ModuleIndex(const std::string& name) const;
};

// Called after every epoch with the state right after evaluation.
using EpochObserver = std::function<void(const Agent& agent,
                                         const EpochReport& report,
                                         const EvaluationResult& eval)>;

// Trains and evaluates one cell for config.epochs epochs, injecting the
// perturbation when configured. Evaluation draws come from their own stream
// seeded by (seed, epoch), so they never disturb training.
RunResults RunCell(const ExperimentConfig& config, const CellSpec& cell,
                   const EpochObserver& observer = {},
                   Agent* final_agent = nullptr);

// CSV with columns epoch,module,success_rate,C,LP,p_LP,critic_loss. A row
// with module "average" carries the achievable-average success and leaves
// the LP columns empty.
void WriteRunCsv(std::ostream& out, const RunResults& results);
RunResults ReadRunCsv(std::istream& in);
std::string RunCsv(const RunResults& results);

// Hash of `content` as git computes it for a blob (SHA-1, hex).
std::string GitBlobHash(const std::string& content);

// JSON sidecar describing a run.
std::string RunMetadataJson(const ExperimentConfig& config, const CellSpec& cell,
                            const ModuleSet& modules, const std::string& csv_hash);

// Per-epoch comparison of the mean achievable success across seeds.
struct SummaryRow {
  int epoch = 0;
  int n_distractors = 0;
  Variant variant = Variant::kCurious;
  double mean = 0.0;
  double std = 0.0;
  int seeds = 0;
};

struct SignificanceRow {
  int epoch = 0;
  int n_distractors = 0;
  double p_value = 1.0;  // curious > m-uvfa-random, one-tailed U test
  bool significant = false;
};

struct ExperimentSummary {
  std::vector<SummaryRow> rows;
  std::vector<SignificanceRow> significance;
};

ExperimentSummary Summarize(const std::vector<RunResults>& runs, double alpha);
void WriteSummaryCsv(std::ostream& out, const ExperimentSummary& summary);
void WriteSignificanceCsv(std::ostream& out, const ExperimentSummary& summary);

struct ExperimentOutcome {
  std::vector<std::string> completed;
  std::vector<std::string> failed;
  std::vector<std::string> skipped;  // already complete from a previous run
};

// Runs every cell (in parallel up to config.jobs), writing into
// config.out_dir: config.txt, one <cell>.csv and <cell>.json per run,
// manifest.json (rewritten after each cell), summary.csv and
// significance.csv. Cells already listed as complete in a manifest with the
// same configuration hash are not run again.
ExperimentOutcome RunExperiment(const ExperimentConfig& config,
                                std::ostream& log);

}  // namespace curious

#endif  // CURIOUS_EXPERIMENTS_HPP_
