#ifndef CURIOUS_LP_TRACKER_HPP_
#define CURIOUS_LP_TRACKER_HPP_

#include <deque>
#include <random>
#include <vector>

namespace curious {

// Per-module competence and absolute learning progress estimated from
// self-evaluation results, and the module-selection probabilities derived
// from them.
//
// Competence is the success rate over the last `window` results (fewer while
// the history is shorter). Learning progress is the difference between the
// last window and the one before it; it stays 0 until 2 * window results
// exist. Probabilities mix a uniform term of weight `epsilon` with a term
// proportional to |LP|, falling back to uniform when every |LP| is 0.
class LpTracker {
 public:
  LpTracker(int n_modules, int window, double epsilon);

  void RecordResult(int module, bool success);

  double Competence(int module) const;
  double LearningProgress(int module) const;
  const std::vector<double>& Probabilities() const { return probabilities_; }

  // Categorical draw from Probabilities(), or uniform when `self_eval`.
  int SelectModule(std::mt19937_64& rng, bool self_eval) const;

  int n_modules() const { return static_cast<int>(results_.size()); }
  int window() const { return window_; }
  double epsilon() const { return epsilon_; }
  long evaluations(int module) const { return n_eval_.at(module); }
  const std::deque<bool>& results(int module) const { return results_.at(module); }

  // Replaces the stored history of one module (used to restore checkpoints).
  void Restore(int module, std::deque<bool> results, long n_eval);

 private:
  void CheckModule(int module) const;
  void UpdateModule(int module);
  void UpdateProbabilities();

  int window_;
  double epsilon_;
  std::vector<std::deque<bool>> results_;
  std::vector<long> n_eval_;
  std::vector<double> competence_;
  std::vector<double> progress_;
  std::vector<double> probabilities_;
};

// The mixture itself, exposed for direct use on arbitrary LP vectors.
std::vector<double> LpProbabilities(const std::vector<double>& progress,
                                    double epsilon);

}  // namespace curious

#endif  // CURIOUS_LP_TRACKER_HPP_
