#include "curious/lp_tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "curious/modules.hpp"

namespace curious {

namespace {

double Mean(std::deque<bool>::const_iterator first,
            std::deque<bool>::const_iterator last) {
  const auto n = std::distance(first, last);
  if (n == 0) return 0.0;
  return static_cast<double>(std::count(first, last, true)) /
         static_cast<double>(n);
}

}  // namespace

std::vector<double> LpProbabilities(const std::vector<double>& progress,
                                    double epsilon) {
  const double n = static_cast<double>(progress.size());
  double total = 0.0;
  for (double lp : progress) total += std::abs(lp);
  std::vector<double> p(progress.size());
  for (std::size_t i = 0; i < progress.size(); ++i) {
    const double focus = total > 0.0 ? std::abs(progress[i]) / total : 1.0 / n;
    p[i] = epsilon / n + (1.0 - epsilon) * focus;
  }
  return p;
}

LpTracker::LpTracker(int n_modules, int window, double epsilon)
    : window_(window),
      epsilon_(epsilon),
      results_(n_modules),
      n_eval_(n_modules, 0),
      competence_(n_modules, 0.0),
      progress_(n_modules, 0.0) {
  if (n_modules < 1) throw std::invalid_argument("need at least one module");
  if (window < 1) throw std::invalid_argument("LP window must be >= 1");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("epsilon must lie in [0, 1]");
  }
  UpdateProbabilities();
}

void LpTracker::CheckModule(int module) const {
  if (module < 0 || module >= n_modules()) {
    throw UnknownModuleError("unknown module id " + std::to_string(module));
  }
}

void LpTracker::RecordResult(int module, bool success) {
  CheckModule(module);
  auto& queue = results_[module];
  queue.push_back(success);
  while (static_cast<int>(queue.size()) > 2 * window_) queue.pop_front();
  ++n_eval_[module];
  UpdateModule(module);
  UpdateProbabilities();
}

void LpTracker::Restore(int module, std::deque<bool> results, long n_eval) {
  CheckModule(module);
  while (static_cast<int>(results.size()) > 2 * window_) results.pop_front();
  results_[module] = std::move(results);
  n_eval_[module] = n_eval;
  UpdateModule(module);
  UpdateProbabilities();
}

void LpTracker::UpdateModule(int module) {
  const auto& queue = results_[module];
  const int n = static_cast<int>(queue.size());
  const int recent = std::min(n, window_);
  competence_[module] = Mean(queue.end() - recent, queue.end());
  if (n >= 2 * window_) {
    const double previous =
        Mean(queue.end() - 2 * window_, queue.end() - window_);
    progress_[module] = competence_[module] - previous;
  } else {
    progress_[module] = 0.0;
  }
}

void LpTracker::UpdateProbabilities() {
  probabilities_ = LpProbabilities(progress_, epsilon_);
}

double LpTracker::Competence(int module) const {
  CheckModule(module);
  return competence_[module];
}

double LpTracker::LearningProgress(int module) const {
  CheckModule(module);
  return progress_[module];
}

int LpTracker::SelectModule(std::mt19937_64& rng, bool self_eval) const {
  if (self_eval) {
    return std::uniform_int_distribution<int>(0, n_modules() - 1)(rng);
  }
  std::discrete_distribution<int> draw(probabilities_.begin(),
                                       probabilities_.end());
  return draw(rng);
}

}  // namespace curious
