#ifndef CURIOUS_PLOT_HPP_
#define CURIOUS_PLOT_HPP_

#include <string>
#include <vector>

#include "curious/experiments.hpp"

namespace curious {

// Mean and sample standard deviation of one series across runs, truncated to
// the shortest run.
struct Band {
  std::vector<double> mean;
  std::vector<double> std;
};

Band AggregateSeries(const std::vector<std::vector<double>>& series);

// Writes SVG figures into `out_dir` and returns their paths:
//   success.svg             mean +- std achievable success per run group,
//                           significance dots where `significance` is set
//   modules_<group>.svg     per-module success, C, LP and p_LP panels
// Runs are grouped by (variant, distractor count). Output depends only on
// the inputs.
std::vector<std::string> PlotRuns(const std::vector<RunResults>& runs,
                                  const std::vector<SignificanceRow>& significance,
                                  const std::string& out_dir);

// Loads result CSVs (cell identity from the JSON sidecar next to each file,
// significance.csv from the first file's directory when present) and plots
// them. Throws std::runtime_error on malformed files.
std::vector<std::string> PlotFiles(std::vector<std::string> csv_paths,
                                   const std::string& out_dir);

}  // namespace curious

#endif  // CURIOUS_PLOT_HPP_
