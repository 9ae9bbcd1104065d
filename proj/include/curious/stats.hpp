#ifndef CURIOUS_STATS_HPP_
#define CURIOUS_STATS_HPP_

#include <span>
#include <stdexcept>
#include <vector>

namespace curious {

// Combined sample sizes up to this use exact enumeration.
inline constexpr int kExactUTestMaxSize = 12;

struct UTestResult {
  double u = 0.0;  // U of sample a (count of pairs with a > b, ties halved)
  double u_b = 0.0;
  double p = 1.0;  // one-tailed, alternative "a tends to exceed b"
  bool exact = false;
};

// Mann-Whitney U with midranks. Small samples enumerate every assignment of
// the untied ranks 1..n; larger ones use the normal approximation with tie
// and continuity correction. Throws std::invalid_argument on an empty sample.
UTestResult MannWhitneyU(std::span<const double> a, std::span<const double> b);

// Forces one branch; used to compare them on boundary sizes.
double MannWhitneyExactP(std::span<const double> a, std::span<const double> b);
double MannWhitneyNormalP(std::span<const double> a,
                          std::span<const double> b);

// Midranks (1-based) of `values`.
std::vector<double> Midranks(std::span<const double> values);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p = 1.0;
};

// Homogeneity test of two count vectors over the same categories.
// Categories empty in both samples are dropped.
ChiSquareResult ChiSquareHomogeneity(std::span<const long> a,
                                     std::span<const long> b);

// Goodness of fit of `observed` against probabilities `expected`.
ChiSquareResult ChiSquareGoodnessOfFit(std::span<const long> observed,
                                       std::span<const double> expected);

double Mean(std::span<const double> values);
// Sample standard deviation (n - 1); zero for fewer than two values.
double StdDev(std::span<const double> values);

}  // namespace curious

#endif  // CURIOUS_STATS_HPP_
