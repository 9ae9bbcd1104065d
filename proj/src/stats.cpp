#include "curious/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace curious {

namespace {

void CheckNonEmpty(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("Mann-Whitney U needs two non-empty samples");
  }
}

std::vector<double> Pooled(std::span<const double> a,
                           std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  return pooled;
}

// U of sample a computed from midranks of the pooled sample.
double UStatistic(std::span<const double> a, std::span<const double> b) {
  const std::vector<double> ranks = Midranks(Pooled(a, b));
  const double na = static_cast<double>(a.size());
  const double rank_sum =
      std::accumulate(ranks.begin(), ranks.begin() + a.size(), 0.0);
  return rank_sum - na * (na + 1.0) / 2.0;
}

ChiSquareResult Finish(double statistic, int dof) {
  ChiSquareResult r;
  r.statistic = statistic;
  r.dof = dof;
  if (dof <= 0) {
    r.p = 1.0;
    return r;
  }
  const boost::math::chi_squared dist(dof);
  r.p = boost::math::cdf(boost::math::complement(dist, statistic));
  return r;
}

}  // namespace

std::vector<double> Midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return values[i] < values[j];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j share the mean of ranks i+1..j+1.
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double MannWhitneyExactP(std::span<const double> a,
                         std::span<const double> b) {
  CheckNonEmpty(a, b);
  const int na = static_cast<int>(a.size());
  const int n = na + static_cast<int>(b.size());
  if (n > 20) throw std::invalid_argument("sample too large to enumerate");
  const double observed = UStatistic(a, b);
  const double offset = na * (na + 1) / 2.0;
  long at_least = 0;
  long total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != na) continue;
    int rank_sum = 0;
    for (int r = 0; r < n; ++r) {
      if (mask & (1u << r)) rank_sum += r + 1;
    }
    ++total;
    if (rank_sum - offset >= observed - 1e-9) ++at_least;
  }
  return static_cast<double>(at_least) / static_cast<double>(total);
}

double MannWhitneyNormalP(std::span<const double> a,
                          std::span<const double> b) {
  CheckNonEmpty(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  const double u = UStatistic(a, b);

  std::vector<double> pooled = Pooled(a, b);
  std::sort(pooled.begin(), pooled.end());
  double ties = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double mean = na * nb / 2.0;
  const double variance =
      na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  if (!(variance > 0.0)) return 0.5;
  const double z = (u - mean - 0.5) / std::sqrt(variance);
  const boost::math::normal standard;
  return boost::math::cdf(boost::math::complement(standard, z));
}

UTestResult MannWhitneyU(std::span<const double> a, std::span<const double> b) {
  CheckNonEmpty(a, b);
  UTestResult r;
  r.u = UStatistic(a, b);
  r.u_b = static_cast<double>(a.size() * b.size()) - r.u;
  r.exact = static_cast<int>(a.size() + b.size()) <= kExactUTestMaxSize;
  r.p = r.exact ? MannWhitneyExactP(a, b) : MannWhitneyNormalP(a, b);
  return r;
}

ChiSquareResult ChiSquareHomogeneity(std::span<const long> a,
                                     std::span<const long> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("count vectors differ in length");
  }
  const double total_a = std::accumulate(a.begin(), a.end(), 0.0);
  const double total_b = std::accumulate(b.begin(), b.end(), 0.0);
  const double total = total_a + total_b;
  if (total_a <= 0.0 || total_b <= 0.0) {
    throw std::invalid_argument("each sample needs at least one count");
  }
  double statistic = 0.0;
  int categories = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double column = static_cast<double>(a[k] + b[k]);
    if (column == 0.0) continue;
    ++categories;
    const double ea = total_a * column / total;
    const double eb = total_b * column / total;
    statistic += (a[k] - ea) * (a[k] - ea) / ea + (b[k] - eb) * (b[k] - eb) / eb;
  }
  return Finish(statistic, categories - 1);
}

ChiSquareResult ChiSquareGoodnessOfFit(std::span<const long> observed,
                                       std::span<const double> expected) {
  if (observed.size() != expected.size()) {
    throw std::invalid_argument("observed and expected differ in length");
  }
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
  double statistic = 0.0;
  int categories = 0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    if (expected[k] <= 0.0) {
      if (observed[k] != 0) {
        throw std::invalid_argument("count in a category with zero probability");
      }
      continue;
    }
    ++categories;
    const double e = total * expected[k];
    statistic += (observed[k] - e) * (observed[k] - e) / e;
  }
  return Finish(statistic, categories - 1);
}

double Mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double StdDev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = Mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace curious
