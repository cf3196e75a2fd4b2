#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cellprob {

/// Fraction of `sorted` samples <= x, for each x in `grid`.
std::vector<double> empirical_cdf(std::span<const double> sorted, std::span<const double> grid);

/// Scott's rule for 1D data: n^(-1/5) times the sample SD (n - 1
/// denominator). Returns 0 for fewer than two samples or zero spread.
double scott_bandwidth(std::span<const double> samples);

/// CDF of a Gaussian KDE with the given bandwidth, evaluated in closed form
/// (mean of normal CDFs). A bandwidth of 0 falls back to the empirical CDF.
/// `samples` need not be sorted.
std::vector<double> kde_cdf(std::span<const double> samples, std::span<const double> grid, double bandwidth);

/// `count` points evenly spaced over [0, max_value].
std::vector<double> uniform_grid(double max_value, std::size_t count);

struct TestResult {
  double statistic;
  double p_value;
};

/// Two-sample Kolmogorov-Smirnov: sup |F_a - F_b| and the two-sided
/// asymptotic p-value Q_KS((sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) * D) with
/// ne = n m / (n + m). Throws InvalidArgument on an empty sample.
TestResult ks_2sample(std::span<const double> a, std::span<const double> b);

/// Two-sided Wilcoxon signed-rank test on paired differences. Zeros are
/// dropped; tied |d| get average ranks. The statistic is the rank sum of
/// the positive differences. For n <= 12 the p-value is exact,
/// 2 * min(P(W <= w), P(W >= w)) capped at 1, from the null distribution of
/// the actual (possibly tied) ranks; otherwise a tie-corrected normal
/// approximation without continuity correction. Throws AllZeroDifferences.
TestResult wilcoxon_signed_rank(std::span<const double> diffs);

inline constexpr std::size_t kWilcoxonExactMax = 12;

}  // namespace cellprob
