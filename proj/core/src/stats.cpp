#include "cellprob/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cellprob/error.hpp"

namespace cellprob {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

std::vector<double> empirical_cdf(std::span<const double> sorted, std::span<const double> grid) {
  std::vector<double> out(grid.size(), 0.0);
  if (sorted.empty()) return out;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), grid[i]);
    out[i] = static_cast<double>(it - sorted.begin()) / n;
  }
  return out;
}

double scott_bandwidth(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double x : samples) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n - 1);
  const double sd = std::sqrt(var);
  if (!(sd > 0)) return 0.0;
  return std::pow(static_cast<double>(n), -0.2) * sd;
}

std::vector<double> kde_cdf(std::span<const double> samples, std::span<const double> grid, double bandwidth) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  if (!(bandwidth > 0)) return empirical_cdf(sorted, grid);
  std::vector<double> out(grid.size(), 0.0);
  if (sorted.empty()) return out;
  const double n = static_cast<double>(sorted.size());
  // Kernels more than `reach` bandwidths away contribute exactly 0 or 1
  // at double precision.
  const double reach = 9.0 * bandwidth;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - reach);
    const auto hi = std::upper_bound(sorted.begin(), sorted.end(), x + reach);
    double acc = static_cast<double>(lo - sorted.begin());
    for (auto it = lo; it != hi; ++it) acc += normal_cdf((x - *it) / bandwidth);
    out[i] = acc / n;
  }
  return out;
}

std::vector<double> uniform_grid(double max_value, std::size_t count) {
  std::vector<double> g(count, 0.0);
  if (count == 1) return g;
  for (std::size_t i = 0; i < count; ++i)
    g[i] = max_value * static_cast<double>(i) / static_cast<double>(count - 1);
  return g;
}

TestResult ks_2sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "KS test needs two nonempty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double ne = n * m / (n + m);
  const double sq = std::sqrt(ne);
  const double lambda = (sq + 0.12 + 0.11 / sq) * d;
  double p = 1.0;
  if (lambda > 0.2) {
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      sum += (k % 2 ? 1.0 : -1.0) * term;
      if (term < 1e-16) break;
    }
    p = std::clamp(2.0 * sum, 0.0, 1.0);
  }
  return {d, p};
}

TestResult wilcoxon_signed_rank(std::span<const double> diffs) {
  std::vector<double> d;
  for (double v : diffs)
    if (v != 0.0) d.push_back(v);
  if (d.empty()) throw Error(ErrorCode::AllZeroDifferences, "all paired differences are zero");
  const std::size_t n = d.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });
  // Twice the average ranks, which are always integers.
  std::vector<long> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const long r2 = static_cast<long>(i + 1 + j + 1);  // 2 * mean of ranks i+1 .. j+1
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  long w2 = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0) w2 += rank2[i];
  const double w = static_cast<double>(w2) / 2.0;
  const double nd = static_cast<double>(n);

  if (n <= kWilcoxonExactMax) {
    // Null distribution of 2W: every sign pattern equally likely.
    const long total2 = std::accumulate(rank2.begin(), rank2.end(), 0L);
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    long reach = 0;
    for (long r : rank2) {
      for (long s = reach; s >= 0; --s)
        if (count[static_cast<std::size_t>(s)] != 0.0) count[static_cast<std::size_t>(s + r)] += count[static_cast<std::size_t>(s)];
      reach += r;
    }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    double le = 0.0, ge = 0.0;
    for (long s = 0; s <= total2; ++s) {
      if (s <= w2) le += count[static_cast<std::size_t>(s)];
      if (s >= w2) ge += count[static_cast<std::size_t>(s)];
    }
    return {w, std::min(1.0, 2.0 * std::min(le, ge) / all)};
  }
  const double mean = nd * (nd + 1) / 4.0;
  const double var = nd * (nd + 1) * (2 * nd + 1) / 24.0 - tie_term / 48.0;
  if (!(var > 0)) return {w, 1.0};
  const double z = (w - mean) / std::sqrt(var);
  return {w, std::min(1.0, 2.0 * (1.0 - normal_cdf(std::abs(z))))};
}

}  // namespace cellprob
