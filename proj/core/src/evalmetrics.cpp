#include "cellprob/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cellprob/error.hpp"

namespace cellprob {

std::vector<long> solve_assignment(std::size_t rows, std::size_t cols, const std::vector<double>& cost) {
  if (cost.size() != rows * cols) throw Error(ErrorCode::InvalidArgument, "cost matrix size mismatch");
  std::vector<long> result(rows, -1);
  if (rows == 0 || cols == 0) return result;
  const bool transposed = rows > cols;
  const std::size_t n = transposed ? cols : rows;  // n <= m
  const std::size_t m = transposed ? rows : cols;
  auto a = [&](std::size_t i, std::size_t j) { return transposed ? cost[j * cols + i] : cost[i * cols + j]; };

  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] is the row matched to column j (0 = none).
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    if (transposed) result[j - 1] = static_cast<long>(p[j] - 1);
    else result[p[j] - 1] = static_cast<long>(j - 1);
  }
  return result;
}

std::vector<MatchPair> hungarian_match(const CoordSet& gt, const CoordSet& pred) {
  std::vector<double> cost(gt.size() * pred.size());
  for (std::size_t i = 0; i < gt.size(); ++i)
    for (std::size_t j = 0; j < pred.size(); ++j) cost[i * pred.size() + j] = distance(gt.points[i], pred.points[j]);
  const auto assign = solve_assignment(gt.size(), pred.size(), cost);
  std::vector<MatchPair> pairs;
  for (std::size_t i = 0; i < assign.size(); ++i)
    if (assign[i] >= 0) {
      const auto j = static_cast<std::size_t>(assign[i]);
      pairs.push_back({i, j, distance(gt.points[i], pred.points[j])});
    }
  return pairs;
}

MatchReport score_detection(const CoordSet& gt, const CoordSet& pred, double t_match) {
  if (!(t_match > 0)) throw Error(ErrorCode::InvalidArgument, "t_match must be > 0");
  MatchReport r;
  r.t_match = t_match;
  std::vector<char> gt_hit(gt.size(), 0), pred_hit(pred.size(), 0);
  for (const auto& pr : hungarian_match(gt, pred)) {
    if (pr.distance <= t_match) {
      r.pairs.push_back(pr);
      gt_hit[pr.gt] = 1;
      pred_hit[pr.pred] = 1;
    }
  }
  for (std::size_t i = 0; i < gt.size(); ++i)
    if (!gt_hit[i]) r.unmatched_gt.push_back(i);
  for (std::size_t j = 0; j < pred.size(); ++j)
    if (!pred_hit[j]) r.unmatched_pred.push_back(j);
  r.tp = r.pairs.size();
  r.fn = r.unmatched_gt.size();
  r.fp = r.unmatched_pred.size();
  r.precision_defined = r.tp + r.fp > 0;
  r.recall_defined = r.tp + r.fn > 0;
  r.precision = r.precision_defined ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
  r.recall = r.recall_defined ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
  r.f1 = r.tp == 0 ? 0.0 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

CalibrationScore score_calibration(const MatchReport& report, const CoordSet& gt, const CoordSet& pred,
                                   double eps) {
  pred.validate();
  auto prob = [&](std::size_t j) { return pred.prob.empty() ? 1.0 : pred.prob[j]; };
  auto clip = [&](double q) { return std::clamp(q, eps, 1.0 - eps); };
  CalibrationScore s;
  double brier = 0, nll = 0;
  for (const auto& pr : report.pairs) {
    const double q = prob(pr.pred);
    brier += (1.0 - q) * (1.0 - q);
    nll -= std::log(clip(q));
  }
  // Unmatched GT: partner probability 0.
  brier += static_cast<double>(report.unmatched_gt.size());
  nll -= static_cast<double>(report.unmatched_gt.size()) * std::log(clip(0.0));
  for (std::size_t j : report.unmatched_pred) {
    const double q = prob(j);
    brier += q * q;
    nll -= std::log(1.0 - clip(q));
  }
  s.terms = gt.size() + report.unmatched_pred.size();
  if (s.terms > 0) {
    s.brier = brier / static_cast<double>(s.terms);
    s.nll = nll / static_cast<double>(s.terms);
  }
  return s;
}

CalibrationScore score_calibration(const CoordSet& gt, const CoordSet& pred, double t_match, double eps) {
  return score_calibration(score_detection(gt, pred, t_match), gt, pred, eps);
}

}  // namespace cellprob
