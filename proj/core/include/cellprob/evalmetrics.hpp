#pragma once

#include <cstddef>
#include <vector>

#include "cellprob/coords.hpp"

namespace cellprob {

struct MatchPair {
  std::size_t gt;
  std::size_t pred;
  double distance;
};

/// Minimum-cost one-to-one assignment on a dense row-major rows x cols cost
/// matrix. Returns, for each row, the assigned column or -1; exactly
/// min(rows, cols) rows are assigned. Shortest augmenting paths with
/// potentials, O(min^2 * max).
std::vector<long> solve_assignment(std::size_t rows, std::size_t cols, const std::vector<double>& cost);

/// Optimal matching of GT to predictions minimizing the summed Euclidean
/// distance over min(|gt|, |pred|) pairs. No distance gating. Pairs are
/// sorted by gt index.
std::vector<MatchPair> hungarian_match(const CoordSet& gt, const CoordSet& pred);

struct MatchReport {
  double t_match = 4.0;
  std::vector<MatchPair> pairs;            ///< true-positive pairs (distance <= t_match)
  std::vector<std::size_t> unmatched_gt;   ///< false negatives
  std::vector<std::size_t> unmatched_pred; ///< false positives
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;
  bool precision_defined = false;  ///< false when there are no predictions
  bool recall_defined = false;     ///< false when there is no GT
};

/// Hungarian assignment followed by thresholding: assigned pairs farther
/// than t_match count as one FP and one FN. F1 is 0 when TP is 0.
MatchReport score_detection(const CoordSet& gt, const CoordSet& pred, double t_match = 4.0);

struct CalibrationScore {
  double brier = 0;
  double nll = 0;
  std::size_t terms = 0;  ///< |GT| + number of predictions without a TP partner
};

inline constexpr double kNllEpsilon = 1e-7;

/// Brier score and NLL over the union of GT and unmatched predictions:
/// GT matched within t_match scores its partner's p against 1, other GT
/// score 0 against 1, unpaired predictions score their p against 0.
/// Predictions without a probability column are deterministic (p = 1).
/// Probabilities are clipped to [eps, 1 - eps] inside the logarithm.
CalibrationScore score_calibration(const CoordSet& gt, const CoordSet& pred, double t_match = 4.0,
                                   double eps = kNllEpsilon);

/// Same, reusing an existing detection report (avoids a second matching).
CalibrationScore score_calibration(const MatchReport& report, const CoordSet& gt, const CoordSet& pred,
                                   double eps = kNllEpsilon);

}  // namespace cellprob
