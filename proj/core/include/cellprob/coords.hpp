#pragma once

#include <cstddef>
#include <vector>

#include "cellprob/geometry.hpp"

namespace cellprob {

/// Points in micrometers with optional per-point probability and
/// per-point density-map value. The optional columns are either empty or
/// exactly as long as `points`.
struct CoordSet {
  std::vector<Vec3> points;
  std::vector<double> prob;
  std::vector<double> value;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_prob() const { return !prob.empty() || points.empty(); }
  bool has_value() const { return !value.empty(); }

  void push_back(Vec3 p) { points.push_back(p); }

  /// Subset with the given indices, carrying the optional columns along.
  CoordSet select(const std::vector<std::size_t>& indices) const;
  /// Points with prob >= cut (the positive set of a probabilistic detector).
  CoordSet positives(double cut = 0.5) const;
  /// Throws InvalidArgument when an optional column has the wrong length.
  void validate() const;
};

}  // namespace cellprob
