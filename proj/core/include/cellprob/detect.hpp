#pragma once

#include "cellprob/coords.hpp"
#include "cellprob/volume.hpp"

namespace cellprob {

struct NmsConfig {
  double min_distance = 4.0;  ///< micrometers; accepted peaks are at least this far apart
  double threshold = 0.0;     ///< values must exceed this strictly; 0 gives threshold-free proposals

  void validate() const;
};

/// Greedy non-maximum suppression on a density map.
///
/// Candidates are voxels with value > max(threshold, 0) that are >= all of
/// their in-bounds 26-neighbors. They are visited by descending value (ties
/// by ascending (z, y, x)); a candidate is accepted unless an already
/// accepted peak lies closer than min_distance. Returns voxel centers in
/// acceptance order with the DM value in `value`.
CoordSet detect_peaks(const Volume3D& dm, const NmsConfig& cfg);

}  // namespace cellprob
