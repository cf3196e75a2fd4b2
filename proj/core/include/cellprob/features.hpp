#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cellprob/coords.hpp"
#include "cellprob/matrix.hpp"
#include "cellprob/volume.hpp"

namespace cellprob {

struct NamedMap {
  std::string name;  ///< "dm", "ua" or "ue" unless the spec's ranges say otherwise
  const Volume3D* volume;
};

/// Summary statistics computed around each proposal.
///
/// Per (map, window) block, 14 values in this order:
///   pct0..pct4  percentiles at 1, 25.5, 50, 74.5, 99 (linear interpolation)
///   gt0..gt4    fraction of voxels strictly above 5 evenly spaced thresholds
///   mean, sd, skew, kurt  (population moments; kurtosis is not excess)
/// Blocks are laid out map-major, window-minor.
struct FeatureSpec {
  std::vector<double> window_sides{4, 8, 16, 32};  ///< cube sides in micrometers, ascending
  double percentile_lo = 1.0;
  double percentile_hi = 99.0;
  /// Threshold range per map name. The ue range is kept in its given
  /// descending order; the resulting value set is the same as ascending.
  std::map<std::string, std::pair<double, double>> threshold_ranges{
      {"dm", {1.0, 1.5}}, {"ua", {1.0, 10.0}}, {"ue", {1.0, 0.2}}};

  static constexpr std::size_t kPercentiles = 5;
  static constexpr std::size_t kThresholds = 5;
  static constexpr std::size_t kMoments = 4;
  static constexpr std::size_t kStatsPerBlock = kPercentiles + kThresholds + kMoments;

  void validate() const;
  std::vector<double> percentiles() const;
  std::vector<double> thresholds(const std::string& map_name) const;
  std::size_t dimension(std::size_t map_count) const { return window_sides.size() * map_count * kStatsPerBlock; }
};

/// Column names matching extract_features' layout, e.g. "dm_w4_pct0".
std::vector<std::string> feature_names(const std::vector<std::string>& map_names, const FeatureSpec& spec);

/// The 14 block statistics of a sample (exposed for tests and reuse).
/// `values` is reordered in place.
void block_statistics(std::vector<float>& values, const std::vector<double>& percentiles,
                      const std::vector<double>& thresholds, double* out);

/// One row per proposal. A window of side s micrometers spans
/// n = max(1, round(s / voxel_size)) voxels per axis, starting n/2 voxels
/// before the proposal's voxel, clipped to the volume.
FeatureMatrix extract_features(const std::vector<NamedMap>& maps, const CoordSet& proposals, const FeatureSpec& spec);

}  // namespace cellprob
