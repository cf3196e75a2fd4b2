#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cellprob/coords.hpp"
#include "cellprob/volume.hpp"

namespace cellprob {

enum class DistanceLookup { Trilinear, Nearest };
enum class CdfMode { Kde, Empirical };

struct SpatialOptions {
  double adjacency_um = 4.0;    ///< "adjacent" means distance strictly below this
  double positive_cut = 0.5;    ///< deterministic analysis keeps p >= this
  std::size_t grid_points = 512;
  DistanceLookup lookup = DistanceLookup::Trilinear;
  CdfMode cdf_mode = CdfMode::Kde;  ///< how replicate and cell CDFs are built
};

/// Everything about a (structure, tissue) pair that does not depend on the
/// cells: the distance map and the empty-space distance pool.
struct SpatialContext {
  Volume3D edt;                 ///< micrometers to the nearest structure voxel
  std::vector<double> esd;      ///< sorted EDT values of tissue voxels outside the structure
  std::size_t tissue_voxels = 0;
  double tissue_volume_mm3 = 0;
  double pct_volume_adjacent = 0;  ///< % of tissue voxels with EDT < adjacency
};

/// Builds the context. Throws EmptyStructure, ShapeMismatch, EmptyCells
/// (empty tissue) and DegenerateESD (no tissue voxel outside the structure).
SpatialContext build_spatial_context(const Volume3D& structure, const Volume3D& tissue,
                                     const SpatialOptions& opt = {});

/// Distances from each cell to the structure, interpolated from the EDT.
std::vector<double> cell_distances(const CoordSet& cells, const Volume3D& edt,
                                   DistanceLookup lookup = DistanceLookup::Trilinear);

struct Envelope {
  std::vector<double> lower, upper;
};

struct MeanSd {
  double mean = 0, sd = 0;
};

struct SpatialReport {
  std::string mode;  ///< "deterministic" or "probabilistic"
  std::vector<double> grid;  ///< shared distance grid, micrometers
  std::vector<double> esd_cdf;         ///< empirical CDF of the full ESD pool
  std::vector<double> cell_cdf;        ///< CDF of the cell distances (KDE or empirical per options)
  std::vector<double> cell_cdf_raw;    ///< empirical CDF of the cell distances
  double cell_count = 0;
  double density = 0;              ///< cells per mm^3 of tissue
  double pct_cells_adjacent = 0;
  double pct_volume_adjacent = 0;
  bool empty_cells = false;

  // Probabilistic analysis only.
  std::size_t replicates = 0;
  double alpha = 0;  ///< 2 / (T + 1)
  std::uint64_t seed = 0;
  std::size_t empty_replicates = 0;
  MeanSd cell_count_stats, density_stats, pct_cells_adjacent_stats, pct_volume_adjacent_stats;
  Envelope cell_envelope;  ///< pointwise min/max of replicate cell CDFs
  Envelope esd_envelope;   ///< pointwise min/max of Poisson-resampled ESD CDFs
};

/// Shared grid: grid_points values from 0 to the largest ESD or cell distance.
std::vector<double> distance_grid(const SpatialContext& ctx, const std::vector<double>& cell_dist,
                                  const SpatialOptions& opt);

/// Cells with p >= positive_cut (all cells without a p column).
SpatialReport analyze_deterministic(const CoordSet& cells, const SpatialContext& ctx,
                                    const SpatialOptions& opt = {});

/// T Monte-Carlo replicates; replicate t draws from an RNG seeded with
/// seed + t: each cell is kept with probability p, then w ~ Poisson(kept)
/// ESD voxels are resampled with replacement. Envelopes are pointwise
/// min/max over replicates. Throws InvalidArgument if T < 2.
SpatialReport analyze_probabilistic(const CoordSet& cells, const SpatialContext& ctx, std::size_t replicates,
                                    std::uint64_t seed, const SpatialOptions& opt = {});

/// CDF of a sample on `grid` according to `mode` (KDE with Scott bandwidth).
std::vector<double> sample_cdf(std::span<const double> samples, std::span<const double> grid, CdfMode mode);

}  // namespace cellprob
