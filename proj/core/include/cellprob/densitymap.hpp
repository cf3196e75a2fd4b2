#pragma once

#include <span>

#include "cellprob/coords.hpp"
#include "cellprob/geometry.hpp"
#include "cellprob/volume.hpp"

namespace cellprob {

enum class Compounding { Sum, Max };

/// Peak scaling of the Gaussian kernel. `Normalized` is the 1D-normalized
/// form 1/(sigma*sqrt(2*pi)) * exp(-s^2 / 2 sigma^2); `UnitPeak` drops the
/// prefactor so every isolated cell peaks at exactly 1.
///
/// The synthetic pipeline uses UnitPeak: the fixed DM feature thresholds in
/// [1, 1.5] and detection thresholds are only meaningful on a unit-peak
/// scale, since the normalized peak is below 0.4 for every sigma >= 1.
enum class Amplitude { Normalized, UnitPeak };

struct KernelSpec {
  double sigma = 2.0;    ///< micrometers
  double cutoff = 16.0;  ///< l_g, micrometers; voxels farther than this from a cell get no contribution
  Compounding compounding = Compounding::Max;
  Amplitude amplitude = Amplitude::UnitPeak;

  void validate() const;
  double peak() const;  ///< kernel value at distance 0
};

double gaussian_value(double s, double sigma, Amplitude amplitude);

/// Renders a density map on a grid of `shape` voxels. Each voxel center k
/// gets sum_c G(|k-c|) (Sum) or max_c G(|k-c|) (Max) over cells with
/// |k-c| <= cutoff. Output is independent of coordinate order.
/// `amplitudes`, when non-empty, scales each cell's kernel (one per point).
Volume3D render_dm(const CoordSet& coords, Index3 shape, Vec3 voxel_size, const KernelSpec& kernel,
                   std::span<const double> amplitudes = {});

/// Same as render_dm but only over `box` (in voxel coordinates of the full
/// grid, may extend past it); voxel i of the result is voxel box.lo + i of
/// the full grid. Cells outside the box still contribute within `cutoff`.
Volume3D render_dm_box(const CoordSet& coords, const Box3& box, Vec3 voxel_size, const KernelSpec& kernel,
                       std::span<const double> amplitudes = {});

}  // namespace cellprob
