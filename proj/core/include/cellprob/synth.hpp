#pragma once

#include <cstdint>

#include "cellprob/bayescore.hpp"
#include "cellprob/coords.hpp"
#include "cellprob/densitymap.hpp"
#include "cellprob/volume.hpp"

namespace cellprob {

/// Parameters of a synthetic scene. Intensities are in units of the kernel
/// peak. All randomness derives from `seed`.
struct SynthSpec {
  Index3 shape{64, 64, 64};
  Vec3 voxel_size{1, 1, 1};
  std::size_t cell_count = 50;
  double min_separation = 8.0;  ///< micrometers between any two cells (and distractors)
  KernelSpec kernel{};          ///< GT kernel; compounding is forced to Max by the oracle

  double noise_sd = 0.1;              ///< regression noise SD as a fraction of the peak
  double noise_gradient = 0.5;        ///< noise SD varies by +-this fraction along x
  double noise_smoothing = 1.0;       ///< voxels; Gaussian correlation length of the noise
  double background_floor = 3.0;      ///< values below this many local noise SDs are zeroed
  std::size_t distractor_count = 10;  ///< false-positive blobs
  double distractor_min = 0.3;        ///< blob amplitude range, fraction of the peak
  double distractor_max = 0.7;

  std::size_t tube_count = 4;
  double tube_radius = 5.0;     ///< micrometers
  double tube_step = 2.0;       ///< random-walk step, micrometers
  double tube_length = 0.0;     ///< micrometers; 0 means the largest volume extent
  double tube_turn = 0.3;       ///< SD of the per-step direction perturbation
  double tissue_fraction = 0.95;  ///< ellipsoid semi-axes as a fraction of half the extent

  std::uint64_t seed = 0;
  std::size_t max_attempts = 20000;  ///< rejection-sampling budget per placed point

  void validate() const;
};

/// Uniform points with pairwise separation >= min_separation, placed by
/// rejection sampling. Throws PackingInfeasible when a point cannot be
/// placed within max_attempts draws.
CoordSet generate_coords(const SynthSpec& spec);

/// Distractor centers (>= min_separation from the cells and each other)
/// with their amplitudes in `value`.
CoordSet generate_distractors(const CoordSet& cells, const SynthSpec& spec);

/// Noise amplitude field: noise_sd * peak * (1 + gradient * (2 (x+0.5)/nx - 1)).
Volume3D noise_amplitude_field(const SynthSpec& spec);

/// Surrogate for a Bayesian DM regressor. With signal = max(K_max GT DM,
/// distractor blobs) and two independent smoothed unit-variance noise
/// fields n1, n2 scaled by the amplitude field a:
///   draw_i     = signal + a * n_i, zeroed where below background_floor * a
///   dm         = draw_1
///   aleatoric  = a
///   epistemic  = |draw_1 - draw_2| / 2   (population SD of the two draws)
/// With noise_sd = 0 and no distractors, dm equals the GT DM exactly.
RegressorOutput oracle_regress(const CoordSet& cells, const SynthSpec& spec);

struct StructureMasks {
  Volume3D structure;  ///< tubes, clipped to the tissue
  Volume3D tissue;     ///< ellipsoid interior
};

/// Random-walk tubes of radius tube_radius inside an ellipsoidal tissue mask.
StructureMasks generate_structures(const SynthSpec& spec);

/// Separable Gaussian smoothing of unit-variance white noise, rescaled so
/// the output again has unit variance away from the borders.
Volume3D smoothed_noise(Index3 shape, Vec3 voxel_size, double sigma_voxels, std::uint64_t seed);

}  // namespace cellprob
