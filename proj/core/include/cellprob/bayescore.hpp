#pragma once

#include <span>
#include <vector>

#include "cellprob/volume.hpp"

namespace cellprob {

/// What any density-map regressor hands to the rest of the pipeline: the
/// predicted DM plus nonnegative aleatoric and epistemic uncertainty maps
/// on the same grid.
struct RegressorOutput {
  Volume3D dm;
  Volume3D aleatoric;
  Volume3D epistemic;

  /// Throws ShapeMismatch or InvalidArgument (negative uncertainty).
  void validate() const;
};

/// Sum over voxels of (y - pred)^2. Writes d/dpred = -2 (y - pred) into
/// `grad_pred` when it is non-empty. Throws ShapeMismatch.
double l2_loss(std::span<const double> y, std::span<const double> pred, std::span<double> grad_pred = {});

/// Sum over voxels of (y - pred)^2 / (2 ua) + 0.5 log ua, with gradients
///   d/dpred = -(y - pred) / ua
///   d/dua   = -(y - pred)^2 / (2 ua^2) + 1 / (2 ua)
/// Throws NonPositiveAleatoric if any ua <= 0 and ShapeMismatch.
double bayes_loss(std::span<const double> y, std::span<const double> pred, std::span<const double> ua,
                  std::span<double> grad_pred = {}, std::span<double> grad_ua = {});

double l2_loss(const Volume3D& y, const Volume3D& pred);
double bayes_loss(const Volume3D& y, const Volume3D& pred, const Volume3D& ua);

struct McSample {
  Volume3D dm;
  Volume3D aleatoric;
};

/// Aggregates stochastic forward passes: dm and aleatoric are voxel-wise
/// means, epistemic is the voxel-wise population SD of the dm samples.
/// Per voxel the samples are reduced in sorted order, so the result does not
/// depend on sample order. Throws EmptySampleList and ShapeMismatch.
RegressorOutput mc_aggregate(const std::vector<McSample>& samples);

}  // namespace cellprob
