#pragma once

#include <vector>

#include "cellprob/volume.hpp"

namespace cellprob {

/// Exact squared Euclidean distance (micrometers^2) from every voxel center
/// to the nearest voxel center with value > 0.5, via three separable passes
/// of the lower-envelope-of-parabolas transform. Respects anisotropic voxel
/// sizes. Throws EmptyStructure if there is no foreground voxel.
std::vector<double> squared_distance_transform(const Volume3D& mask);

/// Square root of the above, as a volume on the mask's grid (0 on foreground).
Volume3D distance_transform(const Volume3D& mask);

}  // namespace cellprob
