#pragma once

#include <vector>

#include "cellprob/coords.hpp"
#include "cellprob/geometry.hpp"

namespace cellprob {

enum class TilingStrategy {
  ConvMargin,  ///< output tile is the full regressor output
  PeakMargin,  ///< output tile additionally drops a peak margin on each side
};

/// Patch arithmetic in voxels. Derived sizes:
///   l_out      = l_in - 2 * conv_margin
///   l_out_tile = l_out - 2 * peak_margin
///   l_pad      = conv_margin + peak_margin
///   l_overlap  = l_in - l_out_tile
struct TilingConfig {
  Index3 l_in{64, 156, 156};
  Index3 conv_margin{20, 20, 20};
  Index3 peak_margin{4, 4, 4};
  TilingStrategy strategy = TilingStrategy::PeakMargin;

  Index3 l_out() const { return l_in - 2 * conv_margin; }
  Index3 l_out_tile() const { return l_out() - 2 * peak_margin; }
  Index3 l_pad() const { return conv_margin + peak_margin; }
  Index3 l_overlap() const { return l_in - l_out_tile(); }

  /// Throws InvalidArgument if a derived size is < 1, a margin is negative,
  /// or a conv-margin config carries a nonzero peak margin.
  void validate() const;

  /// The two configurations used on the bone-marrow data (64x156x156 input,
  /// 20-voxel convolutional margin, 4-voxel peak margin for PeakMargin).
  static TilingConfig reference(TilingStrategy strategy);
};

/// One patch. Windows are in padded-volume voxel coordinates except `owned`,
/// which is in original-volume coordinates.
struct Patch {
  Box3 input;   ///< l_in window fed to the regressor
  Box3 output;  ///< l_out window the regressor produces
  Box3 tile;    ///< l_out_tile window kept by the strategy
  Box3 owned;   ///< part of the tile this patch is responsible for; owned boxes partition the volume
};

struct PatchGrid {
  Index3 shape;          ///< original volume shape
  Index3 padded_shape;   ///< shape + 2 * l_pad
  Index3 origin_offset;  ///< padded coordinate of original voxel (0,0,0)
  Index3 counts;         ///< patches per axis
  std::vector<Patch> patches;  ///< z-major, then y, then x

  /// Output window of a patch expressed in original-volume coordinates.
  Box3 output_in_original(const Patch& p) const {
    return {p.output.lo - origin_offset, p.output.hi - origin_offset};
  }
  Box3 tile_in_original(const Patch& p) const { return {p.tile.lo - origin_offset, p.tile.hi - origin_offset}; }
};

/// Places patches so that output tiles are adjacent; the last tile on each
/// axis is shifted back to end at the volume border and may overlap its
/// predecessor. Throws VolumeTooSmall if shape + 2*l_pad < l_in on an axis.
PatchGrid plan_tiling(Index3 shape, const TilingConfig& cfg);

/// Maps per-patch detections (micrometers relative to each patch's output
/// window origin) back to the original volume. A detection is kept iff it
/// falls inside its patch's owned box, which removes both the peak-margin
/// duplicates and the duplicates in the trailing-border overlap.
/// `per_patch` is indexed like `grid.patches`. Optional columns are carried.
CoordSet reconstruct_coordinates(const std::vector<CoordSet>& per_patch, const PatchGrid& grid, Vec3 voxel_size);

}  // namespace cellprob
