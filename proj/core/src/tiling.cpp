#include "cellprob/tiling.hpp"

#include <cmath>
#include <string>

#include "cellprob/error.hpp"

namespace cellprob {

void TilingConfig::validate() const {
  const Index3 out = l_out();
  const Index3 tile = l_out_tile();
  for (int d = 0; d < 3; ++d) {
    if (conv_margin[d] < 0 || peak_margin[d] < 0)
      throw Error(ErrorCode::InvalidArgument, "tiling margins must be nonnegative");
    if (out[d] < 1) throw Error(ErrorCode::InvalidArgument, "l_in - 2*conv_margin must be >= 1");
    if (tile[d] < 1) throw Error(ErrorCode::InvalidArgument, "l_out - 2*peak_margin must be >= 1");
    if (strategy == TilingStrategy::ConvMargin && peak_margin[d] != 0)
      throw Error(ErrorCode::InvalidArgument, "the conv-margin strategy uses no peak margin");
  }
}

TilingConfig TilingConfig::reference(TilingStrategy strategy) {
  TilingConfig cfg;
  cfg.strategy = strategy;
  cfg.peak_margin = strategy == TilingStrategy::PeakMargin ? Index3{4, 4, 4} : Index3{0, 0, 0};
  return cfg;
}

PatchGrid plan_tiling(Index3 shape, const TilingConfig& cfg) {
  cfg.validate();
  const Index3 tile = cfg.l_out_tile();
  const Index3 pad = cfg.l_pad();
  PatchGrid grid;
  grid.shape = shape;
  grid.origin_offset = pad;
  grid.padded_shape = shape + 2 * pad;

  std::vector<std::int64_t> starts[3];
  std::vector<std::int64_t> owned_end[3];
  for (int d = 0; d < 3; ++d) {
    if (shape[d] < 1) throw Error(ErrorCode::InvalidArgument, "volume shape entries must be >= 1");
    if (shape[d] + 2 * pad[d] < cfg.l_in[d])
      throw Error(ErrorCode::VolumeTooSmall, "axis " + std::to_string(d) + " of length " + std::to_string(shape[d]) +
                                                 " is smaller than the output tile " + std::to_string(tile[d]));
    const std::int64_t n = (shape[d] + tile[d] - 1) / tile[d];
    grid.counts[d] = n;
    for (std::int64_t k = 0; k < n; ++k) {
      const bool last = k == n - 1;
      starts[d].push_back(last ? shape[d] - tile[d] : k * tile[d]);
      owned_end[d].push_back(last ? shape[d] : (k + 1) * tile[d]);
    }
  }

  for (std::int64_t kz = 0; kz < grid.counts.z; ++kz)
    for (std::int64_t ky = 0; ky < grid.counts.y; ++ky)
      for (std::int64_t kx = 0; kx < grid.counts.x; ++kx) {
        const std::int64_t k[3] = {kz, ky, kx};
        Patch p;
        for (int d = 0; d < 3; ++d) {
          const std::int64_t s = starts[d][k[d]];
          p.input.lo[d] = s;
          p.input.hi[d] = s + cfg.l_in[d];
          p.output.lo[d] = s + cfg.conv_margin[d];
          p.output.hi[d] = p.output.lo[d] + cfg.l_out()[d];
          p.tile.lo[d] = s + pad[d];
          p.tile.hi[d] = p.tile.lo[d] + tile[d];
          p.owned.lo[d] = k[d] * tile[d];
          p.owned.hi[d] = owned_end[d][k[d]];
        }
        grid.patches.push_back(p);
      }
  return grid;
}

CoordSet reconstruct_coordinates(const std::vector<CoordSet>& per_patch, const PatchGrid& grid, Vec3 voxel_size) {
  if (per_patch.size() != grid.patches.size())
    throw Error(ErrorCode::InvalidArgument, "one coordinate set per patch is required");
  CoordSet out;
  for (std::size_t i = 0; i < per_patch.size(); ++i) {
    const Patch& patch = grid.patches[i];
    const CoordSet& local = per_patch[i];
    local.validate();
    const Index3 origin = patch.output.lo - grid.origin_offset;
    const Vec3 shift{static_cast<double>(origin.z) * voxel_size.z, static_cast<double>(origin.y) * voxel_size.y,
                     static_cast<double>(origin.x) * voxel_size.x};
    for (std::size_t j = 0; j < local.size(); ++j) {
      const Vec3 g = local.points[j] + shift;
      const Index3 v{static_cast<std::int64_t>(std::floor(g.z / voxel_size.z)),
                     static_cast<std::int64_t>(std::floor(g.y / voxel_size.y)),
                     static_cast<std::int64_t>(std::floor(g.x / voxel_size.x))};
      if (!patch.owned.contains(v)) continue;
      out.points.push_back(g);
      if (!local.prob.empty()) out.prob.push_back(local.prob[j]);
      if (!local.value.empty()) out.value.push_back(local.value[j]);
    }
  }
  return out;
}

}  // namespace cellprob
