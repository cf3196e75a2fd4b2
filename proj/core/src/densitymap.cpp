#include "cellprob/densitymap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "cellprob/error.hpp"

namespace cellprob {

void KernelSpec::validate() const {
  if (!(sigma > 0)) throw Error(ErrorCode::InvalidArgument, "kernel sigma must be > 0");
  if (!(cutoff > 0)) throw Error(ErrorCode::InvalidArgument, "kernel cutoff must be > 0");
}

double KernelSpec::peak() const { return gaussian_value(0.0, sigma, amplitude); }

double gaussian_value(double s, double sigma, Amplitude amplitude) {
  const double e = std::exp(-(s * s) / (2.0 * sigma * sigma));
  if (amplitude == Amplitude::UnitPeak) return e;
  return e / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

Volume3D render_dm_box(const CoordSet& coords, const Box3& box, Vec3 voxel_size, const KernelSpec& kernel,
                       std::span<const double> amplitudes) {
  kernel.validate();
  if (!amplitudes.empty() && amplitudes.size() != coords.size())
    throw Error(ErrorCode::ShapeMismatch, "one amplitude per point is required");
  const Index3 shape = box.extent();
  Volume3D out(shape, voxel_size, 0.0f);

  // A fixed visiting order makes Sum bit-reproducible under permutation.
  std::vector<std::size_t> order(coords.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto& pts = coords.points;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const Vec3& a = pts[i];
    const Vec3& b = pts[j];
    if (a.z != b.z) return a.z < b.z;
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    return amplitudes.empty() ? false : amplitudes[i] < amplitudes[j];
  });

  const double cut2 = kernel.cutoff * kernel.cutoff;
  const double inv2s2 = 1.0 / (2.0 * kernel.sigma * kernel.sigma);
  const double scale = kernel.peak();
  const bool sum = kernel.compounding == Compounding::Sum;
  std::vector<double> acc;
  if (sum) acc.assign(out.size(), 0.0);
  auto data = out.data();

  for (const std::size_t idx : order) {
    const Vec3& c = pts[idx];
    const double amp = amplitudes.empty() ? scale : scale * amplitudes[idx];
    std::int64_t lo[3], hi[3];
    bool any = true;
    for (int d = 0; d < 3; ++d) {
      // voxel centers (i + 0.5) * vs within cutoff of c
      lo[d] = static_cast<std::int64_t>(std::ceil((c[d] - kernel.cutoff) / voxel_size[d] - 0.5));
      hi[d] = static_cast<std::int64_t>(std::floor((c[d] + kernel.cutoff) / voxel_size[d] - 0.5)) + 1;
      lo[d] = std::max(lo[d], box.lo[d]);
      hi[d] = std::min(hi[d], box.hi[d]);
      if (hi[d] <= lo[d]) any = false;
    }
    if (!any) continue;
    for (std::int64_t z = lo[0]; z < hi[0]; ++z) {
      const double dz = (static_cast<double>(z) + 0.5) * voxel_size.z - c.z;
      for (std::int64_t y = lo[1]; y < hi[1]; ++y) {
        const double dy = (static_cast<double>(y) + 0.5) * voxel_size.y - c.y;
        const double dzy = dz * dz + dy * dy;
        if (dzy > cut2) continue;
        const std::size_t row = out.offset(z - box.lo.z, y - box.lo.y, 0);
        for (std::int64_t x = lo[2]; x < hi[2]; ++x) {
          const double dx = (static_cast<double>(x) + 0.5) * voxel_size.x - c.x;
          const double d2 = dzy + dx * dx;
          if (d2 > cut2) continue;
          const double g = amp * std::exp(-d2 * inv2s2);
          const std::size_t off = row + static_cast<std::size_t>(x - box.lo.x);
          if (sum) {
            acc[off] += g;
          } else {
            data[off] = std::max(data[off], static_cast<float>(g));
          }
        }
      }
    }
  }
  if (sum)
    for (std::size_t i = 0; i < acc.size(); ++i) data[i] = static_cast<float>(acc[i]);
  return out;
}

Volume3D render_dm(const CoordSet& coords, Index3 shape, Vec3 voxel_size, const KernelSpec& kernel,
                   std::span<const double> amplitudes) {
  return render_dm_box(coords, {{0, 0, 0}, shape}, voxel_size, kernel, amplitudes);
}

}  // namespace cellprob
