#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cellprob/geometry.hpp"

namespace cellprob {

/// Dense 3D scalar field stored C-order (z slowest) as 32-bit floats, with
/// the physical size of one voxel in micrometers.
///
/// Voxel (i, j, k) has its center at ((i+0.5)*sz, (j+0.5)*sy, (k+0.5)*sx).
class Volume3D {
 public:
  Volume3D() = default;
  Volume3D(Index3 shape, Vec3 voxel_size, float fill = 0.0f);
  Volume3D(Index3 shape, Vec3 voxel_size, std::vector<float> data);

  Index3 shape() const { return shape_; }
  Vec3 voxel_size() const { return voxel_size_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  std::size_t offset(std::int64_t z, std::int64_t y, std::int64_t x) const {
    return static_cast<std::size_t>((z * shape_.y + y) * shape_.x + x);
  }
  std::size_t offset(Index3 i) const { return offset(i.z, i.y, i.x); }
  Index3 index_of(std::size_t off) const;

  float operator()(std::int64_t z, std::int64_t y, std::int64_t x) const { return data_[offset(z, y, x)]; }
  float& operator()(std::int64_t z, std::int64_t y, std::int64_t x) { return data_[offset(z, y, x)]; }
  float at(Index3 i) const { return data_[offset(i)]; }

  bool in_bounds(Index3 i) const {
    return i.z >= 0 && i.y >= 0 && i.x >= 0 && i.z < shape_.z && i.y < shape_.y && i.x < shape_.x;
  }
  Box3 bounds() const { return {{0, 0, 0}, shape_}; }

  /// Center of a voxel in micrometers.
  Vec3 center(Index3 i) const {
    return {(static_cast<double>(i.z) + 0.5) * voxel_size_.z, (static_cast<double>(i.y) + 0.5) * voxel_size_.y,
            (static_cast<double>(i.x) + 0.5) * voxel_size_.x};
  }
  /// Voxel containing a micrometer position (may be out of bounds).
  Index3 voxel_of(Vec3 um) const;
  /// Physical extent of the volume in micrometers.
  Vec3 extent_um() const {
    return {static_cast<double>(shape_.z) * voxel_size_.z, static_cast<double>(shape_.y) * voxel_size_.y,
            static_cast<double>(shape_.x) * voxel_size_.x};
  }
  double voxel_volume() const { return voxel_size_.z * voxel_size_.y * voxel_size_.x; }

  /// Copy of the sub-box `box`; voxels outside the volume read as `pad`.
  Volume3D crop(const Box3& box, float pad = 0.0f) const;

  /// Trilinear interpolation at a micrometer position, clamped at the edges.
  double sample_trilinear(Vec3 um) const;

  bool same_grid(const Volume3D& other) const {
    return shape_ == other.shape_ && voxel_size_ == other.voxel_size_;
  }

 private:
  Index3 shape_{};
  Vec3 voxel_size_{1, 1, 1};
  std::vector<float> data_;
};

/// Subtracts the mean and divides by the population SD.
/// Throws ConstantVolume when the SD is zero.
Volume3D normalize_gaussian(const Volume3D& v);

/// Resamples to cubic voxels of side `target_um` by center-aligned trilinear
/// interpolation with edge clamping. New shape is round(old * size / target),
/// at least 1 per axis.
Volume3D resample_isotropic(const Volume3D& v, double target_um);

/// Zero-pads `pad` voxels on both sides of every axis.
Volume3D pad_volume(const Volume3D& v, Index3 pad, float value = 0.0f);

}  // namespace cellprob
