#include "cellprob/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cellprob/error.hpp"

namespace cellprob {

namespace {

void validate_grid(Index3 shape, Vec3 voxel_size) {
  for (int d = 0; d < 3; ++d) {
    if (shape[d] < 1) throw Error(ErrorCode::InvalidArgument, "volume shape entries must be >= 1");
    if (!(voxel_size[d] > 0)) throw Error(ErrorCode::InvalidArgument, "voxel size entries must be > 0");
  }
}

}  // namespace

Volume3D::Volume3D(Index3 shape, Vec3 voxel_size, float fill) : shape_(shape), voxel_size_(voxel_size) {
  validate_grid(shape, voxel_size);
  data_.assign(static_cast<std::size_t>(shape.product()), fill);
}

Volume3D::Volume3D(Index3 shape, Vec3 voxel_size, std::vector<float> data)
    : shape_(shape), voxel_size_(voxel_size), data_(std::move(data)) {
  validate_grid(shape, voxel_size);
  if (data_.size() != static_cast<std::size_t>(shape.product()))
    throw Error(ErrorCode::ShapeMismatch, "data length " + std::to_string(data_.size()) +
                                              " does not match shape product " + std::to_string(shape.product()));
}

Index3 Volume3D::index_of(std::size_t off) const {
  const auto o = static_cast<std::int64_t>(off);
  const std::int64_t plane = shape_.y * shape_.x;
  return {o / plane, (o % plane) / shape_.x, o % shape_.x};
}

Index3 Volume3D::voxel_of(Vec3 um) const {
  return {static_cast<std::int64_t>(std::floor(um.z / voxel_size_.z)),
          static_cast<std::int64_t>(std::floor(um.y / voxel_size_.y)),
          static_cast<std::int64_t>(std::floor(um.x / voxel_size_.x))};
}

Volume3D Volume3D::crop(const Box3& box, float pad) const {
  Volume3D out(box.extent(), voxel_size_, pad);
  const Box3 valid = intersect(box, bounds());
  if (valid.empty()) return out;
  const std::int64_t run = valid.hi.x - valid.lo.x;
  for (std::int64_t z = valid.lo.z; z < valid.hi.z; ++z) {
    for (std::int64_t y = valid.lo.y; y < valid.hi.y; ++y) {
      const float* src = &data_[offset(z, y, valid.lo.x)];
      float* dst = &out.data_[out.offset(z - box.lo.z, y - box.lo.y, valid.lo.x - box.lo.x)];
      std::copy(src, src + run, dst);
    }
  }
  return out;
}

double Volume3D::sample_trilinear(Vec3 um) const {
  std::int64_t i0[3];
  double w[3];
  for (int d = 0; d < 3; ++d) {
    double c = um[d] / voxel_size_[d] - 0.5;
    c = std::clamp(c, 0.0, static_cast<double>(shape_[d] - 1));
    const double f = std::floor(c);
    i0[d] = static_cast<std::int64_t>(f);
    w[d] = c - f;
    if (i0[d] >= shape_[d] - 1) {
      i0[d] = shape_[d] - 1;
      w[d] = 0.0;
    }
  }
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? w[0] : 1.0 - w[0];
    if (wz == 0.0) continue;
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? w[1] : 1.0 - w[1];
      if (wy == 0.0) continue;
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? w[2] : 1.0 - w[2];
        if (wx == 0.0) continue;
        acc += wz * wy * wx * (*this)(i0[0] + dz, i0[1] + dy, i0[2] + dx);
      }
    }
  }
  return acc;
}

Volume3D normalize_gaussian(const Volume3D& v) {
  if (v.empty()) throw Error(ErrorCode::InvalidArgument, "cannot normalize an empty volume");
  const auto data = v.data();
  double mean = 0.0;
  for (float x : data) mean += x;
  mean /= static_cast<double>(data.size());
  double var = 0.0;
  for (float x : data) var += (x - mean) * (x - mean);
  var /= static_cast<double>(data.size());
  const double sd = std::sqrt(var);
  if (!(sd > 0.0)) throw Error(ErrorCode::ConstantVolume, "volume has zero standard deviation");
  std::vector<float> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = static_cast<float>((data[i] - mean) / sd);
  return Volume3D(v.shape(), v.voxel_size(), std::move(out));
}

Volume3D resample_isotropic(const Volume3D& v, double target_um) {
  if (!(target_um > 0)) throw Error(ErrorCode::InvalidArgument, "resampling target must be > 0");
  Index3 shape;
  for (int d = 0; d < 3; ++d) {
    const double n = std::round(static_cast<double>(v.shape()[d]) * v.voxel_size()[d] / target_um);
    shape[d] = std::max<std::int64_t>(1, static_cast<std::int64_t>(n));
  }
  Volume3D out(shape, {target_um, target_um, target_um});
  if (shape == v.shape() && v.voxel_size() == out.voxel_size()) return v;
  for (std::int64_t z = 0; z < shape.z; ++z)
    for (std::int64_t y = 0; y < shape.y; ++y)
      for (std::int64_t x = 0; x < shape.x; ++x)
        out(z, y, x) = static_cast<float>(v.sample_trilinear(out.center({z, y, x})));
  return out;
}

Volume3D pad_volume(const Volume3D& v, Index3 pad, float value) {
  return v.crop({{-pad.z, -pad.y, -pad.x}, v.shape() + pad}, value);
}

}  // namespace cellprob
