#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace cellprob {

/// Integer voxel triple in (z, y, x) order.
struct Index3 {
  std::int64_t z = 0, y = 0, x = 0;

  std::int64_t& operator[](int axis) { return axis == 0 ? z : (axis == 1 ? y : x); }
  std::int64_t operator[](int axis) const { return axis == 0 ? z : (axis == 1 ? y : x); }

  std::int64_t product() const { return z * y * x; }

  friend Index3 operator+(Index3 a, Index3 b) { return {a.z + b.z, a.y + b.y, a.x + b.x}; }
  friend Index3 operator-(Index3 a, Index3 b) { return {a.z - b.z, a.y - b.y, a.x - b.x}; }
  friend Index3 operator*(std::int64_t s, Index3 a) { return {s * a.z, s * a.y, s * a.x}; }
  friend bool operator==(const Index3&, const Index3&) = default;
  friend auto operator<=>(const Index3&, const Index3&) = default;
};

/// Real-valued triple in (z, y, x) order; micrometers unless stated otherwise.
struct Vec3 {
  double z = 0, y = 0, x = 0;

  double& operator[](int axis) { return axis == 0 ? z : (axis == 1 ? y : x); }
  double operator[](int axis) const { return axis == 0 ? z : (axis == 1 ? y : x); }

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.z + b.z, a.y + b.y, a.x + b.x}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.z - b.z, a.y - b.y, a.x - b.x}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.z, s * a.y, s * a.x}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double squared_norm(Vec3 v) { return v.z * v.z + v.y * v.y + v.x * v.x; }
inline double distance(Vec3 a, Vec3 b) { return std::sqrt(squared_norm(a - b)); }

/// Half-open integer box [lo, hi).
struct Box3 {
  Index3 lo, hi;

  Index3 extent() const { return hi - lo; }
  bool empty() const { return hi.z <= lo.z || hi.y <= lo.y || hi.x <= lo.x; }
  bool contains(Index3 i) const {
    return i.z >= lo.z && i.z < hi.z && i.y >= lo.y && i.y < hi.y && i.x >= lo.x && i.x < hi.x;
  }
  friend bool operator==(const Box3&, const Box3&) = default;
};

inline Box3 intersect(const Box3& a, const Box3& b) {
  Box3 r;
  for (int d = 0; d < 3; ++d) {
    r.lo[d] = a.lo[d] > b.lo[d] ? a.lo[d] : b.lo[d];
    r.hi[d] = a.hi[d] < b.hi[d] ? a.hi[d] : b.hi[d];
    if (r.hi[d] < r.lo[d]) r.hi[d] = r.lo[d];
  }
  return r;
}

}  // namespace cellprob
