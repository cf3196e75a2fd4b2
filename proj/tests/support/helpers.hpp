#pragma once

#include <doctest.h>

#include <random>
#include <vector>

#include "cellprob/coords.hpp"
#include "cellprob/error.hpp"
#include "cellprob/volume.hpp"
#include "oracles.hpp"

// Checks that `expr` throws cellprob::Error with the given code.
#define CHECK_THROWS_CODE(expr, expected_code)                  \
  do {                                                          \
    bool thrown_ = false;                                       \
    try {                                                       \
      (void)(expr);                                             \
    } catch (const cellprob::Error& e_) {                       \
      thrown_ = true;                                           \
      CHECK(e_.code() == cellprob::ErrorCode::expected_code);   \
    }                                                           \
    CHECK_MESSAGE(thrown_, "expected " #expected_code);         \
  } while (0)

namespace testing_support {

inline oracle::Grid to_grid(const cellprob::Volume3D& v) {
  oracle::Grid g{static_cast<int>(v.shape().z), static_cast<int>(v.shape().y), static_cast<int>(v.shape().x)};
  g.sz = v.voxel_size().z;
  g.sy = v.voxel_size().y;
  g.sx = v.voxel_size().x;
  for (float f : v.data()) g.v.push_back(f);
  return g;
}

inline cellprob::Volume3D random_volume(cellprob::Index3 shape, std::mt19937_64& rng, double lo = 0.0,
                                        double hi = 1.0, cellprob::Vec3 vs = {1, 1, 1}) {
  cellprob::Volume3D v(shape, vs);
  std::uniform_real_distribution<double> u(lo, hi);
  for (float& f : v.data()) f = static_cast<float>(u(rng));
  return v;
}

inline cellprob::Volume3D random_mask(cellprob::Index3 shape, std::mt19937_64& rng, double fill,
                                      cellprob::Vec3 vs = {1, 1, 1}) {
  cellprob::Volume3D v(shape, vs);
  std::bernoulli_distribution b(fill);
  for (float& f : v.data()) f = b(rng) ? 1.0f : 0.0f;
  return v;
}

inline cellprob::CoordSet random_points(std::size_t n, cellprob::Vec3 extent, std::mt19937_64& rng) {
  cellprob::CoordSet c;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) c.push_back({u(rng) * extent.z, u(rng) * extent.y, u(rng) * extent.x});
  return c;
}

inline std::vector<oracle::P3> to_p3(const cellprob::CoordSet& c) {
  std::vector<oracle::P3> out;
  for (const auto& p : c.points) out.push_back({p.z, p.y, p.x});
  return out;
}

}  // namespace testing_support
