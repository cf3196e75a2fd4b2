#include <doctest.h>

#include <random>

#include "cellprob/features.hpp"
#include "helpers.hpp"

using namespace cellprob;

namespace {

constexpr std::size_t kBlock = FeatureSpec::kStatsPerBlock;

// Copies `src` into a larger volume at a whole-voxel offset, filling the rest with noise.
Volume3D embed(const Volume3D& src, Index3 offset, Index3 shape, std::mt19937_64& rng) {
  Volume3D out = testing_support::random_volume(shape, rng, 0.0, 1.0, src.voxel_size());
  for (std::int64_t z = 0; z < src.shape().z; ++z)
    for (std::int64_t y = 0; y < src.shape().y; ++y)
      for (std::int64_t x = 0; x < src.shape().x; ++x) out(z + offset.z, y + offset.y, x + offset.x) = src(z, y, x);
  return out;
}

}  // namespace

TEST_SUITE("features properties") {
  TEST_CASE("shifting maps and proposals together leaves features unchanged") {
    std::mt19937_64 rng(401);
    FeatureSpec spec;
    spec.window_sides = {2, 4, 8};
    for (int trial = 0; trial < 10; ++trial) {
      const Vec3 vs{trial % 2 ? 1.0 : 0.5, 1.0, 1.0};
      const Index3 shape{24, 24, 24};
      const Volume3D a = testing_support::random_volume(shape, rng, 0.0, 2.0, vs);
      const Volume3D b = testing_support::random_volume(shape, rng, 0.0, 12.0, vs);
      // proposals far enough from the border that no window is clipped
      std::uniform_int_distribution<int> vox(8, 15);
      CoordSet p;
      for (int i = 0; i < 6; ++i)
        p.push_back({(vox(rng) + 0.5) * vs.z, (vox(rng) + 0.5) * vs.y, (vox(rng) + 0.5) * vs.x});
      std::uniform_int_distribution<int> off(1, 9);
      const Index3 offset{off(rng), off(rng), off(rng)};
      const Index3 big{40, 40, 40};
      const Volume3D a2 = embed(a, offset, big, rng);
      const Volume3D b2 = embed(b, offset, big, rng);
      CoordSet q = p;
      for (Vec3& v : q.points) v = v + Vec3{offset.z * vs.z, offset.y * vs.y, offset.x * vs.x};
      const FeatureMatrix X = extract_features({{"dm", &a}, {"ua", &b}}, p, spec);
      const FeatureMatrix Y = extract_features({{"dm", &a2}, {"ua", &b2}}, q, spec);
      REQUIRE(X.cols() == Y.cols());
      for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t c = 0; c < X.cols(); ++c) CHECK(X(r, c) == Y(r, c));
    }
  }

  TEST_CASE("percentiles are nondecreasing and ratios lie in [0, 1]") {
    std::mt19937_64 rng(402);
    const FeatureSpec spec;
    for (int trial = 0; trial < 8; ++trial) {
      const Index3 shape{20, 26, 30};
      const Volume3D dm = testing_support::random_volume(shape, rng, 0.0, 2.0);
      const Volume3D ua = testing_support::random_volume(shape, rng, 0.0, 12.0);
      const Volume3D ue = testing_support::random_volume(shape, rng, 0.0, 1.2);
      // includes proposals on and just past the border
      const CoordSet p = testing_support::random_points(20, {20, 26, 30}, rng);
      const FeatureMatrix X = extract_features({{"dm", &dm}, {"ua", &ua}, {"ue", &ue}}, p, spec);
      REQUIRE(X.cols() % kBlock == 0);
      for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t b = 0; b < X.cols() / kBlock; ++b) {
          const std::size_t o = b * kBlock;
          for (std::size_t i = 1; i < FeatureSpec::kPercentiles; ++i) CHECK(X(r, o + i - 1) <= X(r, o + i));
          for (std::size_t i = 0; i < FeatureSpec::kThresholds; ++i) {
            const double g = X(r, o + FeatureSpec::kPercentiles + i);
            CHECK(g >= 0.0);
            CHECK(g <= 1.0);
          }
        }
    }
  }
}
