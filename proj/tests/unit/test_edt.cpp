#include <doctest.h>

#include <cmath>
#include <random>

#include "cellprob/edt.hpp"
#include "helpers.hpp"

using namespace cellprob;

TEST_SUITE("edt") {
  TEST_CASE("distance from a single corner voxel") {
    Volume3D m({3, 3, 3}, {1, 1, 1});
    m(0, 0, 0) = 1.0f;
    const Volume3D d = distance_transform(m);
    CHECK(d(0, 0, 0) == 0.0f);
    CHECK(d(0, 0, 1) == doctest::Approx(1.0));
    CHECK(d(1, 1, 1) == doctest::Approx(std::sqrt(3.0)));
    CHECK(d(2, 2, 2) == doctest::Approx(std::sqrt(12.0)));
  }

  TEST_CASE("all foreground is zero everywhere") {
    Volume3D m({4, 3, 2}, {1, 2, 3});
    for (float& f : m.data()) f = 1.0f;
    for (double v : squared_distance_transform(m)) CHECK(v == 0.0);
  }

  TEST_CASE("no foreground is an error") {
    CHECK_THROWS_CODE(squared_distance_transform(Volume3D({3, 3, 3}, {1, 1, 1})), EmptyStructure);
    Volume3D half({2, 2, 2}, {1, 1, 1});
    half(0, 0, 0) = 0.5f;  // not above one half
    CHECK_THROWS_CODE(distance_transform(half), EmptyStructure);
  }

  TEST_CASE("matches brute force on random anisotropic masks") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> dim(1, 9);
    std::uniform_real_distribution<double> vs(0.5, 3.0);
    for (int trial = 0; trial < 30; ++trial) {
      const Index3 shape{dim(rng), dim(rng), dim(rng)};
      Volume3D m = testing_support::random_mask(shape, rng, 0.05, {vs(rng), vs(rng), vs(rng)});
      m.data()[0] = 1.0f;
      const auto got = squared_distance_transform(m);
      const auto want = oracle::edt(testing_support::to_grid(m));
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::sqrt(got[i]) == doctest::Approx(want[i]).epsilon(1e-9));
    }
  }

  TEST_CASE("a plane gives distance along its normal") {
    Volume3D m({6, 5, 5}, {2, 1, 1});
    for (std::int64_t y = 0; y < 5; ++y)
      for (std::int64_t x = 0; x < 5; ++x) m(0, y, x) = 1.0f;
    const Volume3D d = distance_transform(m);
    for (std::int64_t z = 0; z < 6; ++z) CHECK(d(z, 2, 3) == doctest::Approx(2.0 * static_cast<double>(z)));
  }
}
