#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cellprob/densitymap.hpp"
#include "cellprob/tiling.hpp"
#include "helpers.hpp"

using namespace cellprob;

namespace {

TilingConfig random_config(std::mt19937_64& rng, TilingStrategy strategy) {
  std::uniform_int_distribution<int> conv(0, 6), peak(0, 4), tile(1, 14);
  TilingConfig c;
  c.strategy = strategy;
  for (int d = 0; d < 3; ++d) {
    c.conv_margin[d] = conv(rng);
    c.peak_margin[d] = strategy == TilingStrategy::PeakMargin ? peak(rng) : 0;
    c.l_in[d] = 2 * (c.conv_margin[d] + c.peak_margin[d]) + tile(rng);
  }
  return c;
}

Index3 random_shape(std::mt19937_64& rng, const TilingConfig& c, int max_side) {
  std::uniform_int_distribution<int> side(1, max_side);
  Index3 s;
  for (int d = 0; d < 3; ++d) s[d] = std::max<std::int64_t>(c.l_out_tile()[d], side(rng));
  return s;
}

Index3 voxel_of(const Vec3& p, const Vec3& vs) {
  return {static_cast<std::int64_t>(std::floor(p.z / vs.z)), static_cast<std::int64_t>(std::floor(p.y / vs.y)),
          static_cast<std::int64_t>(std::floor(p.x / vs.x))};
}

bool lex_less(const Vec3& a, const Vec3& b) {
  if (a.z != b.z) return a.z < b.z;
  if (a.y != b.y) return a.y < b.y;
  return a.x < b.x;
}

}  // namespace

TEST_SUITE("tiling properties") {
  TEST_CASE("derived sizes satisfy the pad and overlap identities") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 500; ++trial) {
      const TilingConfig c =
          random_config(rng, trial % 2 ? TilingStrategy::PeakMargin : TilingStrategy::ConvMargin);
      c.validate();
      CHECK(c.l_pad() == c.conv_margin + c.peak_margin);
      CHECK(c.l_overlap() == c.l_in - c.l_out_tile());
      CHECK(c.l_out() == c.l_in - 2 * c.conv_margin);
      const PatchGrid g = plan_tiling(random_shape(rng, c, 60), c);
      CHECK(g.padded_shape == g.shape + 2 * c.l_pad());
      for (const Patch& p : g.patches) {
        CHECK(p.input.hi - p.input.lo == c.l_in);
        CHECK(p.output.hi - p.output.lo == c.l_out());
        CHECK(p.tile.hi - p.tile.lo == c.l_out_tile());
      }
    }
  }

  TEST_CASE("interior output tiles are disjoint and only trailing tiles overlap") {
    std::mt19937_64 rng(102);
    for (int trial = 0; trial < 100; ++trial) {
      const TilingConfig c = random_config(rng, TilingStrategy::PeakMargin);
      const PatchGrid g = plan_tiling(random_shape(rng, c, 50), c);
      for (std::size_t i = 0; i < g.patches.size(); ++i)
        for (std::size_t j = i + 1; j < g.patches.size(); ++j) {
          const Box3 a = g.tile_in_original(g.patches[i]);
          const Box3 b = g.tile_in_original(g.patches[j]);
          const Box3 both = intersect(a, b);
          if (both.empty()) continue;
          // on every axis where the tiles differ, one of them must end at the border
          for (int d = 0; d < 3; ++d)
            if (a.lo[d] != b.lo[d]) CHECK((a.hi[d] == g.shape[d] || b.hi[d] == g.shape[d]));
        }
    }
  }

  TEST_CASE("stitched GT maps equal the whole-volume render for random shapes and configs") {
    std::mt19937_64 rng(103);
    for (int trial = 0; trial < 25; ++trial) {
      const TilingConfig c = random_config(rng, trial % 3 ? TilingStrategy::PeakMargin : TilingStrategy::ConvMargin);
      const Index3 shape = random_shape(rng, c, 28);
      const Vec3 vs{trial % 2 ? 1.5 : 1.0, 1.0, trial % 4 == 1 ? 0.75 : 1.0};
      const Vec3 extent{shape.z * vs.z, shape.y * vs.y, shape.x * vs.x};
      const CoordSet cells = testing_support::random_points(8, extent, rng);
      KernelSpec k;
      k.sigma = 1.0 + (trial % 3);
      k.cutoff = 3.0 * k.sigma;
      k.compounding = trial % 2 ? Compounding::Sum : Compounding::Max;
      const Volume3D whole = render_dm(cells, shape, vs, k);
      const PatchGrid g = plan_tiling(shape, c);
      Volume3D stitched(shape, vs, -1.0f);
      for (const Patch& p : g.patches) {
        const Box3 w = g.output_in_original(p);
        const Volume3D part = render_dm_box(cells, w, vs, k);
        for (std::int64_t z = p.owned.lo.z; z < p.owned.hi.z; ++z)
          for (std::int64_t y = p.owned.lo.y; y < p.owned.hi.y; ++y)
            for (std::int64_t x = p.owned.lo.x; x < p.owned.hi.x; ++x)
              stitched(z, y, x) = part(z - w.lo.z, y - w.lo.y, x - w.lo.x);
      }
      bool equal = true;
      for (std::size_t i = 0; i < whole.size(); ++i) equal = equal && stitched.data()[i] == whole.data()[i];
      CHECK(equal);
    }
  }

  TEST_CASE("reconstruct after a perfect per-patch split returns the original set") {
    std::mt19937_64 rng(104);
    for (int trial = 0; trial < 60; ++trial) {
      const TilingConfig c = random_config(rng, TilingStrategy::PeakMargin);
      const Index3 shape = random_shape(rng, c, 48);
      const Vec3 vs{1.0, trial % 2 ? 0.8 : 1.0, 1.25};
      const Vec3 extent{shape.z * vs.z, shape.y * vs.y, shape.x * vs.x};
      // greedy Poisson-disk set with separation >= 4
      CoordSet cells;
      const CoordSet pool = testing_support::random_points(200, extent, rng);
      for (const Vec3& p : pool.points) {
        bool ok = true;
        for (const Vec3& q : cells.points) ok = ok && distance(p, q) >= 4.0;
        if (ok) cells.push_back(p);
      }
      const PatchGrid g = plan_tiling(shape, c);
      std::vector<CoordSet> per(g.patches.size());
      for (std::size_t i = 0; i < g.patches.size(); ++i) {
        const Box3 w = g.output_in_original(g.patches[i]);
        for (const Vec3& p : cells.points)
          if (w.contains(voxel_of(p, vs)))
            per[i].push_back({p.z - static_cast<double>(w.lo.z) * vs.z, p.y - static_cast<double>(w.lo.y) * vs.y,
                              p.x - static_cast<double>(w.lo.x) * vs.x});
      }
      CoordSet out = reconstruct_coordinates(per, g, vs);
      REQUIRE(out.size() == cells.size());
      auto a = cells.points, b = out.points;
      std::sort(a.begin(), a.end(), lex_less);
      std::sort(b.begin(), b.end(), lex_less);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(distance(a[i], b[i]) < 1e-9);
    }
  }
}
