#include "cellprob/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cellprob/edt.hpp"
#include "cellprob/error.hpp"
#include "cellprob/parallel.hpp"
#include "cellprob/stats.hpp"

namespace cellprob {

namespace {

constexpr double kUm3PerMm3 = 1e9;

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  double var = 0;
  for (double x : v) var += (x - r.mean) * (x - r.mean);
  r.sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
  return r;
}

double pct_below(const std::vector<double>& d, double cut) {
  if (d.empty()) return 0.0;
  const auto n = std::count_if(d.begin(), d.end(), [&](double x) { return x < cut; });
  return 100.0 * static_cast<double>(n) / static_cast<double>(d.size());
}

}  // namespace

SpatialContext build_spatial_context(const Volume3D& structure, const Volume3D& tissue, const SpatialOptions& opt) {
  if (!structure.same_grid(tissue)) throw Error(ErrorCode::ShapeMismatch, "structure and tissue masks differ in grid");
  SpatialContext ctx;
  ctx.edt = distance_transform(structure);
  std::size_t adjacent = 0;
  for (std::size_t i = 0; i < tissue.size(); ++i) {
    if (!(tissue.data()[i] > 0.5f)) continue;
    ++ctx.tissue_voxels;
    const double dist = ctx.edt.data()[i];
    if (dist < opt.adjacency_um) ++adjacent;
    if (!(structure.data()[i] > 0.5f)) ctx.esd.push_back(dist);
  }
  if (ctx.tissue_voxels == 0) throw Error(ErrorCode::EmptyCells, "tissue mask is empty");
  if (ctx.esd.empty()) throw Error(ErrorCode::DegenerateESD, "no tissue voxel lies outside the structure");
  std::sort(ctx.esd.begin(), ctx.esd.end());
  ctx.tissue_volume_mm3 = static_cast<double>(ctx.tissue_voxels) * tissue.voxel_volume() / kUm3PerMm3;
  ctx.pct_volume_adjacent = 100.0 * static_cast<double>(adjacent) / static_cast<double>(ctx.tissue_voxels);
  return ctx;
}

std::vector<double> cell_distances(const CoordSet& cells, const Volume3D& edt, DistanceLookup lookup) {
  std::vector<double> d(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (lookup == DistanceLookup::Trilinear) {
      d[i] = edt.sample_trilinear(cells.points[i]);
    } else {
      Index3 v = edt.voxel_of(cells.points[i]);
      for (int a = 0; a < 3; ++a) v[a] = std::clamp<std::int64_t>(v[a], 0, edt.shape()[a] - 1);
      d[i] = edt.at(v);
    }
  }
  return d;
}

std::vector<double> distance_grid(const SpatialContext& ctx, const std::vector<double>& cell_dist,
                                  const SpatialOptions& opt) {
  double hi = ctx.esd.empty() ? 0.0 : ctx.esd.back();
  for (double d : cell_dist) hi = std::max(hi, d);
  return uniform_grid(hi, opt.grid_points);
}

std::vector<double> sample_cdf(std::span<const double> samples, std::span<const double> grid, CdfMode mode) {
  if (mode == CdfMode::Kde) return kde_cdf(samples, grid, scott_bandwidth(samples));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  return empirical_cdf(sorted, grid);
}

SpatialReport analyze_deterministic(const CoordSet& cells, const SpatialContext& ctx, const SpatialOptions& opt) {
  cells.validate();
  const std::vector<double> all = cell_distances(cells, ctx.edt, opt.lookup);
  std::vector<double> kept;
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (cells.prob.empty() || cells.prob[i] >= opt.positive_cut) kept.push_back(all[i]);

  SpatialReport r;
  r.mode = "deterministic";
  r.grid = distance_grid(ctx, all, opt);
  r.esd_cdf = empirical_cdf(ctx.esd, r.grid);
  r.pct_volume_adjacent = ctx.pct_volume_adjacent;
  r.cell_count = static_cast<double>(kept.size());
  r.density = r.cell_count / ctx.tissue_volume_mm3;
  r.empty_cells = kept.empty();
  if (!kept.empty()) {
    r.pct_cells_adjacent = pct_below(kept, opt.adjacency_um);
    r.cell_cdf = sample_cdf(kept, r.grid, opt.cdf_mode);
    r.cell_cdf_raw = sample_cdf(kept, r.grid, CdfMode::Empirical);
  }
  return r;
}

SpatialReport analyze_probabilistic(const CoordSet& cells, const SpatialContext& ctx, std::size_t replicates,
                                    std::uint64_t seed, const SpatialOptions& opt) {
  if (replicates < 2) throw Error(ErrorCode::InvalidArgument, "probabilistic analysis needs at least 2 replicates");
  cells.validate();
  const std::vector<double> all = cell_distances(cells, ctx.edt, opt.lookup);

  SpatialReport r;
  r.mode = "probabilistic";
  r.replicates = replicates;
  r.alpha = 2.0 / (static_cast<double>(replicates) + 1.0);
  r.seed = seed;
  r.grid = distance_grid(ctx, all, opt);
  r.esd_cdf = empirical_cdf(ctx.esd, r.grid);
  r.pct_volume_adjacent = ctx.pct_volume_adjacent;

  struct Replicate {
    std::vector<double> cell_cdf, esd_cdf;
    double count = 0, pct_adjacent = 0;
  };
  std::vector<Replicate> reps(replicates);
  parallel_for(replicates, [&](std::size_t t) {
    std::mt19937_64 rng(seed + t);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> kept;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const double p = cells.prob.empty() ? 1.0 : cells.prob[i];
      if (unit(rng) < p) kept.push_back(all[i]);
    }
    Replicate& rep = reps[t];
    rep.count = static_cast<double>(kept.size());
    rep.pct_adjacent = pct_below(kept, opt.adjacency_um);
    if (!kept.empty()) rep.cell_cdf = sample_cdf(kept, r.grid, opt.cdf_mode);

    std::poisson_distribution<std::size_t> pois(static_cast<double>(kept.size()));
    const std::size_t w = kept.empty() ? 0 : pois(rng);
    std::uniform_int_distribution<std::size_t> pick(0, ctx.esd.size() - 1);
    std::vector<double> esd_sample(w);
    for (auto& v : esd_sample) v = ctx.esd[pick(rng)];
    if (!esd_sample.empty()) rep.esd_cdf = sample_cdf(esd_sample, r.grid, opt.cdf_mode);
  });

  const std::size_t g = r.grid.size();
  const double inf = std::numeric_limits<double>::infinity();
  r.cell_envelope = {std::vector<double>(g, inf), std::vector<double>(g, -inf)};
  r.esd_envelope = {std::vector<double>(g, inf), std::vector<double>(g, -inf)};
  std::vector<double> counts, densities, adjacent, volume;
  for (const auto& rep : reps) {
    counts.push_back(rep.count);
    densities.push_back(rep.count / ctx.tissue_volume_mm3);
    adjacent.push_back(rep.pct_adjacent);
    volume.push_back(ctx.pct_volume_adjacent);
    if (rep.cell_cdf.empty()) {
      ++r.empty_replicates;
    } else {
      for (std::size_t i = 0; i < g; ++i) {
        r.cell_envelope.lower[i] = std::min(r.cell_envelope.lower[i], rep.cell_cdf[i]);
        r.cell_envelope.upper[i] = std::max(r.cell_envelope.upper[i], rep.cell_cdf[i]);
      }
    }
    if (!rep.esd_cdf.empty())
      for (std::size_t i = 0; i < g; ++i) {
        r.esd_envelope.lower[i] = std::min(r.esd_envelope.lower[i], rep.esd_cdf[i]);
        r.esd_envelope.upper[i] = std::max(r.esd_envelope.upper[i], rep.esd_cdf[i]);
      }
  }
  for (Envelope* e : {&r.cell_envelope, &r.esd_envelope})
    if (!e->lower.empty() && e->lower.front() == inf) {
      std::fill(e->lower.begin(), e->lower.end(), 0.0);
      std::fill(e->upper.begin(), e->upper.end(), 0.0);
    }
  r.cell_count_stats = mean_sd(counts);
  r.density_stats = mean_sd(densities);
  r.pct_cells_adjacent_stats = mean_sd(adjacent);
  r.pct_volume_adjacent_stats = mean_sd(volume);
  r.cell_count = r.cell_count_stats.mean;
  r.density = r.density_stats.mean;
  r.pct_cells_adjacent = r.pct_cells_adjacent_stats.mean;
  r.empty_cells = r.empty_replicates == replicates;
  return r;
}

}  // namespace cellprob
