#include "cellprob/features.hpp"

#include <algorithm>
#include <cmath>

#include "cellprob/error.hpp"
#include "cellprob/parallel.hpp"

namespace cellprob {

void FeatureSpec::validate() const {
  if (window_sides.empty()) throw Error(ErrorCode::InvalidArgument, "at least one feature window is required");
  for (std::size_t i = 0; i < window_sides.size(); ++i) {
    if (!(window_sides[i] > 0)) throw Error(ErrorCode::InvalidArgument, "feature window sides must be positive");
    if (i > 0 && window_sides[i] < window_sides[i - 1])
      throw Error(ErrorCode::InvalidArgument, "feature window sides must be sorted ascending");
  }
  if (!(percentile_lo >= 0 && percentile_hi <= 100 && percentile_lo <= percentile_hi))
    throw Error(ErrorCode::InvalidArgument, "percentile range must lie within [0, 100]");
}

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

std::string format_side(double side) {
  std::string s = std::to_string(side);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

std::vector<double> FeatureSpec::percentiles() const { return linspace(percentile_lo, percentile_hi, kPercentiles); }

std::vector<double> FeatureSpec::thresholds(const std::string& map_name) const {
  const auto it = threshold_ranges.find(map_name);
  if (it == threshold_ranges.end())
    throw Error(ErrorCode::InvalidArgument, "no threshold range configured for map '" + map_name + "'");
  return linspace(it->second.first, it->second.second, kThresholds);
}

std::vector<std::string> feature_names(const std::vector<std::string>& map_names, const FeatureSpec& spec) {
  static const char* kStats[] = {"pct0", "pct1", "pct2", "pct3", "pct4", "gt0",  "gt1",
                                 "gt2",  "gt3",  "gt4",  "mean", "sd",   "skew", "kurt"};
  std::vector<std::string> names;
  for (const auto& m : map_names)
    for (double side : spec.window_sides)
      for (const char* stat : kStats) names.push_back(m + "_w" + format_side(side) + "_" + stat);
  return names;
}

void block_statistics(std::vector<float>& values, const std::vector<double>& percentiles,
                      const std::vector<double>& thresholds, double* out) {
  const std::size_t n = values.size();
  if (n == 0) throw Error(ErrorCode::EmptyWindow, "feature window contains no voxels");

  double sum = 0.0;
  std::size_t above[FeatureSpec::kThresholds] = {};
  for (float v : values) {
    sum += v;
    for (std::size_t t = 0; t < thresholds.size(); ++t)
      if (v > thresholds[t]) ++above[t];
  }
  const double mean = sum / static_cast<double>(n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (float v : values) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  const double sd = std::sqrt(m2);

  // Order statistics for the percentiles; positions ascend, so each
  // nth_element only needs the tail left by the previous one.
  std::size_t needed[2 * FeatureSpec::kPercentiles];
  double frac[FeatureSpec::kPercentiles];
  std::size_t lo_idx[FeatureSpec::kPercentiles];
  std::size_t count = 0;
  for (std::size_t q = 0; q < percentiles.size(); ++q) {
    const double pos = percentiles[q] / 100.0 * static_cast<double>(n - 1);
    lo_idx[q] = static_cast<std::size_t>(std::floor(pos));
    frac[q] = pos - static_cast<double>(lo_idx[q]);
    needed[count++] = lo_idx[q];
    needed[count++] = std::min(lo_idx[q] + 1, n - 1);
  }
  std::sort(needed, needed + count);
  auto first = values.begin();
  std::size_t done = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t k = needed[i];
    if (k < done) continue;
    std::nth_element(first + static_cast<std::ptrdiff_t>(done), first + static_cast<std::ptrdiff_t>(k), values.end());
    done = k + 1;
  }
  std::size_t col = 0;
  for (std::size_t q = 0; q < percentiles.size(); ++q) {
    const double a = values[lo_idx[q]];
    const double b = values[std::min(lo_idx[q] + 1, n - 1)];
    out[col++] = a + frac[q] * (b - a);
  }
  for (std::size_t t = 0; t < thresholds.size(); ++t)
    out[col++] = static_cast<double>(above[t]) / static_cast<double>(n);
  out[col++] = mean;
  // Degenerate windows: report SD = skew = kurtosis = 0.
  const bool flat = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
  out[col++] = flat ? 0.0 : sd;
  out[col++] = flat ? 0.0 : m3 / (m2 * sd);
  out[col++] = flat ? 0.0 : m4 / (m2 * m2);
}

FeatureMatrix extract_features(const std::vector<NamedMap>& maps, const CoordSet& proposals, const FeatureSpec& spec) {
  spec.validate();
  if (maps.empty()) throw Error(ErrorCode::InvalidArgument, "at least one map is required");
  const Volume3D& ref = *maps.front().volume;
  for (const auto& m : maps)
    if (!m.volume->same_grid(ref)) throw Error(ErrorCode::ShapeMismatch, "feature maps must share one grid");

  const std::vector<double> pct = spec.percentiles();
  std::vector<std::vector<double>> thr;
  for (const auto& m : maps) thr.push_back(spec.thresholds(m.name));

  std::vector<Index3> sides;
  for (double s : spec.window_sides) {
    Index3 n;
    for (int d = 0; d < 3; ++d)
      n[d] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(s / ref.voxel_size()[d])));
    sides.push_back(n);
  }

  FeatureMatrix X(proposals.size(), spec.dimension(maps.size()));
  parallel_for(proposals.size(), [&](std::size_t i) {
    thread_local std::vector<float> buffer;
    const Index3 c = ref.voxel_of(proposals.points[i]);
    double* row = X.row(i).data();
    std::size_t col = 0;
    for (std::size_t m = 0; m < maps.size(); ++m) {
      const Volume3D& vol = *maps[m].volume;
      for (const Index3& n : sides) {
        Box3 box;
        for (int d = 0; d < 3; ++d) {
          box.lo[d] = c[d] - n[d] / 2;
          box.hi[d] = box.lo[d] + n[d];
        }
        box = intersect(box, vol.bounds());
        buffer.clear();
        for (std::int64_t z = box.lo.z; z < box.hi.z; ++z)
          for (std::int64_t y = box.lo.y; y < box.hi.y; ++y) {
            const float* src = &vol.data()[vol.offset(z, y, box.lo.x)];
            buffer.insert(buffer.end(), src, src + (box.hi.x - box.lo.x));
          }
        block_statistics(buffer, pct, thr[m], row + col);
        col += FeatureSpec::kStatsPerBlock;
      }
    }
  });
  return X;
}

}  // namespace cellprob
