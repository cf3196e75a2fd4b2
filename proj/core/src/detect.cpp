#include "cellprob/detect.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cellprob/error.hpp"

namespace cellprob {

void NmsConfig::validate() const {
  if (!(min_distance > 0)) throw Error(ErrorCode::InvalidArgument, "NMS min_distance must be > 0");
  if (!(threshold >= 0)) throw Error(ErrorCode::InvalidArgument, "NMS threshold must be >= 0");
}

namespace {

struct Candidate {
  float value;
  std::size_t offset;
};

bool is_local_max(const Volume3D& dm, std::int64_t z, std::int64_t y, std::int64_t x, float v) {
  const Index3 s = dm.shape();
  for (std::int64_t dz = -1; dz <= 1; ++dz) {
    const std::int64_t zz = z + dz;
    if (zz < 0 || zz >= s.z) continue;
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      const std::int64_t yy = y + dy;
      if (yy < 0 || yy >= s.y) continue;
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const std::int64_t xx = x + dx;
        if (xx < 0 || xx >= s.x) continue;
        if (dm(zz, yy, xx) > v) return false;
      }
    }
  }
  return true;
}

// Accepted peaks bucketed on a grid with cell side min_distance, so a
// conflicting peak can only sit in the 27 surrounding buckets.
class SuppressionGrid {
 public:
  SuppressionGrid(Vec3 extent, double cell) : cell_(cell) {
    for (int d = 0; d < 3; ++d) dims_[d] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(extent[d] / cell)));
    buckets_.resize(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]));
  }

  bool conflicts(Vec3 p, double min2) const {
    const Index3 b = bucket_of(p);
    for (std::int64_t z = std::max<std::int64_t>(0, b.z - 1); z <= std::min(dims_[0] - 1, b.z + 1); ++z)
      for (std::int64_t y = std::max<std::int64_t>(0, b.y - 1); y <= std::min(dims_[1] - 1, b.y + 1); ++y)
        for (std::int64_t x = std::max<std::int64_t>(0, b.x - 1); x <= std::min(dims_[2] - 1, b.x + 1); ++x)
          for (const Vec3& q : buckets_[index(z, y, x)])
            if (squared_norm(p - q) < min2) return true;
    return false;
  }

  void add(Vec3 p) {
    const Index3 b = bucket_of(p);
    buckets_[index(b.z, b.y, b.x)].push_back(p);
  }

 private:
  Index3 bucket_of(Vec3 p) const {
    Index3 b;
    for (int d = 0; d < 3; ++d)
      b[d] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(p[d] / cell_)), 0, dims_[d] - 1);
    return b;
  }
  std::size_t index(std::int64_t z, std::int64_t y, std::int64_t x) const {
    return static_cast<std::size_t>((z * dims_[1] + y) * dims_[2] + x);
  }

  double cell_;
  std::int64_t dims_[3];
  std::vector<std::vector<Vec3>> buckets_;
};

}  // namespace

CoordSet detect_peaks(const Volume3D& dm, const NmsConfig& cfg) {
  cfg.validate();
  const Index3 s = dm.shape();
  const float floor_value = static_cast<float>(std::max(cfg.threshold, 0.0));
  std::vector<Candidate> candidates;
  for (std::int64_t z = 0; z < s.z; ++z)
    for (std::int64_t y = 0; y < s.y; ++y) {
      const std::size_t row = dm.offset(z, y, 0);
      for (std::int64_t x = 0; x < s.x; ++x) {
        const float v = dm.data()[row + static_cast<std::size_t>(x)];
        if (!(v > floor_value)) continue;
        if (static_cast<double>(v) <= cfg.threshold) continue;
        if (is_local_max(dm, z, y, x, v)) candidates.push_back({v, row + static_cast<std::size_t>(x)});
      }
    }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.offset < b.offset;
  });

  CoordSet out;
  SuppressionGrid grid(dm.extent_um(), cfg.min_distance);
  const double min2 = cfg.min_distance * cfg.min_distance;
  for (const Candidate& c : candidates) {
    const Vec3 p = dm.center(dm.index_of(c.offset));
    if (grid.conflicts(p, min2)) continue;
    grid.add(p);
    out.points.push_back(p);
    out.value.push_back(c.value);
  }
  return out;
}

}  // namespace cellprob
