#include "cellprob/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cellprob/error.hpp"

namespace cellprob {

namespace {

// Independent streams per generator stage.
enum Stream : std::uint64_t { kCells = 1, kDistractors = 2, kNoiseA = 3, kNoiseB = 4, kTubes = 5 };

std::uint64_t stream_seed(std::uint64_t seed, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s)};
  std::uint64_t out[1];
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  out[0] = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return out[0];
}

// Rejection sampler against a bucket grid of accepted points.
class Packer {
 public:
  Packer(Vec3 extent, double min_sep) : extent_(extent), min_sep_(min_sep) {
    cell_ = std::max(min_sep, 1e-9);
    for (int d = 0; d < 3; ++d)
      dims_[d] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(extent[d] / cell_)));
    buckets_.resize(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]));
  }

  void add(Vec3 p) { buckets_[bucket(p)].push_back(p); }

  bool fits(Vec3 p) const {
    Index3 b = coords(p);
    const double m2 = min_sep_ * min_sep_;
    for (std::int64_t z = std::max<std::int64_t>(0, b.z - 1); z <= std::min(dims_[0] - 1, b.z + 1); ++z)
      for (std::int64_t y = std::max<std::int64_t>(0, b.y - 1); y <= std::min(dims_[1] - 1, b.y + 1); ++y)
        for (std::int64_t x = std::max<std::int64_t>(0, b.x - 1); x <= std::min(dims_[2] - 1, b.x + 1); ++x)
          for (const Vec3& q : buckets_[static_cast<std::size_t>((z * dims_[1] + y) * dims_[2] + x)])
            if (squared_norm(p - q) < m2) return false;
    return true;
  }

  Vec3 draw(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return {u(rng) * extent_.z, u(rng) * extent_.y, u(rng) * extent_.x};
  }

 private:
  Index3 coords(Vec3 p) const {
    Index3 b;
    for (int d = 0; d < 3; ++d)
      b[d] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(p[d] / cell_)), 0, dims_[d] - 1);
    return b;
  }
  std::size_t bucket(Vec3 p) const {
    const Index3 b = coords(p);
    return static_cast<std::size_t>((b.z * dims_[1] + b.y) * dims_[2] + b.x);
  }

  Vec3 extent_;
  double min_sep_;
  double cell_;
  std::int64_t dims_[3];
  std::vector<std::vector<Vec3>> buckets_;
};

Vec3 extent_of(const SynthSpec& s) {
  return {static_cast<double>(s.shape.z) * s.voxel_size.z, static_cast<double>(s.shape.y) * s.voxel_size.y,
          static_cast<double>(s.shape.x) * s.voxel_size.x};
}

void place(Packer& packer, std::size_t count, std::mt19937_64& rng, std::size_t max_attempts, CoordSet& out) {
  for (std::size_t i = 0; i < count; ++i) {
    bool placed = false;
    for (std::size_t a = 0; a < max_attempts; ++a) {
      const Vec3 p = packer.draw(rng);
      if (!packer.fits(p)) continue;
      packer.add(p);
      out.points.push_back(p);
      placed = true;
      break;
    }
    if (!placed)
      throw Error(ErrorCode::PackingInfeasible, "could not place point " + std::to_string(i + 1) + " of " +
                                                    std::to_string(count) + " at the requested separation");
  }
}

}  // namespace

void SynthSpec::validate() const {
  Volume3D probe({1, 1, 1}, voxel_size);  // validates voxel_size
  for (int d = 0; d < 3; ++d)
    if (shape[d] < 1) throw Error(ErrorCode::InvalidArgument, "synthetic shape entries must be >= 1");
  kernel.validate();
  if (!(min_separation >= 0)) throw Error(ErrorCode::InvalidArgument, "min_separation must be >= 0");
  if (!(noise_sd >= 0) || !(noise_smoothing >= 0) || !(background_floor >= 0))
    throw Error(ErrorCode::InvalidArgument, "noise parameters must be nonnegative");
  if (!(noise_gradient >= 0 && noise_gradient < 1))
    throw Error(ErrorCode::InvalidArgument, "noise_gradient must lie in [0, 1)");
  if (!(distractor_min >= 0 && distractor_min <= distractor_max))
    throw Error(ErrorCode::InvalidArgument, "distractor amplitude range is invalid");
  if (!(tube_radius > 0) || !(tube_step > 0)) throw Error(ErrorCode::InvalidArgument, "tube radius/step must be > 0");
  if (!(tissue_fraction > 0 && tissue_fraction <= 1))
    throw Error(ErrorCode::InvalidArgument, "tissue_fraction must lie in (0, 1]");
}

CoordSet generate_coords(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(stream_seed(spec.seed, kCells));
  Packer packer(extent_of(spec), spec.min_separation);
  CoordSet out;
  place(packer, spec.cell_count, rng, spec.max_attempts, out);
  return out;
}

CoordSet generate_distractors(const CoordSet& cells, const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(stream_seed(spec.seed, kDistractors));
  Packer packer(extent_of(spec), spec.min_separation);
  for (const Vec3& c : cells.points) packer.add(c);
  CoordSet out;
  place(packer, spec.distractor_count, rng, spec.max_attempts, out);
  std::uniform_real_distribution<double> amp(spec.distractor_min, spec.distractor_max);
  for (std::size_t i = 0; i < out.size(); ++i) out.value.push_back(amp(rng));
  return out;
}

Volume3D noise_amplitude_field(const SynthSpec& spec) {
  Volume3D a(spec.shape, spec.voxel_size);
  const double base = spec.noise_sd * spec.kernel.peak();
  const Index3 s = spec.shape;
  std::vector<float> row(static_cast<std::size_t>(s.x));
  for (std::int64_t x = 0; x < s.x; ++x) {
    const double t = 2.0 * (static_cast<double>(x) + 0.5) / static_cast<double>(s.x) - 1.0;
    row[static_cast<std::size_t>(x)] = static_cast<float>(base * (1.0 + spec.noise_gradient * t));
  }
  for (std::int64_t z = 0; z < s.z; ++z)
    for (std::int64_t y = 0; y < s.y; ++y) std::copy(row.begin(), row.end(), &a(z, y, 0));
  return a;
}

Volume3D smoothed_noise(Index3 shape, Vec3 voxel_size, double sigma_voxels, std::uint64_t seed) {
  Volume3D v(shape, voxel_size);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (float& x : v.data()) x = normal(rng);
  if (!(sigma_voxels > 0)) return v;

  const auto radius = static_cast<std::int64_t>(std::ceil(3.0 * sigma_voxels));
  std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0, sum2 = 0;
  for (std::int64_t i = -radius; i <= radius; ++i) {
    const double g = std::exp(-0.5 * static_cast<double>(i * i) / (sigma_voxels * sigma_voxels));
    w[static_cast<std::size_t>(i + radius)] = g;
    sum += g;
  }
  for (auto& g : w) {
    g /= sum;
    sum2 += g * g;
  }
  // Each axis pass scales the variance by sum2; undo it once per pass.
  const double renorm = 1.0 / std::sqrt(sum2);
  for (auto& g : w) g *= renorm;

  const Index3 s = shape;
  std::vector<float> line, out;
  for (int axis = 0; axis < 3; ++axis) {
    const std::int64_t n = s[axis];
    if (n == 1) {
      // A single-voxel axis has nothing to average; keep the variance as is.
      continue;
    }
    const std::int64_t stride = axis == 0 ? s.y * s.x : (axis == 1 ? s.x : 1);
    const std::int64_t lines = s.product() / n;
    line.resize(static_cast<std::size_t>(n));
    out.resize(static_cast<std::size_t>(n));
    for (std::int64_t l = 0; l < lines; ++l) {
      std::int64_t base;
      if (axis == 0) base = l;
      else if (axis == 1) base = (l / s.x) * s.y * s.x + (l % s.x);
      else base = l * s.x;
      for (std::int64_t i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = v.data()[static_cast<std::size_t>(base + i * stride)];
      for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0;
        for (std::int64_t k = -radius; k <= radius; ++k) {
          std::int64_t j = i + k;
          if (j < 0) j = -j - 1;  // mirror at the borders
          if (j >= n) j = 2 * n - j - 1;
          j = std::clamp<std::int64_t>(j, 0, n - 1);
          acc += w[static_cast<std::size_t>(k + radius)] * line[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(i)] = static_cast<float>(acc);
      }
      for (std::int64_t i = 0; i < n; ++i) v.data()[static_cast<std::size_t>(base + i * stride)] = out[static_cast<std::size_t>(i)];
    }
  }
  return v;
}

RegressorOutput oracle_regress(const CoordSet& cells, const SynthSpec& spec) {
  spec.validate();
  KernelSpec kernel = spec.kernel;
  kernel.compounding = Compounding::Max;
  Volume3D signal = render_dm(cells, spec.shape, spec.voxel_size, kernel);
  if (spec.distractor_count > 0) {
    const CoordSet blobs = generate_distractors(cells, spec);
    const Volume3D extra = render_dm(blobs, spec.shape, spec.voxel_size, kernel, blobs.value);
    for (std::size_t i = 0; i < signal.size(); ++i) signal.data()[i] = std::max(signal.data()[i], extra.data()[i]);
  }

  RegressorOutput out{signal, noise_amplitude_field(spec), Volume3D(spec.shape, spec.voxel_size)};
  if (spec.noise_sd == 0) return out;

  const Volume3D n1 = smoothed_noise(spec.shape, spec.voxel_size, spec.noise_smoothing, stream_seed(spec.seed, kNoiseA));
  const Volume3D n2 = smoothed_noise(spec.shape, spec.voxel_size, spec.noise_smoothing, stream_seed(spec.seed, kNoiseB));
  auto dm = out.dm.data();
  auto ue = out.epistemic.data();
  const auto amp = out.aleatoric.data();
  const auto sig = signal.data();
  for (std::size_t i = 0; i < sig.size(); ++i) {
    const float floor_value = static_cast<float>(spec.background_floor) * amp[i];
    float d1 = sig[i] + amp[i] * n1.data()[i];
    float d2 = sig[i] + amp[i] * n2.data()[i];
    if (d1 < floor_value) d1 = 0.0f;
    if (d2 < floor_value) d2 = 0.0f;
    dm[i] = d1;
    ue[i] = 0.5f * std::abs(d1 - d2);
  }
  return out;
}

StructureMasks generate_structures(const SynthSpec& spec) {
  spec.validate();
  StructureMasks m{Volume3D(spec.shape, spec.voxel_size), Volume3D(spec.shape, spec.voxel_size)};
  const Vec3 ext = extent_of(spec);
  const Vec3 center = 0.5 * ext;
  Vec3 semi;
  for (int d = 0; d < 3; ++d) semi[d] = spec.tissue_fraction * 0.5 * ext[d];
  auto inside = [&](Vec3 p) {
    double r = 0;
    for (int d = 0; d < 3; ++d) {
      const double t = (p[d] - center[d]) / semi[d];
      r += t * t;
    }
    return r <= 1.0;
  };
  const Index3 s = spec.shape;
  for (std::int64_t z = 0; z < s.z; ++z)
    for (std::int64_t y = 0; y < s.y; ++y)
      for (std::int64_t x = 0; x < s.x; ++x)
        if (inside(m.tissue.center({z, y, x}))) m.tissue(z, y, x) = 1.0f;

  std::mt19937_64 rng(stream_seed(spec.seed, kTubes));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double length = spec.tube_length > 0 ? spec.tube_length : std::max({ext.z, ext.y, ext.x});
  const auto steps = static_cast<std::size_t>(std::ceil(length / spec.tube_step));
  const double r2 = spec.tube_radius * spec.tube_radius;
  const Vec3 vs = spec.voxel_size;

  auto stamp = [&](Vec3 c) {
    Index3 lo, hi;
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil((c[d] - spec.tube_radius) / vs[d] - 0.5)));
      hi[d] = std::min<std::int64_t>(s[d], static_cast<std::int64_t>(std::floor((c[d] + spec.tube_radius) / vs[d] - 0.5)) + 1);
    }
    for (std::int64_t z = lo.z; z < hi.z; ++z)
      for (std::int64_t y = lo.y; y < hi.y; ++y)
        for (std::int64_t x = lo.x; x < hi.x; ++x)
          if (squared_norm(m.structure.center({z, y, x}) - c) <= r2) m.structure(z, y, x) = 1.0f;
  };

  for (std::size_t t = 0; t < spec.tube_count; ++t) {
    Vec3 p;
    do {
      p = {unit(rng) * ext.z, unit(rng) * ext.y, unit(rng) * ext.x};
    } while (!inside(p));
    Vec3 dir{normal(rng), normal(rng), normal(rng)};
    double norm = std::sqrt(squared_norm(dir));
    dir = (1.0 / std::max(norm, 1e-12)) * dir;
    for (std::size_t k = 0; k <= steps; ++k) {
      stamp(p);
      // Sub-steps keep the tube continuous when the step exceeds the radius.
      const Vec3 next = p + spec.tube_step * dir;
      const double len = spec.tube_step;
      const auto sub = static_cast<int>(std::ceil(len / spec.tube_radius));
      for (int j = 1; j < sub; ++j) stamp(p + (static_cast<double>(j) / sub) * (next - p));
      p = next;
      Vec3 turned = dir + spec.tube_turn * Vec3{normal(rng), normal(rng), normal(rng)};
      norm = std::sqrt(squared_norm(turned));
      dir = (1.0 / std::max(norm, 1e-12)) * turned;
      // Reflect off the tissue boundary so tubes stay inside.
      if (!inside(p + spec.tube_step * dir)) dir = -1.0 * dir;
    }
  }
  for (std::size_t i = 0; i < m.structure.size(); ++i)
    if (!(m.tissue.data()[i] > 0.5f)) m.structure.data()[i] = 0.0f;
  return m;
}

}  // namespace cellprob
