#include "cellprob/edt.hpp"

#include <cmath>
#include <limits>

#include "cellprob/error.hpp"
#include "cellprob/parallel.hpp"

namespace cellprob {

namespace {

// 1D transform along a line of n samples spaced `step` apart:
// out[p] = min_q ((p - q) * step)^2 + f[q].
void transform_line(const double* f, double* out, std::size_t n, double step, std::vector<std::size_t>& v,
                    std::vector<double>& z) {
  const double inf = std::numeric_limits<double>::infinity();
  const double s2 = step * step;
  v.resize(n);
  z.resize(n + 1);
  std::size_t k = 0;
  std::size_t first = 0;
  while (first < n && f[first] == inf) ++first;
  if (first == n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = inf;
    return;
  }
  v[0] = first;
  z[0] = -inf;
  z[1] = inf;
  for (std::size_t q = first + 1; q < n; ++q) {
    if (f[q] == inf) continue;
    const double qd = static_cast<double>(q);
    for (;;) {
      const double vd = static_cast<double>(v[k]);
      const double s = ((f[q] + s2 * qd * qd) - (f[v[k]] + s2 * vd * vd)) / (2.0 * s2 * (qd - vd));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      if (s <= z[k]) {  // k == 0: q dominates everywhere
        v[0] = q;
        z[1] = inf;
        break;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = inf;
      break;
    }
  }
  k = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const double pd = static_cast<double>(p);
    while (z[k + 1] < pd) ++k;
    const double d = (pd - static_cast<double>(v[k])) * step;
    out[p] = d * d + f[v[k]];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const Volume3D& mask) {
  const Index3 s = mask.shape();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(mask.size());
  bool any = false;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const bool fg = mask.data()[i] > 0.5f;
    any = any || fg;
    d[i] = fg ? 0.0 : inf;
  }
  if (!any) throw Error(ErrorCode::EmptyStructure, "structure mask has no foreground voxel");

  const Vec3 vs = mask.voxel_size();
  const auto sz = static_cast<std::size_t>(s.z), sy = static_cast<std::size_t>(s.y),
             sx = static_cast<std::size_t>(s.x);

  // Pass along x: lines are contiguous.
  parallel_for(sz * sy, [&](std::size_t line) {
    thread_local std::vector<double> in, out, zz;
    thread_local std::vector<std::size_t> vv;
    in.assign(d.begin() + static_cast<std::ptrdiff_t>(line * sx), d.begin() + static_cast<std::ptrdiff_t>((line + 1) * sx));
    out.resize(sx);
    transform_line(in.data(), out.data(), sx, vs.x, vv, zz);
    std::copy(out.begin(), out.end(), d.begin() + static_cast<std::ptrdiff_t>(line * sx));
  });
  // Pass along y.
  parallel_for(sz * sx, [&](std::size_t line) {
    thread_local std::vector<double> in, out, zz;
    thread_local std::vector<std::size_t> vv;
    const std::size_t z = line / sx, x = line % sx;
    in.resize(sy);
    out.resize(sy);
    for (std::size_t y = 0; y < sy; ++y) in[y] = d[(z * sy + y) * sx + x];
    transform_line(in.data(), out.data(), sy, vs.y, vv, zz);
    for (std::size_t y = 0; y < sy; ++y) d[(z * sy + y) * sx + x] = out[y];
  });
  // Pass along z.
  parallel_for(sy * sx, [&](std::size_t line) {
    thread_local std::vector<double> in, out, zz;
    thread_local std::vector<std::size_t> vv;
    in.resize(sz);
    out.resize(sz);
    for (std::size_t z = 0; z < sz; ++z) in[z] = d[z * sy * sx + line];
    transform_line(in.data(), out.data(), sz, vs.z, vv, zz);
    for (std::size_t z = 0; z < sz; ++z) d[z * sy * sx + line] = out[z];
  });
  return d;
}

Volume3D distance_transform(const Volume3D& mask) {
  const auto d2 = squared_distance_transform(mask);
  Volume3D out(mask.shape(), mask.voxel_size());
  for (std::size_t i = 0; i < d2.size(); ++i) out.data()[i] = static_cast<float>(std::sqrt(d2[i]));
  return out;
}

}  // namespace cellprob
