#pragma once

// Brute-force reference implementations the library is checked against:
// direct counting loops, BFS flood fill, per-threshold reconstruction,
// all-pairs distances, full 2^n enumeration, per-voxel probability-space
// EM. Deliberately naive and structurally independent of the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "conseg/grid.hpp"
#include "conseg/volume.hpp"

namespace testutil {

using conseg::Axis;
using conseg::Connectivity;
using conseg::Dims3;
using conseg::Grid3;
using conseg::Plane;
using conseg::Spacing3;
using conseg::ValueKind;
using conseg::Volume;

// ---------------------------------------------------------------- random data

inline Volume random_mask(Dims3 dims, double density, std::mt19937_64& rng,
                          Spacing3 spacing = {}) {
  Volume v = conseg::make_volume(dims, spacing, ValueKind::Binary);
  std::bernoulli_distribution coin(density);
  for (Eigen::Index i = 0; i < v.data().size(); ++i) v.data()[i] = coin(rng) ? 1.0f : 0.0f;
  return v;
}

inline Volume random_probability(Dims3 dims, std::mt19937_64& rng, Spacing3 spacing = {}) {
  Volume v = conseg::make_volume(dims, spacing, ValueKind::Probability);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (Eigen::Index i = 0; i < v.data().size(); ++i) v.data()[i] = u(rng);
  return v;
}

inline Volume random_intensity(Dims3 dims, float lo, float hi, std::mt19937_64& rng,
                               Spacing3 spacing = {}) {
  Volume v = conseg::make_volume(dims, spacing, ValueKind::Intensity);
  std::uniform_real_distribution<float> u(lo, hi);
  for (Eigen::Index i = 0; i < v.data().size(); ++i) v.data()[i] = u(rng);
  return v;
}

inline Volume sphere_mask(Dims3 dims, double cx, double cy, double cz, double radius,
                          Spacing3 spacing = {}) {
  Volume v = conseg::make_volume(dims, spacing, ValueKind::Binary);
  const double r2 = radius * radius;
  for (Eigen::Index z = 0; z < dims.nz; ++z)
    for (Eigen::Index y = 0; y < dims.ny; ++y)
      for (Eigen::Index x = 0; x < dims.nx; ++x) {
        const double dx = static_cast<double>(x) - cx;
        const double dy = static_cast<double>(y) - cy;
        const double dz = static_cast<double>(z) - cz;
        if (dx * dx + dy * dy + dz * dz <= r2) v(x, y, z) = 1.0f;
      }
  return v;
}

// Simulated rater with sensitivity p and specificity q: keeps a foreground
// voxel with probability p and a background voxel background with
// probability q.
inline Volume corrupt_mask(const Volume& truth, double p, double q, std::mt19937_64& rng) {
  Volume v = truth;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < v.data().size(); ++i) {
    const bool fg = truth.data()[i] != 0.0f;
    const bool flip = u(rng) >= (fg ? p : q);
    if (flip) v.data()[i] = fg ? 0.0f : 1.0f;
  }
  return v;
}

// ------------------------------------------------------------ overlap metrics

struct Counts {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Counts counted_confusion(const Volume& gt, const Volume& seg) {
  Counts c;
  const Dims3& d = gt.dims();
  for (Eigen::Index z = 0; z < d.nz; ++z)
    for (Eigen::Index y = 0; y < d.ny; ++y)
      for (Eigen::Index x = 0; x < d.nx; ++x) {
        const bool g = gt(x, y, z) != 0.0f;
        const bool s = seg(x, y, z) != 0.0f;
        if (g && s)
          ++c.tp;
        else if (!g && s)
          ++c.fp;
        else if (g && !s)
          ++c.fn;
        else
          ++c.tn;
      }
  return c;
}

// ----------------------------------------------------------- surface distances

inline std::vector<std::array<double, 3>> brute_surface(const Volume& m) {
  std::vector<std::array<double, 3>> pts;
  const Dims3& d = m.dims();
  const Spacing3& sp = m.spacing;
  const int face[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
  for (Eigen::Index z = 0; z < d.nz; ++z)
    for (Eigen::Index y = 0; y < d.ny; ++y)
      for (Eigen::Index x = 0; x < d.nx; ++x) {
        if (m(x, y, z) == 0.0f) continue;
        bool border = false;
        for (const auto& f : face) {
          const Eigen::Index nx = x + f[0], ny = y + f[1], nz = z + f[2];
          if (!m.grid.in_bounds(nx, ny, nz) || m(nx, ny, nz) == 0.0f) {
            border = true;
            break;
          }
        }
        if (border)
          pts.push_back({static_cast<double>(x) * sp.sx, static_cast<double>(y) * sp.sy,
                         static_cast<double>(z) * sp.sz});
      }
  return pts;
}

struct SurfaceDistances {
  double hausdorff = 0.0;
  double mean = 0.0;
};

inline SurfaceDistances brute_surface_distances(const Volume& g, const Volume& s) {
  const auto gp = brute_surface(g);
  const auto sp = brute_surface(s);
  auto direction = [](const std::vector<std::array<double, 3>>& from,
                      const std::vector<std::array<double, 3>>& to, double& sup, double& sum) {
    for (const auto& a : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& b : to) {
        const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
        best = std::min(best, dx * dx + dy * dy + dz * dz);
      }
      const double dist = std::sqrt(best);
      sup = std::max(sup, dist);
      sum += dist;
    }
  };
  double sup_sg = 0.0, sum_sg = 0.0, sup_gs = 0.0, sum_gs = 0.0;
  direction(sp, gp, sup_sg, sum_sg);
  direction(gp, sp, sup_gs, sum_gs);
  SurfaceDistances out;
  out.hausdorff = std::max(sup_sg, sup_gs);
  out.mean = (sum_sg + sum_gs) / static_cast<double>(sp.size() + gp.size());
  return out;
}

// --------------------------------------------------------- connected components

inline std::vector<std::array<int, 3>> adjacency(Connectivity conn) {
  std::vector<std::array<int, 3>> out;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (!dx && !dy && !dz) continue;
        if (conn == Connectivity::Face6 && std::abs(dx) + std::abs(dy) + std::abs(dz) != 1)
          continue;
        out.push_back({dx, dy, dz});
      }
  return out;
}

// BFS flood fill; labels are 1..K in raster order of first visit.
inline Grid3<std::int32_t> bfs_labels(const Volume& mask, Connectivity conn,
                                      std::vector<Eigen::Index>* sizes = nullptr) {
  const Dims3& d = mask.dims();
  Grid3<std::int32_t> labels(d, 0);
  const auto adj = adjacency(conn);
  if (sizes) sizes->clear();
  std::int32_t next = 0;
  std::deque<std::array<Eigen::Index, 3>> queue;
  for (Eigen::Index z = 0; z < d.nz; ++z)
    for (Eigen::Index y = 0; y < d.ny; ++y)
      for (Eigen::Index x = 0; x < d.nx; ++x) {
        if (mask(x, y, z) == 0.0f || labels(x, y, z) != 0) continue;
        ++next;
        Eigen::Index count = 0;
        labels(x, y, z) = next;
        queue.push_back({x, y, z});
        while (!queue.empty()) {
          const auto [cx, cy, cz] = queue.front();
          queue.pop_front();
          ++count;
          for (const auto& a : adj) {
            const Eigen::Index nx = cx + a[0], ny = cy + a[1], nz = cz + a[2];
            if (!mask.grid.in_bounds(nx, ny, nz)) continue;
            if (mask(nx, ny, nz) == 0.0f || labels(nx, ny, nz) != 0) continue;
            labels(nx, ny, nz) = next;
            queue.push_back({nx, ny, nz});
          }
        }
        if (sizes) sizes->push_back(count);
      }
  return labels;
}

// ----------------------------------------------------- area opening reference

// out(p) = the highest level t such that p lies in a component of
// {img >= t} with at least lambda pixels; the global minimum level always
// qualifies structurally (it is the image support), so out is initialized
// there.
inline Grid3<std::int32_t> reconstruction_area_open(const Grid3<std::int32_t>& img,
                                                    Eigen::Index lambda, Connectivity conn) {
  const Dims3& d = img.dims;
  std::vector<std::int32_t> levels(img.values.data(), img.values.data() + img.size());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  Grid3<std::int32_t> out(d, levels.front());
  Volume thresh = conseg::make_volume(d, {}, ValueKind::Binary);
  for (const std::int32_t t : levels) {
    for (Eigen::Index i = 0; i < img.size(); ++i)
      thresh.data()[i] = img.values[i] >= t ? 1.0f : 0.0f;
    std::vector<Eigen::Index> sizes;
    const Grid3<std::int32_t> labels = bfs_labels(thresh, conn, &sizes);
    for (Eigen::Index i = 0; i < img.size(); ++i) {
      const std::int32_t lab = labels.values[i];
      if (lab != 0 && sizes[static_cast<std::size_t>(lab - 1)] >= lambda) out.values[i] = t;
    }
  }
  return out;
}

// ------------------------------------------------------------------- fusion

inline Volume vote_majority(const std::vector<Volume>& masks) {
  Volume out = conseg::make_volume(masks.front().dims(), masks.front().spacing,
                                   ValueKind::Binary);
  const int J = static_cast<int>(masks.size());
  for (Eigen::Index i = 0; i < out.data().size(); ++i) {
    int votes = 0;
    for (const Volume& m : masks)
      if (m.data()[i] != 0.0f) ++votes;
    out.data()[i] = 2 * votes > J ? 1.0f : 0.0f;
  }
  return out;
}

inline Volume mean_fuse(const Volume& a, const Volume& b, const Volume& c) {
  Volume out = conseg::make_volume(a.dims(), a.spacing, ValueKind::Probability);
  for (Eigen::Index i = 0; i < out.data().size(); ++i)
    out.data()[i] = static_cast<float>(
        (static_cast<double>(a.data()[i]) + b.data()[i] + c.data()[i]) / 3.0);
  return out;
}

// ------------------------------------------------------------ projection maps

inline Plane<double> brute_projection(const std::vector<Volume>& masks, Axis axis) {
  const Dims3& d = masks.front().dims();
  Eigen::Index rows = 0, cols = 0;
  switch (axis) {
    case Axis::Z: rows = d.ny; cols = d.nx; break;
    case Axis::Y: rows = d.nz; cols = d.nx; break;
    case Axis::X: rows = d.nz; cols = d.ny; break;
  }
  Plane<double> map = Plane<double>::Zero(rows, cols);
  for (const Volume& m : masks)
    for (Eigen::Index z = 0; z < d.nz; ++z)
      for (Eigen::Index y = 0; y < d.ny; ++y)
        for (Eigen::Index x = 0; x < d.nx; ++x) {
          if (m(x, y, z) == 0.0f) continue;
          switch (axis) {
            case Axis::Z: map(y, x) += 1.0; break;
            case Axis::Y: map(z, x) += 1.0; break;
            case Axis::X: map(z, y) += 1.0; break;
          }
        }
  map /= static_cast<double>(masks.size()) * static_cast<double>(d[axis]);
  const double peak = map.maxCoeff();
  if (peak > 0.0) map /= peak;
  return map;
}

// ----------------------------------------------------- per-voxel reference EM

struct ReferenceStaple {
  std::vector<double> w;  // per voxel, raster order
  std::vector<double> p, q;
  double f = 0.0;
};

// Direct probability-space EM over the whole grid, one factor per voxel
// and rater, run for a fixed iteration budget (long enough to reach the
// fixed point on the small instances it is used for).
inline ReferenceStaple reference_staple(const std::vector<Volume>& masks, double init_p,
                                        double init_q, int iters) {
  const std::size_t J = masks.size();
  const Eigen::Index N = masks.front().dims().total();
  auto clamp = [](double v) { return std::clamp(v, 1e-7, 1.0 - 1e-7); };

  ReferenceStaple res;
  std::int64_t total_fg = 0;
  for (const Volume& m : masks)
    for (Eigen::Index i = 0; i < N; ++i)
      if (m.data()[i] != 0.0f) ++total_fg;
  res.f = static_cast<double>(total_fg) / (static_cast<double>(J) * static_cast<double>(N));

  res.p.assign(J, clamp(init_p));
  res.q.assign(J, clamp(init_q));
  res.w.assign(static_cast<std::size_t>(N), 0.0);

  for (int it = 0; it < iters; ++it) {
    for (Eigen::Index i = 0; i < N; ++i) {
      double a = res.f, b = 1.0 - res.f;
      for (std::size_t j = 0; j < J; ++j) {
        const bool dij = masks[j].data()[i] != 0.0f;
        a *= dij ? res.p[j] : 1.0 - res.p[j];
        b *= dij ? 1.0 - res.q[j] : res.q[j];
      }
      res.w[static_cast<std::size_t>(i)] = a / (a + b);
    }
    double sum_w = 0.0, sum_1w = 0.0;
    for (const double w : res.w) {
      sum_w += w;
      sum_1w += 1.0 - w;
    }
    for (std::size_t j = 0; j < J; ++j) {
      double num_p = 0.0, num_q = 0.0;
      for (Eigen::Index i = 0; i < N; ++i) {
        const bool dij = masks[j].data()[i] != 0.0f;
        if (dij)
          num_p += res.w[static_cast<std::size_t>(i)];
        else
          num_q += 1.0 - res.w[static_cast<std::size_t>(i)];
      }
      if (sum_w > 0.0) res.p[j] = clamp(num_p / sum_w);
      if (sum_1w > 0.0) res.q[j] = clamp(num_q / sum_1w);
    }
  }
  return res;
}

// ------------------------------------------------------ Wilcoxon enumeration

struct EnumWilcoxon {
  double w = 0.0;
  double p = 1.0;
  int n = 0;
};

// Exact two-sided p by enumerating all 2^n sign assignments of the
// observed (doubled, thus integral) average ranks.
inline EnumWilcoxon enum_wilcoxon(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (const double x : diffs)
    if (x != 0.0) d.push_back(x);
  const int n = static_cast<int>(d.size());

  std::vector<int> order(d.size());
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<std::int64_t> r2(d.size());
  for (int i = 0; i < n;) {
    int j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    for (int k = i; k <= j; ++k) r2[order[k]] = static_cast<std::int64_t>(i) + j + 2;
    i = j + 1;
  }

  std::int64_t w2_plus = 0, s2 = 0;
  for (int k = 0; k < n; ++k) {
    s2 += r2[k];
    if (d[k] > 0.0) w2_plus += r2[k];
  }
  const std::int64_t m2 = std::min(w2_plus, s2 - w2_plus);

  std::uint64_t c = 0;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    std::int64_t t2 = 0;
    for (int k = 0; k < n; ++k)
      if (bits >> k & 1) t2 += r2[k];
    if (t2 <= m2) ++c;
    if (t2 >= s2 - m2) ++c;
  }

  EnumWilcoxon out;
  out.n = n;
  out.w = static_cast<double>(m2) / 2.0;
  out.p = std::min(1.0, static_cast<double>(c) / std::ldexp(1.0, n));
  return out;
}

}  // namespace testutil
