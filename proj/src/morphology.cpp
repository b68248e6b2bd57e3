#include "conseg/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace conseg {

namespace {

std::int32_t uf_find(std::vector<std::int32_t>& parent, std::int32_t i) {
  std::int32_t root = i;
  while (parent[static_cast<std::size_t>(root)] != root)
    root = parent[static_cast<std::size_t>(root)];
  while (parent[static_cast<std::size_t>(i)] != root) {
    std::int32_t next = parent[static_cast<std::size_t>(i)];
    parent[static_cast<std::size_t>(i)] = root;
    i = next;
  }
  return root;
}

Eigen::Index find_zpar(std::vector<Eigen::Index>& zpar, Eigen::Index p) {
  Eigen::Index root = p;
  while (zpar[static_cast<std::size_t>(root)] != root)
    root = zpar[static_cast<std::size_t>(root)];
  while (zpar[static_cast<std::size_t>(p)] != root) {
    Eigen::Index next = zpar[static_cast<std::size_t>(p)];
    zpar[static_cast<std::size_t>(p)] = root;
    p = next;
  }
  return root;
}

}  // namespace

LabelVolume label_components(const Volume& mask, Connectivity conn) {
  require_kind(mask, ValueKind::Binary, "label_components");
  const Dims3& d = mask.dims();
  const auto prev = preceding_neighbor_offsets(conn);

  LabelVolume out;
  out.labels = Grid3<std::int32_t>(d, 0);

  // First pass: provisional labels with union-find over preceding neighbors.
  std::vector<std::int32_t> parent{0};
  std::int32_t next_label = 1;
  for (Eigen::Index z = 0; z < d.nz; ++z)
    for (Eigen::Index y = 0; y < d.ny; ++y)
      for (Eigen::Index x = 0; x < d.nx; ++x) {
        if (mask(x, y, z) == 0.0f) continue;
        std::int32_t lab = 0;
        for (const Offset3& o : prev) {
          const Eigen::Index nx = x + o.dx, ny = y + o.dy, nz = z + o.dz;
          if (!mask.grid.in_bounds(nx, ny, nz) || mask(nx, ny, nz) == 0.0f) continue;
          const std::int32_t nl = uf_find(parent, out.labels(nx, ny, nz));
          if (lab == 0) {
            lab = nl;
          } else if (nl != lab) {
            parent[static_cast<std::size_t>(std::max(lab, nl))] = std::min(lab, nl);
            lab = std::min(lab, nl);
          }
        }
        if (lab == 0) {
          lab = next_label++;
          parent.push_back(lab);
        }
        out.labels(x, y, z) = lab;
      }

  // Second pass: dense labels, numbered by first raster occurrence.
  std::vector<std::int32_t> dense(static_cast<std::size_t>(next_label), 0);
  std::int32_t k = 0;
  for (Eigen::Index i = 0; i < out.labels.size(); ++i) {
    std::int32_t lab = out.labels.values[i];
    if (lab == 0) continue;
    lab = uf_find(parent, lab);
    if (dense[static_cast<std::size_t>(lab)] == 0) {
      dense[static_cast<std::size_t>(lab)] = ++k;
      out.component_sizes.push_back(0);
    }
    const std::int32_t dl = dense[static_cast<std::size_t>(lab)];
    out.labels.values[i] = dl;
    ++out.component_sizes[static_cast<std::size_t>(dl) - 1];
  }
  return out;
}

Volume largest_component(const Volume& mask, Connectivity conn) {
  if (foreground_count(mask) == 0) throw EmptyMask("largest_component: mask has no foreground");
  const LabelVolume lv = label_components(mask, conn);

  // component_sizes is ordered by first raster visit, so max_element's
  // first-wins tie rule picks the raster-first component.
  const auto it = std::max_element(lv.component_sizes.begin(), lv.component_sizes.end());
  const std::int32_t winner =
      static_cast<std::int32_t>(std::distance(lv.component_sizes.begin(), it)) + 1;

  Volume out = make_volume(mask.dims(), mask.spacing, ValueKind::Binary);
  out.data() = (lv.labels.values == winner).cast<float>();
  return out;
}

MaxTree build_maxtree(const Grid3<std::int32_t>& img, Connectivity conn) {
  const Dims3& d = img.dims;
  const Eigen::Index n = img.size();
  if (n <= 0) throw EmptyInput("build_maxtree: empty grid");

  MaxTree t;
  t.dims = d;
  t.parent.assign(static_cast<std::size_t>(n), -1);
  t.level.assign(img.values.data(), img.values.data() + n);
  t.area.assign(static_cast<std::size_t>(n), 0);

  // Processing order: level descending, raster index ascending within a
  // level (stable counting sort when the level range is small).
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  const std::int32_t lo = img.values.minCoeff();
  const std::int32_t hi = img.values.maxCoeff();
  const std::int64_t range = static_cast<std::int64_t>(hi) - lo + 1;
  if (range <= (1 << 20)) {
    std::vector<Eigen::Index> count(static_cast<std::size_t>(range) + 1, 0);
    for (Eigen::Index i = 0; i < n; ++i) ++count[static_cast<std::size_t>(hi - img.values[i])];
    Eigen::Index acc = 0;
    for (auto& c : count) {
      const Eigen::Index tmp = c;
      c = acc;
      acc += tmp;
    }
    for (Eigen::Index i = 0; i < n; ++i)
      order[static_cast<std::size_t>(count[static_cast<std::size_t>(hi - img.values[i])]++)] = i;
  } else {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (img.values[a] != img.values[b]) return img.values[a] > img.values[b];
      return a < b;
    });
  }

  const auto offsets = neighbor_offsets(conn);
  std::vector<Eigen::Index> zpar(static_cast<std::size_t>(n), -1);

  for (const Eigen::Index p : order) {
    t.parent[static_cast<std::size_t>(p)] = p;
    zpar[static_cast<std::size_t>(p)] = p;
    const Eigen::Index z = p / (d.nx * d.ny);
    const Eigen::Index rem = p - z * d.nx * d.ny;
    const Eigen::Index y = rem / d.nx;
    const Eigen::Index x = rem - y * d.nx;
    for (const Offset3& o : offsets) {
      const Eigen::Index nx = x + o.dx, ny = y + o.dy, nz = z + o.dz;
      if (!img.in_bounds(nx, ny, nz)) continue;
      const Eigen::Index q = img.index(nx, ny, nz);
      if (zpar[static_cast<std::size_t>(q)] < 0) continue;  // not processed yet
      const Eigen::Index r = find_zpar(zpar, q);
      if (r != p) {
        t.parent[static_cast<std::size_t>(r)] = p;
        zpar[static_cast<std::size_t>(r)] = p;
      }
    }
  }

  // Canonicalization: make every parent pointer target a canonical pixel.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Eigen::Index p = *it;
    const Eigen::Index q = t.parent[static_cast<std::size_t>(p)];
    const Eigen::Index qq = t.parent[static_cast<std::size_t>(q)];
    if (t.level[static_cast<std::size_t>(qq)] == t.level[static_cast<std::size_t>(q)])
      t.parent[static_cast<std::size_t>(p)] = qq;
  }

  // Subtree areas: direct pixel counts, then accumulate children into
  // parents in level-descending order.
  for (Eigen::Index p = 0; p < n; ++p)
    ++t.area[static_cast<std::size_t>(t.canonical(p))];
  for (const Eigen::Index p : order) {
    if (!t.is_canonical(p) || t.is_root(p)) continue;
    t.area[static_cast<std::size_t>(t.parent[static_cast<std::size_t>(p)])] +=
        t.area[static_cast<std::size_t>(p)];
  }
  return t;
}

Grid3<std::int32_t> area_open(const Grid3<std::int32_t>& img, Eigen::Index lambda,
                              Connectivity conn) {
  if (lambda < 1) throw OutOfRange("area_open: lambda must be >= 1");
  const MaxTree t = build_maxtree(img, conn);
  const Eigen::Index n = img.size();

  // Filtered level per canonical node, parents before children (ascending
  // level order). A root keeps its level: there is no ancestor to fall to.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return t.level[static_cast<std::size_t>(a)] < t.level[static_cast<std::size_t>(b)];
  });

  std::vector<std::int32_t> filtered(static_cast<std::size_t>(n), 0);
  for (const Eigen::Index p : order) {
    if (!t.is_canonical(p)) continue;
    if (t.is_root(p) || t.area[static_cast<std::size_t>(p)] >= lambda)
      filtered[static_cast<std::size_t>(p)] = t.level[static_cast<std::size_t>(p)];
    else
      filtered[static_cast<std::size_t>(p)] =
          filtered[static_cast<std::size_t>(t.parent[static_cast<std::size_t>(p)])];
  }

  Grid3<std::int32_t> out(img.dims);
  for (Eigen::Index p = 0; p < n; ++p)
    out.values[p] = filtered[static_cast<std::size_t>(t.canonical(p))];
  return out;
}

Grid3<std::uint16_t> quantize16(const Volume& v) {
  const float lo = v.data().minCoeff();
  const float hi = v.data().maxCoeff();
  Grid3<std::uint16_t> out(v.dims());
  if (hi <= lo) return out;
  const double scale = 65535.0 / (static_cast<double>(hi) - static_cast<double>(lo));
  for (Eigen::Index i = 0; i < v.data().size(); ++i) {
    const double q = std::lround((static_cast<double>(v.data()[i]) - lo) * scale);
    out.values[i] = static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0));
  }
  return out;
}

}  // namespace conseg
