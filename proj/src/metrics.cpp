#include "conseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace conseg {

namespace {

// Nearest-neighbor queries over a fixed 3-D point set. Returns squared
// distances; sqrt is taken once by the caller.
class KdTree3 {
 public:
  explicit KdTree3(const std::vector<Eigen::Vector3d>& pts) : pts_(pts) {
    idx_.resize(pts_.size());
    std::iota(idx_.begin(), idx_.end(), std::size_t{0});
    build(0, idx_.size(), 0);
  }

  double min_squared_distance(const Eigen::Vector3d& q) const {
    double best = std::numeric_limits<double>::infinity();
    query(0, idx_.size(), 0, q, best);
    return best;
  }

 private:
  void build(std::size_t lo, std::size_t hi, int depth) {
    if (hi - lo <= 1) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const int ax = depth % 3;
    std::nth_element(idx_.begin() + static_cast<std::ptrdiff_t>(lo),
                     idx_.begin() + static_cast<std::ptrdiff_t>(mid),
                     idx_.begin() + static_cast<std::ptrdiff_t>(hi),
                     [&](std::size_t a, std::size_t b) { return pts_[a][ax] < pts_[b][ax]; });
    build(lo, mid, depth + 1);
    build(mid + 1, hi, depth + 1);
  }

  void query(std::size_t lo, std::size_t hi, int depth, const Eigen::Vector3d& q,
             double& best) const {
    if (lo >= hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const Eigen::Vector3d& p = pts_[idx_[mid]];
    best = std::min(best, (p - q).squaredNorm());
    if (hi - lo == 1) return;
    const int ax = depth % 3;
    const double delta = q[ax] - p[ax];
    if (delta < 0.0) {
      query(lo, mid, depth + 1, q, best);
      if (delta * delta < best) query(mid + 1, hi, depth + 1, q, best);
    } else {
      query(mid + 1, hi, depth + 1, q, best);
      if (delta * delta < best) query(lo, mid, depth + 1, q, best);
    }
  }

  const std::vector<Eigen::Vector3d>& pts_;
  std::vector<std::size_t> idx_;
};

struct SurfaceDistances {
  double hausdorff = 0.0;
  double mean = 0.0;
};

// Shared driver for both surface metrics: nearest-neighbor distances in
// both directions over the two surface point sets.
SurfaceDistances surface_distances(const Volume& gt, const Volume& seg, const char* what) {
  require_same_shape(gt, seg, what);
  const SurfacePointSet g = extract_surface(gt);
  const SurfacePointSet s = extract_surface(seg);
  const KdTree3 gtree(g.points);
  const KdTree3 stree(s.points);

  double sup_sq = 0.0;
  double sum = 0.0;
  for (const Eigen::Vector3d& p : g.points) {
    const double d2 = stree.min_squared_distance(p);
    sup_sq = std::max(sup_sq, d2);
    sum += std::sqrt(d2);
  }
  for (const Eigen::Vector3d& p : s.points) {
    const double d2 = gtree.min_squared_distance(p);
    sup_sq = std::max(sup_sq, d2);
    sum += std::sqrt(d2);
  }

  SurfaceDistances out;
  out.hausdorff = std::sqrt(sup_sq);
  out.mean = sum / static_cast<double>(g.points.size() + s.points.size());
  return out;
}

}  // namespace

ConfusionCounts confusion_counts(const Volume& gt, const Volume& seg) {
  require_same_shape(gt, seg, "confusion_counts");
  require_kind(gt, ValueKind::Binary, "confusion_counts");
  require_kind(seg, ValueKind::Binary, "confusion_counts");
  ConfusionCounts c;
  for (Eigen::Index i = 0; i < gt.data().size(); ++i) {
    const bool g = gt.data()[i] != 0.0f;
    const bool s = seg.data()[i] != 0.0f;
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

double dice(const ConfusionCounts& c) {
  const std::int64_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) throw EmptyComparison("dice: both masks are empty");
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double sensitivity(const ConfusionCounts& c) {
  const std::int64_t denom = c.tp + c.fn;
  if (denom == 0) throw EmptyGroundTruth("sensitivity: ground truth is empty");
  return static_cast<double>(c.tp) / static_cast<double>(denom);
}

double specificity(const ConfusionCounts& c) {
  const std::int64_t denom = c.tn + c.fp;
  if (denom == 0) throw NoBackground("specificity: ground truth has no background");
  return static_cast<double>(c.tn) / static_cast<double>(denom);
}

SurfacePointSet extract_surface(const Volume& mask) {
  require_kind(mask, ValueKind::Binary, "extract_surface");
  const Dims3& d = mask.dims();
  const auto faces = neighbor_offsets(Connectivity::Face6);

  SurfacePointSet out;
  for (Eigen::Index z = 0; z < d.nz; ++z)
    for (Eigen::Index y = 0; y < d.ny; ++y)
      for (Eigen::Index x = 0; x < d.nx; ++x) {
        if (mask(x, y, z) == 0.0f) continue;
        bool border = false;
        for (const Offset3& o : faces) {
          const Eigen::Index nx = x + o.dx, ny = y + o.dy, nz = z + o.dz;
          if (!mask.grid.in_bounds(nx, ny, nz) || mask(nx, ny, nz) == 0.0f) {
            border = true;
            break;
          }
        }
        if (border)
          out.points.emplace_back(static_cast<double>(x) * mask.spacing.sx,
                                  static_cast<double>(y) * mask.spacing.sy,
                                  static_cast<double>(z) * mask.spacing.sz);
      }
  if (out.points.empty()) throw EmptyMask("extract_surface: mask has no foreground");
  return out;
}

double hausdorff(const Volume& gt, const Volume& seg) {
  return surface_distances(gt, seg, "hausdorff").hausdorff;
}

double mean_surface_distance(const Volume& gt, const Volume& seg) {
  return surface_distances(gt, seg, "mean_surface_distance").mean;
}

ErrorVolumes error_volumes(const Volume& gt, const Volume& seg) {
  require_same_shape(gt, seg, "error_volumes");
  require_kind(gt, ValueKind::Binary, "error_volumes");
  require_kind(seg, ValueKind::Binary, "error_volumes");
  ErrorVolumes ev;
  ev.fp_mask = make_volume(gt.dims(), gt.spacing, ValueKind::Binary);
  ev.fn_mask = make_volume(gt.dims(), gt.spacing, ValueKind::Binary);
  ev.fp_mask.data() = ((seg.data() != 0.0f) && (gt.data() == 0.0f)).cast<float>();
  ev.fn_mask.data() = ((gt.data() != 0.0f) && (seg.data() == 0.0f)).cast<float>();
  return ev;
}

Plane<double> projection_heatmap(const std::vector<Volume>& err_masks, Axis axis) {
  if (err_masks.empty()) throw EmptyInput("projection_heatmap: no masks");
  const Dims3& d = err_masks.front().dims();
  for (const Volume& m : err_masks) {
    require_kind(m, ValueKind::Binary, "projection_heatmap");
    if (m.dims() != d)
      throw ShapeMismatch("projection_heatmap: masks must share one grid");
  }

  // Rows and cols follow the extract_slice plane layout for this axis.
  Eigen::Index rows = 0, cols = 0;
  switch (axis) {
    case Axis::Z: rows = d.ny; cols = d.nx; break;
    case Axis::Y: rows = d.nz; cols = d.nx; break;
    case Axis::X: rows = d.nz; cols = d.ny; break;
  }

  Plane<double> acc = Plane<double>::Zero(rows, cols);
  for (const Volume& m : err_masks)
    for (Eigen::Index z = 0; z < d.nz; ++z)
      for (Eigen::Index y = 0; y < d.ny; ++y)
        for (Eigen::Index x = 0; x < d.nx; ++x) {
          if (m(x, y, z) == 0.0f) continue;
          switch (axis) {
            case Axis::Z: acc(y, x) += 1.0; break;
            case Axis::Y: acc(z, x) += 1.0; break;
            case Axis::X: acc(z, y) += 1.0; break;
          }
        }

  acc /= static_cast<double>(err_masks.size()) * static_cast<double>(d[axis]);
  const double peak = acc.maxCoeff();
  if (peak > 0.0) acc /= peak;
  return acc;
}

EvalRecord evaluate(const Volume& gt, const Volume& seg) {
  const ConfusionCounts c = confusion_counts(gt, seg);
  EvalRecord r;
  r.dice = dice(c);
  r.sensitivity = sensitivity(c);
  r.specificity = specificity(c);
  const SurfaceDistances sd = surface_distances(gt, seg, "evaluate");
  r.hausdorff_mm = sd.hausdorff;
  r.mean_dist_mm = sd.mean;
  return r;
}

}  // namespace conseg
