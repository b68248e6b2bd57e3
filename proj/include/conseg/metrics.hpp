#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "conseg/volume.hpp"

namespace conseg {

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
};

// Per-voxel 2x2 contingency counts with gt as ground truth.
ConfusionCounts confusion_counts(const Volume& gt, const Volume& seg);

// 2TP / (2TP + FP + FN). Throws EmptyComparison when both masks are empty.
double dice(const ConfusionCounts& c);
// TP / (TP + FN). Throws EmptyGroundTruth when the ground truth is empty.
double sensitivity(const ConfusionCounts& c);
// TN / (TN + FP). Throws NoBackground when the ground truth covers the grid.
double specificity(const ConfusionCounts& c);

// Surface voxel centers in mm (index scaled by spacing). A foreground voxel
// is on the surface iff at least one of its 6 face neighbors is background
// or outside the grid.
struct SurfacePointSet {
  std::vector<Eigen::Vector3d> points;
};

SurfacePointSet extract_surface(const Volume& mask);

// Exact symmetric Hausdorff distance between the two surfaces, in mm.
double hausdorff(const Volume& gt, const Volume& seg);

// Symmetric mean surface distance: nearest-neighbor distances summed in
// both directions, divided by the total surface point count.
double mean_surface_distance(const Volume& gt, const Volume& seg);

struct ErrorVolumes {
  Volume fp_mask;  // seg and not gt
  Volume fn_mask;  // gt and not seg
};

ErrorVolumes error_volumes(const Volume& gt, const Volume& seg);

// Mean across subjects, then mean along the axis, then divided by the map
// maximum (an all-zero map stays all-zero). Plane layout matches
// extract_slice for the same axis.
Plane<double> projection_heatmap(const std::vector<Volume>& err_masks, Axis axis);

struct EvalRecord {
  double dice = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double hausdorff_mm = 0.0;
  double mean_dist_mm = 0.0;
};

// All five metrics of one segmentation against ground truth.
EvalRecord evaluate(const Volume& gt, const Volume& seg);

}  // namespace conseg
