#pragma once

#include <string>
#include <vector>

#include "conseg/volume.hpp"

namespace conseg {

// Per-rater performance estimate: p is the rater's sensitivity, q its
// specificity, both clamped to [1e-7, 1-1e-7].
struct RaterPerformance {
  double p = 0.0;
  double q = 0.0;
};

enum class PriorMode { GlobalMean };

// Computation region: the axis-aligned bounding box of the union of rater
// foregrounds padded by 1 voxel (default), or the whole grid. Restricting
// to the box keeps the air background from inflating specificity.
enum class StapleRegion { UnionBox, WholeVolume };

struct StapleConfig {
  double init_p = 0.99999;
  double init_q = 0.99999;
  PriorMode prior_mode = PriorMode::GlobalMean;
  StapleRegion region = StapleRegion::UnionBox;
  int max_iters = 100;
  double tol = 1e-6;
  double threshold = 0.5;
};

// Throws ConfigError when a field is out of its documented range.
void validate(const StapleConfig& cfg);

// Flat key=value serialization, one field per line.
std::string to_key_values(const StapleConfig& cfg);
StapleConfig staple_config_from_key_values(const std::string& text);

struct StapleResult {
  Volume weights;  // P(true label = 1) per voxel, 0 outside the region
  // Same values before the float32 projection above. Tolerances tighter
  // than a float ulp (permutation, label-complement) only hold here.
  Grid3<double> posterior;
  std::vector<RaterPerformance> performances;
  double prior = 0.0;  // scalar foreground prior f
  int iterations = 0;
  bool converged = false;
  // Rater was all-background or all-foreground over the region; its p or q
  // sits at a clamp bound and should be read with suspicion.
  std::vector<bool> degenerate;
  // Observed-data log-likelihood after each E-step; non-decreasing.
  std::vector<double> ll_trace;
};

// STAPLE consensus over binary rater masks via expectation-maximization.
// Requires at least 2 masks on one grid. Deterministic, and exactly
// invariant under permutation of the input masks.
StapleResult staple_fuse(const std::vector<Volume>& masks, const StapleConfig& cfg = {});

// Foreground iff weight >= threshold (ties go to foreground).
Volume binarize(const Volume& weights, double threshold);

// Foreground iff strictly more than half the raters mark the voxel.
Volume majority_vote(const std::vector<Volume>& masks);

}  // namespace conseg
