#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "conseg/volume.hpp"

namespace conseg {

// Affine rescale sending the volume minimum to lo and maximum to hi
// exactly. Output kind is intensity.
Volume normalize_intensity(const Volume& vol, float lo, float hi);

struct PatchSpec {
  Eigen::Index height = 128;
  Eigen::Index width = 128;
  int patches_per_slice = 3;
  std::uint64_t seed = 0;
};

struct PatchOrigin {
  Axis axis = Axis::Z;
  Eigen::Index slice = 0;
  Eigen::Index row0 = 0;
  Eigen::Index col0 = 0;
};

struct Patch {
  Plane<float> pixels;
  Plane<float> mask_pixels;
  PatchOrigin origin;
};

// For every slice along the axis whose brain mask has foreground, draws
// spec.patches_per_slice patch origins uniformly over the valid top-left
// positions (row first, then column). The generator is keyed on
// (seed, axis, slice), so output is identical however slices are ordered
// or distributed across threads.
std::vector<Patch> sample_patches(const Volume& vol, const Volume& brain, Axis axis,
                                  const PatchSpec& spec);

// Voxel-wise mean of the three per-plane probability maps, computed in
// double so fusing three copies of one map returns it exactly.
Volume fuse_triplanar(const Volume& p_ax, const Volume& p_cor, const Volume& p_sag);

// Foreground iff probability >= t (one tie rule everywhere).
Volume threshold_prob(const Volume& p, double t);

// Second-stage input: for one sagittal slice, the co-located slices of the
// three first-stage probability maps, channel order (axial, coronal,
// sagittal).
struct AutoContextSlice {
  Eigen::Index slice = 0;
  std::array<Plane<float>, 3> channels;
};

std::vector<AutoContextSlice> stack_autocontext(const Volume& p_ax, const Volume& p_cor,
                                                const Volume& p_sag);

}  // namespace conseg
