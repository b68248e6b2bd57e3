#pragma once

#include <cstdint>
#include <vector>

#include "conseg/volume.hpp"

namespace conseg {

// Dense labeling of the connected components of a binary mask. Label 0 is
// background; foreground labels are 1..K in order of first raster visit.
struct LabelVolume {
  Grid3<std::int32_t> labels;
  std::vector<Eigen::Index> component_sizes;  // component_sizes[k-1] = size of label k

  std::int32_t num_components() const {
    return static_cast<std::int32_t>(component_sizes.size());
  }
  Eigen::Index size_of(std::int32_t label) const {
    return component_sizes.at(static_cast<std::size_t>(label) - 1);
  }
};

LabelVolume label_components(const Volume& mask, Connectivity conn);

// Keeps exactly the component with the most voxels. On a size tie the
// component containing the raster-first voxel wins.
Volume largest_component(const Volume& mask, Connectivity conn);

// Max-tree of an integer-valued grid: the hierarchy of connected components
// of the upper threshold sets {img >= level}. Stored as a per-pixel parent
// forest in canonical form: every parent pointer targets a canonical pixel,
// and a pixel is canonical iff it is a root or its parent sits at a strictly
// lower level. node areas are subtree pixel counts, valid at canonical
// pixels.
struct MaxTree {
  Dims3 dims;
  std::vector<Eigen::Index> parent;
  std::vector<std::int32_t> level;
  std::vector<Eigen::Index> area;

  bool is_root(Eigen::Index p) const { return parent[static_cast<std::size_t>(p)] == p; }
  bool is_canonical(Eigen::Index p) const {
    return is_root(p) ||
           level[static_cast<std::size_t>(parent[static_cast<std::size_t>(p)])] !=
               level[static_cast<std::size_t>(p)];
  }
  Eigen::Index canonical(Eigen::Index p) const {
    return is_canonical(p) ? p : parent[static_cast<std::size_t>(p)];
  }
};

MaxTree build_maxtree(const Grid3<std::int32_t>& img, Connectivity conn);

// Area opening: every upper-threshold-set component with fewer than lambda
// pixels is lowered to the level of its nearest surviving ancestor.
// Anti-extensive, increasing and idempotent.
Grid3<std::int32_t> area_open(const Grid3<std::int32_t>& img, Eigen::Index lambda,
                              Connectivity conn);

template <typename Scalar>
MaxTree build_maxtree(const Grid3<Scalar>& img, Connectivity conn) {
  static_assert(std::is_integral_v<Scalar>, "max-tree requires integer levels");
  return build_maxtree(img.template cast<std::int32_t>(), conn);
}

template <typename Scalar>
Grid3<Scalar> area_open(const Grid3<Scalar>& img, Eigen::Index lambda, Connectivity conn) {
  static_assert(std::is_integral_v<Scalar>, "area_open requires integer levels");
  Grid3<std::int32_t> out = area_open(img.template cast<std::int32_t>(), lambda, conn);
  return out.cast<Scalar>();
}

// Quantizes a float volume to 16-bit levels (min -> 0, max -> 65535) for
// max-tree construction. A constant volume maps to all zeros.
Grid3<std::uint16_t> quantize16(const Volume& v);

}  // namespace conseg
