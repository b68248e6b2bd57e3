#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>

#include "conseg/errors.hpp"

namespace conseg {

enum class Axis : int { X = 0, Y = 1, Z = 2 };

inline const char* axis_name(Axis a) {
  switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    default: return "z";
  }
}

// Voxel adjacency for 3-D grids. On a single-slice grid (nz == 1) these
// reduce to 4- and 8-adjacency in the plane.
enum class Connectivity : int { Face6 = 6, Full26 = 26 };

struct Dims3 {
  Eigen::Index nx = 0, ny = 0, nz = 0;

  Eigen::Index total() const { return nx * ny * nz; }
  Eigen::Index operator[](int axis) const {
    return axis == 0 ? nx : (axis == 1 ? ny : nz);
  }
  Eigen::Index operator[](Axis axis) const { return (*this)[static_cast<int>(axis)]; }
  bool operator==(const Dims3&) const = default;
};

struct Spacing3 {
  double sx = 1.0, sy = 1.0, sz = 1.0;

  double operator[](int axis) const {
    return axis == 0 ? sx : (axis == 1 ? sy : sz);
  }
  double operator[](Axis axis) const { return (*this)[static_cast<int>(axis)]; }
  bool operator==(const Spacing3&) const = default;
};

// Dense 3-D grid over an Eigen array. Storage is flat, x fastest, then y,
// then z ("raster order" throughout the toolkit).
template <typename Scalar>
struct Grid3 {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Dims3 dims;
  Array values;

  Grid3() = default;
  explicit Grid3(Dims3 d, Scalar fill = Scalar(0))
      : dims(d), values(Array::Constant(d.total(), fill)) {}

  Eigen::Index size() const { return values.size(); }

  Eigen::Index index(Eigen::Index x, Eigen::Index y, Eigen::Index z) const {
    return x + dims.nx * (y + dims.ny * z);
  }
  bool in_bounds(Eigen::Index x, Eigen::Index y, Eigen::Index z) const {
    return x >= 0 && x < dims.nx && y >= 0 && y < dims.ny && z >= 0 && z < dims.nz;
  }

  Scalar operator()(Eigen::Index x, Eigen::Index y, Eigen::Index z) const {
    return values[index(x, y, z)];
  }
  Scalar& operator()(Eigen::Index x, Eigen::Index y, Eigen::Index z) {
    return values[index(x, y, z)];
  }

  template <typename Other>
  Grid3<Other> cast() const {
    Grid3<Other> out;
    out.dims = dims;
    out.values = values.template cast<Other>();
    return out;
  }
};

// 2-D plane, indexed (row, col) where col runs along the faster in-plane
// axis. extract_slice documents the axis-to-plane mapping.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct Offset3 {
  int dx, dy, dz;
};

namespace detail {

inline const std::array<Offset3, 6>& face_offsets() {
  static const std::array<Offset3, 6> k = {{{0, 0, -1},
                                            {0, -1, 0},
                                            {-1, 0, 0},
                                            {1, 0, 0},
                                            {0, 1, 0},
                                            {0, 0, 1}}};
  return k;
}

inline const std::array<Offset3, 26>& full_offsets() {
  static const std::array<Offset3, 26> k = [] {
    std::array<Offset3, 26> v{};
    int i = 0;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (dx || dy || dz) v[i++] = {dx, dy, dz};
    return v;
  }();
  return k;
}

}  // namespace detail

// Offsets are ordered by raster delta, so the first half (3 or 13) address
// already-visited voxels during a raster scan.
inline std::span<const Offset3> neighbor_offsets(Connectivity c) {
  if (c == Connectivity::Face6) return detail::face_offsets();
  return detail::full_offsets();
}

inline std::span<const Offset3> preceding_neighbor_offsets(Connectivity c) {
  return neighbor_offsets(c).first(c == Connectivity::Face6 ? 3 : 13);
}

}  // namespace conseg
