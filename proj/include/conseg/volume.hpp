#pragma once

#include <string>

#include "conseg/grid.hpp"

namespace conseg {

// What the voxel values of a Volume mean. Binary volumes hold {0,1},
// probability volumes hold [0,1]; both are enforced by validate().
enum class ValueKind { Intensity, Binary, Probability };

inline const char* value_kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::Binary: return "binary";
    case ValueKind::Probability: return "probability";
    default: return "intensity";
  }
}

// Universal carrier for images, masks and probability maps: a Grid3<float>
// plus per-axis physical spacing in mm and a value kind.
struct Volume {
  Grid3<float> grid;
  Spacing3 spacing;
  ValueKind kind = ValueKind::Intensity;

  const Dims3& dims() const { return grid.dims; }
  Eigen::ArrayXf& data() { return grid.values; }
  const Eigen::ArrayXf& data() const { return grid.values; }

  float operator()(Eigen::Index x, Eigen::Index y, Eigen::Index z) const {
    return grid(x, y, z);
  }
  float& operator()(Eigen::Index x, Eigen::Index y, Eigen::Index z) {
    return grid(x, y, z);
  }
};

Volume make_volume(Dims3 dims, Spacing3 spacing = {}, ValueKind kind = ValueKind::Intensity,
                   float fill = 0.0f);

// Throws Error when a Volume invariant is broken (size/shape consistency,
// positive finite spacing, value-range per kind).
void validate(const Volume& v);

bool is_binary_data(const Eigen::ArrayXf& data);

inline bool same_shape(const Volume& a, const Volume& b) {
  return a.dims() == b.dims() && a.spacing == b.spacing;
}
void require_same_shape(const Volume& a, const Volume& b, const std::string& what);
void require_kind(const Volume& v, ValueKind kind, const std::string& what);

// Exact equality: dims, spacing, kind and element-wise values.
bool operator==(const Volume& a, const Volume& b);
inline bool operator!=(const Volume& a, const Volume& b) { return !(a == b); }

Eigen::Index foreground_count(const Volume& mask);

// 2-D slice with the in-plane spacing carried over. Plane layout per axis:
//   Axis::Z, slice k: plane(y, x) = vol(x, y, k)   cols = nx, rows = ny
//   Axis::Y, slice k: plane(z, x) = vol(x, k, z)   cols = nx, rows = nz
//   Axis::X, slice k: plane(z, y) = vol(k, y, z)   cols = ny, rows = nz
// i.e. cols run along the faster of the two in-plane axes.
struct SlicePlane {
  Plane<float> values;
  double spacing_col = 1.0;
  double spacing_row = 1.0;
};

SlicePlane extract_slice(const Volume& v, Axis axis, Eigen::Index index);

// Inverse of extract_slice; writes the plane back at the given index.
void insert_slice(Volume& v, Axis axis, Eigen::Index index, const Plane<float>& plane);

}  // namespace conseg
