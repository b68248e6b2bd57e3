#include "conseg/volume.hpp"

#include <cmath>

namespace conseg {

Volume make_volume(Dims3 dims, Spacing3 spacing, ValueKind kind, float fill) {
  Volume v;
  v.grid = Grid3<float>(dims, fill);
  v.spacing = spacing;
  v.kind = kind;
  return v;
}

bool is_binary_data(const Eigen::ArrayXf& data) {
  return ((data == 0.0f) || (data == 1.0f)).all();
}

void validate(const Volume& v) {
  const Dims3& d = v.dims();
  if (d.nx <= 0 || d.ny <= 0 || d.nz <= 0)
    throw Error("volume dims must be positive");
  if (v.grid.values.size() != d.total())
    throw Error("volume data length does not match dims");
  for (int a = 0; a < 3; ++a) {
    const double s = v.spacing[a];
    if (!(s > 0.0) || !std::isfinite(s))
      throw Error("volume spacing must be strictly positive and finite");
  }
  if (v.kind == ValueKind::Binary && !is_binary_data(v.grid.values))
    throw Error("binary volume contains values outside {0,1}");
  if (v.kind == ValueKind::Probability &&
      !((v.grid.values >= 0.0f) && (v.grid.values <= 1.0f)).all())
    throw Error("probability volume contains values outside [0,1]");
}

void require_same_shape(const Volume& a, const Volume& b, const std::string& what) {
  if (!same_shape(a, b)) throw ShapeMismatch(what + ": volumes differ in dims or spacing");
}

void require_kind(const Volume& v, ValueKind kind, const std::string& what) {
  if (v.kind != kind)
    throw Error(what + ": expected " + value_kind_name(kind) + " volume, got " +
                value_kind_name(v.kind));
}

bool operator==(const Volume& a, const Volume& b) {
  return a.dims() == b.dims() && a.spacing == b.spacing && a.kind == b.kind &&
         (a.data() == b.data()).all();
}

Eigen::Index foreground_count(const Volume& mask) {
  return (mask.data() != 0.0f).count();
}

SlicePlane extract_slice(const Volume& v, Axis axis, Eigen::Index index) {
  const Dims3& d = v.dims();
  if (index < 0 || index >= d[axis])
    throw IndexOutOfRange("slice index " + std::to_string(index) + " out of range for axis " +
                          axis_name(axis));
  SlicePlane out;
  switch (axis) {
    case Axis::Z: {
      out.values.resize(d.ny, d.nx);
      for (Eigen::Index y = 0; y < d.ny; ++y)
        for (Eigen::Index x = 0; x < d.nx; ++x) out.values(y, x) = v(x, y, index);
      out.spacing_col = v.spacing.sx;
      out.spacing_row = v.spacing.sy;
      break;
    }
    case Axis::Y: {
      out.values.resize(d.nz, d.nx);
      for (Eigen::Index z = 0; z < d.nz; ++z)
        for (Eigen::Index x = 0; x < d.nx; ++x) out.values(z, x) = v(x, index, z);
      out.spacing_col = v.spacing.sx;
      out.spacing_row = v.spacing.sz;
      break;
    }
    case Axis::X: {
      out.values.resize(d.nz, d.ny);
      for (Eigen::Index z = 0; z < d.nz; ++z)
        for (Eigen::Index y = 0; y < d.ny; ++y) out.values(z, y) = v(index, y, z);
      out.spacing_col = v.spacing.sy;
      out.spacing_row = v.spacing.sz;
      break;
    }
  }
  return out;
}

void insert_slice(Volume& v, Axis axis, Eigen::Index index, const Plane<float>& plane) {
  const Dims3& d = v.dims();
  if (index < 0 || index >= d[axis])
    throw IndexOutOfRange("slice index " + std::to_string(index) + " out of range for axis " +
                          axis_name(axis));
  switch (axis) {
    case Axis::Z:
      if (plane.rows() != d.ny || plane.cols() != d.nx)
        throw ShapeMismatch("insert_slice: plane dims do not match volume");
      for (Eigen::Index y = 0; y < d.ny; ++y)
        for (Eigen::Index x = 0; x < d.nx; ++x) v(x, y, index) = plane(y, x);
      break;
    case Axis::Y:
      if (plane.rows() != d.nz || plane.cols() != d.nx)
        throw ShapeMismatch("insert_slice: plane dims do not match volume");
      for (Eigen::Index z = 0; z < d.nz; ++z)
        for (Eigen::Index x = 0; x < d.nx; ++x) v(x, index, z) = plane(z, x);
      break;
    case Axis::X:
      if (plane.rows() != d.nz || plane.cols() != d.ny)
        throw ShapeMismatch("insert_slice: plane dims do not match volume");
      for (Eigen::Index z = 0; z < d.nz; ++z)
        for (Eigen::Index y = 0; y < d.ny; ++y) v(index, y, z) = plane(z, y);
      break;
  }
}

}  // namespace conseg
