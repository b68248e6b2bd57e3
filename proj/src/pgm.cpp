#include "conseg/pgm.hpp"

#include <cmath>
#include <string>

namespace conseg {

std::vector<std::byte> encode_pgm16(const Plane<std::uint16_t>& img) {
  if (img.rows() < 1 || img.cols() < 1) throw EmptyInput("encode_pgm16: empty image");
  const std::string header = "P5\n" + std::to_string(img.cols()) + " " +
                             std::to_string(img.rows()) + "\n65535\n";
  std::vector<std::byte> out;
  out.reserve(header.size() + static_cast<std::size_t>(img.size()) * 2);
  for (const char c : header) out.push_back(static_cast<std::byte>(c));
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const std::uint16_t v = img(r, c);
      out.push_back(static_cast<std::byte>(v >> 8));
      out.push_back(static_cast<std::byte>(v & 0xff));
    }
  return out;
}

Plane<std::uint16_t> quantize_unit_plane(const Plane<double>& unit) {
  Plane<std::uint16_t> out(unit.rows(), unit.cols());
  for (Eigen::Index r = 0; r < unit.rows(); ++r)
    for (Eigen::Index c = 0; c < unit.cols(); ++c) {
      const double v = unit(r, c);
      if (!(v >= 0.0 && v <= 1.0))
        throw OutOfRange("quantize_unit_plane: values must lie in [0,1]");
      out(r, c) = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    }
  return out;
}

}  // namespace conseg
