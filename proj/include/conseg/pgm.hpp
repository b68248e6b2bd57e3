#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "conseg/grid.hpp"

namespace conseg {

// Binary PGM (P5) with maxval 65535; row 0 is the top row, samples are
// big-endian per the format.
std::vector<std::byte> encode_pgm16(const Plane<std::uint16_t>& img);

// Rounds a [0,1] plane onto the 16-bit sample range.
Plane<std::uint16_t> quantize_unit_plane(const Plane<double>& unit);

}  // namespace conseg
