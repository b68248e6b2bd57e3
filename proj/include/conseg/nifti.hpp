#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "conseg/volume.hpp"

namespace conseg {

enum class Endianness { Little, Big };

// The subset of the 348-byte NIfTI-1 header this toolkit reads and writes.
// Endianness is auto-detected from sizeof_hdr; all fields below are already
// byte-corrected.
struct NiftiHeader {
  std::int32_t sizeof_hdr = 348;
  std::array<std::int16_t, 8> dim{};
  std::int16_t intent_code = 0;
  std::int16_t datatype = 0;
  std::int16_t bitpix = 0;
  std::array<float, 8> pixdim{};
  float vox_offset = 352.0f;
  float scl_slope = 1.0f;
  float scl_inter = 0.0f;
  std::array<char, 4> magic{};
  Endianness endianness = Endianness::Little;
};

// NIfTI-1 datatype codes supported by the reader.
inline constexpr std::int16_t kNiftiUint8 = 2;
inline constexpr std::int16_t kNiftiInt16 = 4;
inline constexpr std::int16_t kNiftiFloat32 = 16;

// Parses and validates the fixed header. Throws MalformedHeader when
// sizeof_hdr is not 348 under either endianness or the magic is neither
// "n+1\0" nor "ni1\0"; throws UnsupportedDatatype for datatype codes other
// than uint8 / int16 / float32.
NiftiHeader parse_nifti_header(std::span<const std::byte> bytes);

// Reads a 3-D single-file NIfTI-1 (.nii) payload. int16 and uint8 voxels are
// widened to float32; scl_slope/scl_inter are applied when scl_slope != 0.
// Non-positive or non-finite pixdim entries fall back to 1.0 mm. Value kind
// is recovered from the datatype/intent stamp written by write_nifti
// (uint8 with {0,1} values -> binary, intent 1001 with [0,1] values ->
// probability), defaulting to intensity.
Volume read_nifti(std::span<const std::byte> bytes);

// Emits a little-endian single-file NIfTI-1: float32 for intensity and
// probability volumes, uint8 for binary masks, scl_slope=1, scl_inter=0,
// vox_offset=352. Spacing is stored in the float32 pixdim fields, so
// read_nifti(write_nifti(v)) == v whenever v.spacing is float-representable
// (which holds for every volume read_nifti itself produces).
std::vector<std::byte> write_nifti(const Volume& v);

Volume load_nifti(const std::filesystem::path& path);
void save_nifti(const Volume& v, const std::filesystem::path& path);

// Raw interchange format: 16-byte header (magic "CSG0", three uint32 dims
// little-endian), then float32 little-endian data, x fastest. Carries no
// spacing; read_raw reports 1.0 mm per axis and kind intensity.
std::vector<std::byte> write_raw(const Volume& v);
Volume read_raw(std::span<const std::byte> bytes);

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace conseg
