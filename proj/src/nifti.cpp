#include "conseg/nifti.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace conseg {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDefaultVoxOffset = 352;

// NIfTI intent codes used to stamp the value kind on write.
constexpr std::int16_t kIntentEstimate = 1001;  // probability maps
constexpr std::int16_t kIntentLabel = 1002;     // binary masks

template <typename T>
T byteswap(T v) {
  auto bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(v);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

template <typename T>
T read_scalar(std::span<const std::byte> bytes, std::size_t offset, Endianness e) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  if (e == Endianness::Big) v = byteswap(v);
  return v;
}

template <typename T>
void write_scalar(std::vector<std::byte>& out, std::size_t offset, T v) {
  std::memcpy(out.data() + offset, &v, sizeof(T));
}

bool values_in_unit_range(const Eigen::ArrayXf& data) {
  return ((data >= 0.0f) && (data <= 1.0f)).all();
}

}  // namespace

NiftiHeader parse_nifti_header(std::span<const std::byte> bytes) {
  if (bytes.size() < kHeaderSize)
    throw MalformedHeader("header shorter than 348 bytes");

  std::int32_t raw_size = read_scalar<std::int32_t>(bytes, 0, Endianness::Little);
  Endianness e;
  if (raw_size == 348) {
    e = Endianness::Little;
  } else if (byteswap(raw_size) == 348) {
    e = Endianness::Big;
  } else {
    throw MalformedHeader("sizeof_hdr is not 348 under either endianness");
  }

  NiftiHeader h;
  h.endianness = e;
  h.sizeof_hdr = 348;
  for (int i = 0; i < 8; ++i)
    h.dim[i] = read_scalar<std::int16_t>(bytes, 40 + 2 * static_cast<std::size_t>(i), e);
  h.intent_code = read_scalar<std::int16_t>(bytes, 68, e);
  h.datatype = read_scalar<std::int16_t>(bytes, 70, e);
  h.bitpix = read_scalar<std::int16_t>(bytes, 72, e);
  for (int i = 0; i < 8; ++i)
    h.pixdim[i] = read_scalar<float>(bytes, 76 + 4 * static_cast<std::size_t>(i), e);
  h.vox_offset = read_scalar<float>(bytes, 108, e);
  h.scl_slope = read_scalar<float>(bytes, 112, e);
  h.scl_inter = read_scalar<float>(bytes, 116, e);
  std::memcpy(h.magic.data(), bytes.data() + 344, 4);

  const bool n_plus_1 = std::memcmp(h.magic.data(), "n+1", 4) == 0;
  const bool ni1 = std::memcmp(h.magic.data(), "ni1", 4) == 0;
  if (!n_plus_1 && !ni1) throw MalformedHeader("bad magic, expected n+1 or ni1");

  if (h.datatype != kNiftiUint8 && h.datatype != kNiftiInt16 && h.datatype != kNiftiFloat32)
    throw UnsupportedDatatype("datatype code " + std::to_string(h.datatype) +
                              " not supported (uint8, int16, float32 only)");
  return h;
}

Volume read_nifti(std::span<const std::byte> bytes) {
  const NiftiHeader h = parse_nifti_header(bytes);

  if (h.dim[0] != 3)
    throw MalformedHeader("only 3-D volumes are supported, got dim[0]=" +
                          std::to_string(h.dim[0]));
  if (h.dim[1] <= 0 || h.dim[2] <= 0 || h.dim[3] <= 0)
    throw MalformedHeader("non-positive voxel counts in dim");

  const Dims3 dims{h.dim[1], h.dim[2], h.dim[3]};
  const std::size_t nvox = static_cast<std::size_t>(dims.total());
  const std::size_t bytes_per_vox = static_cast<std::size_t>(h.bitpix) / 8;
  const std::size_t expected_bpv =
      h.datatype == kNiftiUint8 ? 1 : (h.datatype == kNiftiInt16 ? 2 : 4);
  if (bytes_per_vox != expected_bpv)
    throw MalformedHeader("bitpix does not match datatype");

  if (!(h.vox_offset >= static_cast<float>(kHeaderSize)))
    throw MalformedHeader("vox_offset before end of header");
  const std::size_t offset = static_cast<std::size_t>(h.vox_offset);
  if (bytes.size() < offset + nvox * bytes_per_vox)
    throw TruncatedData("payload shorter than vox_offset + voxel data");

  Volume v = make_volume(dims);
  for (int a = 0; a < 3; ++a) {
    float s = h.pixdim[a + 1];
    if (!(s > 0.0f) || !std::isfinite(s)) s = 1.0f;
    (a == 0 ? v.spacing.sx : a == 1 ? v.spacing.sy : v.spacing.sz) = static_cast<double>(s);
  }

  const std::byte* src = bytes.data() + offset;
  Eigen::ArrayXf& data = v.data();
  switch (h.datatype) {
    case kNiftiUint8:
      for (std::size_t i = 0; i < nvox; ++i)
        data[static_cast<Eigen::Index>(i)] = static_cast<float>(std::to_integer<std::uint8_t>(src[i]));
      break;
    case kNiftiInt16:
      for (std::size_t i = 0; i < nvox; ++i) {
        std::int16_t raw;
        std::memcpy(&raw, src + 2 * i, 2);
        if (h.endianness == Endianness::Big) raw = byteswap(raw);
        data[static_cast<Eigen::Index>(i)] = static_cast<float>(raw);
      }
      break;
    default:
      for (std::size_t i = 0; i < nvox; ++i) {
        float raw;
        std::memcpy(&raw, src + 4 * i, 4);
        if (h.endianness == Endianness::Big) raw = byteswap(raw);
        data[static_cast<Eigen::Index>(i)] = raw;
      }
      break;
  }

  if (h.scl_slope != 0.0f && !(h.scl_slope == 1.0f && h.scl_inter == 0.0f))
    data = h.scl_slope * data + h.scl_inter;

  if (h.datatype == kNiftiUint8 && is_binary_data(data)) {
    v.kind = ValueKind::Binary;
  } else if (h.intent_code == kIntentEstimate && values_in_unit_range(data)) {
    v.kind = ValueKind::Probability;
  } else {
    v.kind = ValueKind::Intensity;
  }
  return v;
}

std::vector<std::byte> write_nifti(const Volume& v) {
  validate(v);
  const Dims3& d = v.dims();
  if (d.nx > 32767 || d.ny > 32767 || d.nz > 32767)
    throw Error("volume too large for NIfTI-1 int16 dim fields");
  const bool binary = v.kind == ValueKind::Binary;
  const std::int16_t datatype = binary ? kNiftiUint8 : kNiftiFloat32;
  const std::int16_t bitpix = binary ? 8 : 32;
  const std::size_t nvox = static_cast<std::size_t>(d.total());
  const std::size_t voxbytes = nvox * (binary ? 1 : 4);

  std::vector<std::byte> out(kDefaultVoxOffset + voxbytes, std::byte{0});

  write_scalar<std::int32_t>(out, 0, 348);
  write_scalar<char>(out, 38, 'r');  // "regular" flag, ANALYZE compatibility
  write_scalar<std::int16_t>(out, 40, 3);
  write_scalar<std::int16_t>(out, 42, static_cast<std::int16_t>(d.nx));
  write_scalar<std::int16_t>(out, 44, static_cast<std::int16_t>(d.ny));
  write_scalar<std::int16_t>(out, 46, static_cast<std::int16_t>(d.nz));
  for (std::size_t i = 4; i < 8; ++i)
    write_scalar<std::int16_t>(out, 40 + 2 * i, 1);

  std::int16_t intent = 0;
  if (v.kind == ValueKind::Binary) intent = kIntentLabel;
  if (v.kind == ValueKind::Probability) intent = kIntentEstimate;
  write_scalar<std::int16_t>(out, 68, intent);
  write_scalar<std::int16_t>(out, 70, datatype);
  write_scalar<std::int16_t>(out, 72, bitpix);

  write_scalar<float>(out, 76, 1.0f);  // pixdim[0] (qfac; qform unused)
  write_scalar<float>(out, 80, static_cast<float>(v.spacing.sx));
  write_scalar<float>(out, 84, static_cast<float>(v.spacing.sy));
  write_scalar<float>(out, 88, static_cast<float>(v.spacing.sz));
  write_scalar<float>(out, 108, static_cast<float>(kDefaultVoxOffset));
  write_scalar<float>(out, 112, 1.0f);  // scl_slope
  write_scalar<float>(out, 116, 0.0f);  // scl_inter
  write_scalar<std::int16_t>(out, 124, 2);  // xyzt_units: mm
  std::memcpy(out.data() + 344, "n+1", 4);

  std::byte* dst = out.data() + kDefaultVoxOffset;
  const Eigen::ArrayXf& data = v.data();
  if (binary) {
    for (std::size_t i = 0; i < nvox; ++i)
      dst[i] = std::byte{data[static_cast<Eigen::Index>(i)] != 0.0f ? std::uint8_t{1}
                                                                    : std::uint8_t{0}};
  } else {
    std::memcpy(dst, data.data(), voxbytes);
  }
  return out;
}

Volume load_nifti(const std::filesystem::path& path) {
  return read_nifti(read_file(path));
}

void save_nifti(const Volume& v, const std::filesystem::path& path) {
  write_file(path, write_nifti(v));
}

std::vector<std::byte> write_raw(const Volume& v) {
  validate(v);
  const Dims3& d = v.dims();
  const std::size_t nvox = static_cast<std::size_t>(d.total());
  std::vector<std::byte> out(16 + nvox * 4, std::byte{0});
  std::memcpy(out.data(), "CSG0", 4);
  write_scalar<std::uint32_t>(out, 4, static_cast<std::uint32_t>(d.nx));
  write_scalar<std::uint32_t>(out, 8, static_cast<std::uint32_t>(d.ny));
  write_scalar<std::uint32_t>(out, 12, static_cast<std::uint32_t>(d.nz));
  std::memcpy(out.data() + 16, v.data().data(), nvox * 4);
  return out;
}

Volume read_raw(std::span<const std::byte> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "CSG0", 4) != 0)
    throw MalformedHeader("not a CSG0 raw volume");
  const auto nx = read_scalar<std::uint32_t>(bytes, 4, Endianness::Little);
  const auto ny = read_scalar<std::uint32_t>(bytes, 8, Endianness::Little);
  const auto nz = read_scalar<std::uint32_t>(bytes, 12, Endianness::Little);
  if (nx == 0 || ny == 0 || nz == 0) throw MalformedHeader("zero dim in CSG0 header");
  const std::size_t nvox = std::size_t{nx} * ny * nz;
  if (bytes.size() < 16 + nvox * 4) throw TruncatedData("CSG0 payload shorter than dims imply");
  Volume v = make_volume({static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(ny),
                          static_cast<Eigen::Index>(nz)});
  std::memcpy(v.data().data(), bytes.data() + 16, nvox * 4);
  return v;
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::byte> bytes;
  in.seekg(0, std::ios::end);
  bytes.resize(static_cast<std::size_t>(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw IoError("failed reading " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace conseg
