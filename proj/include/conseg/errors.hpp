#pragma once

#include <stdexcept>
#include <string>

namespace conseg {

// Base class for every error thrown by the toolkit.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define CONSEG_DEFINE_ERROR(name)                       \
  struct name : Error {                                 \
    explicit name(const std::string& msg) : Error(msg) {} \
  }

CONSEG_DEFINE_ERROR(MalformedHeader);
CONSEG_DEFINE_ERROR(UnsupportedDatatype);
CONSEG_DEFINE_ERROR(TruncatedData);
CONSEG_DEFINE_ERROR(IndexOutOfRange);
CONSEG_DEFINE_ERROR(ShapeMismatch);
CONSEG_DEFINE_ERROR(EmptyMask);
CONSEG_DEFINE_ERROR(EmptyComparison);
CONSEG_DEFINE_ERROR(EmptyGroundTruth);
CONSEG_DEFINE_ERROR(NoBackground);
CONSEG_DEFINE_ERROR(ConstantVolume);
CONSEG_DEFINE_ERROR(PatchTooLarge);
CONSEG_DEFINE_ERROR(OutOfRange);
CONSEG_DEFINE_ERROR(AllZeroDifferences);
CONSEG_DEFINE_ERROR(EmptyInput);
CONSEG_DEFINE_ERROR(IoError);
CONSEG_DEFINE_ERROR(ConfigError);

#undef CONSEG_DEFINE_ERROR

}  // namespace conseg
