#pragma once

#include <stdexcept>
#include <string>

namespace plumepipe {

enum class Errc {
  // raster-core
  EmptySelection,
  CountMismatch,
  NoValidPixels,
  WavelengthMismatch,
  BandCountMismatch,
  // geometry
  ShapeMismatch,
  OutOfRangeEntry,
  NoSeedPixels,
  // dataset
  BadStride,
  OffsetTooLarge,
  TooFewImages,
  // matched filter
  SingularCovariance,
  TooFewPixels,
  // eval
  LengthMismatch,
  DivisionByZero,
  // synth
  DistortionOutOfRange,
  InvalidCovariance,
  // cli / io
  ConfigError,
  IoError,
  FormatError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace plumepipe
