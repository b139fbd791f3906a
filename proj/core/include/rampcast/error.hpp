#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rampcast {

enum class Errc {
  // ingest
  MissingFrame,
  GeometryMismatch,
  CorruptFrame,
  OddDimensions,
  DuplicateTimestamp,
  InsufficientData,
  // solargeo
  WrongKind,
  PolarDayNight,
  // rampdetect
  CadenceMismatch,
  NoDaytimeFrames,
  InsufficientDays,
  NoValidPairs,
  InvalidThreshold,
  // nowcast
  TooFewFrames,
  TooManyLevels,
  DegenerateAutocorrelation,
  InsufficientReference,
  // power
  OutOfDomain,
  MissingModel,
  // verify
  EmptyOverlap,
  ZeroDenominator,
  // pipeline
  InvalidScenario,
  ConfigError,
  MissingInput,
  // generic
  InvalidArgument,
  ParseError,
  IoError,
};

std::string_view to_string(Errc code) noexcept;

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

}  // namespace rampcast
