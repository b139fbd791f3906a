#include "rampcast/error.hpp"

namespace rampcast {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MissingFrame: return "MissingFrame";
    case Errc::GeometryMismatch: return "GeometryMismatch";
    case Errc::CorruptFrame: return "CorruptFrame";
    case Errc::OddDimensions: return "OddDimensions";
    case Errc::DuplicateTimestamp: return "DuplicateTimestamp";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::WrongKind: return "WrongKind";
    case Errc::PolarDayNight: return "PolarDayNight";
    case Errc::CadenceMismatch: return "CadenceMismatch";
    case Errc::NoDaytimeFrames: return "NoDaytimeFrames";
    case Errc::InsufficientDays: return "InsufficientDays";
    case Errc::NoValidPairs: return "NoValidPairs";
    case Errc::InvalidThreshold: return "InvalidThreshold";
    case Errc::TooFewFrames: return "TooFewFrames";
    case Errc::TooManyLevels: return "TooManyLevels";
    case Errc::DegenerateAutocorrelation: return "DegenerateAutocorrelation";
    case Errc::InsufficientReference: return "InsufficientReference";
    case Errc::OutOfDomain: return "OutOfDomain";
    case Errc::MissingModel: return "MissingModel";
    case Errc::EmptyOverlap: return "EmptyOverlap";
    case Errc::ZeroDenominator: return "ZeroDenominator";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::ConfigError: return "ConfigError";
    case Errc::MissingInput: return "MissingInput";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace rampcast
