#pragma once

#include <stdexcept>
#include <string>

namespace sf {

// Machine-parsable error codes. The CLI maps categories to exit codes:
// usage/bounds -> 1, data/format -> 2, numerical -> 3.
enum class ErrorCode {
  ZeroOrNegativeInput,
  ResultBelowOne,
  RadiusOutOfRange,
  InfeasibleReadout,
  DegenerateDensity,
  BoundsViolation,
  CoordOutOfRange,
  ShapeMismatch,
  InvalidDims,
  EmptySplit,
  ZeroReference,
  ZeroReferenceEnergy,
  ImageSmallerThanWindow,
  BadWindowLength,
  IndivisibleDims,
  SeriesTooShort,
  NonFiniteLoss,
  ExhaustedRetries,
  EvaluatorFailure,
  SourceStall,
  StageError,
  FormatError,
  IoError,
  ConfigError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sf
