#include "spiralforge/error.hpp"

namespace sf {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroOrNegativeInput: return "ZeroOrNegativeInput";
    case ErrorCode::ResultBelowOne: return "ResultBelowOne";
    case ErrorCode::RadiusOutOfRange: return "RadiusOutOfRange";
    case ErrorCode::InfeasibleReadout: return "InfeasibleReadout";
    case ErrorCode::DegenerateDensity: return "DegenerateDensity";
    case ErrorCode::BoundsViolation: return "BoundsViolation";
    case ErrorCode::CoordOutOfRange: return "CoordOutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidDims: return "InvalidDims";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::ZeroReferenceEnergy: return "ZeroReferenceEnergy";
    case ErrorCode::ImageSmallerThanWindow: return "ImageSmallerThanWindow";
    case ErrorCode::BadWindowLength: return "BadWindowLength";
    case ErrorCode::IndivisibleDims: return "IndivisibleDims";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::ExhaustedRetries: return "ExhaustedRetries";
    case ErrorCode::EvaluatorFailure: return "EvaluatorFailure";
    case ErrorCode::SourceStall: return "SourceStall";
    case ErrorCode::StageError: return "StageError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace sf
