#include "wastegrasp/error.hpp"

namespace wastegrasp {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidDepth: return "InvalidDepth";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UndefinedMetric: return "UndefinedMetric";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::EmptySlice: return "EmptySlice";
    case ErrorCode::OneSidedSlice: return "OneSidedSlice";
    case ErrorCode::InsufficientCloud: return "InsufficientCloud";
    case ErrorCode::NoFeasibleGrasp: return "NoFeasibleGrasp";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
  }
  return "Unknown";
}

}  // namespace wastegrasp
