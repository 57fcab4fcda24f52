#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wastegrasp {

enum class ErrorCode {
  InvalidArgument,
  InvalidDepth,
  OutOfBounds,
  DimensionMismatch,
  EmptyCloud,
  EmptyMask,
  ParseError,
  SchemaError,
  LengthMismatch,
  UndefinedMetric,
  TooFewPoints,
  DegenerateCloud,
  EmptySlice,
  OneSidedSlice,
  InsufficientCloud,
  NoFeasibleGrasp,
  IoError,
  PreconditionViolation,
};

/// Stable identifier used in JSON reports and logs, e.g. "EmptyCloud".
std::string_view error_code_name(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the pipeline in particular) can record it per object.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wastegrasp
