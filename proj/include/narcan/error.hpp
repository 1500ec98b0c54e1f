#pragma once

#include <stdexcept>
#include <string>

namespace narcan {

// Error taxonomy shared with the C API (include/narcan/narcan.h keeps the
// numeric values in sync; see capi.cpp).
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  IoFailure = 2,
  EmptyDirectory = 3,
  DecodeFailure = 4,
  DimensionMismatch = 5,
  ManifestMissing = 6,
  DegenerateHomography = 7,
  GeometryMismatch = 8,
  UnsupportedCapability = 9,
  BackendUnavailable = 10,
  InfeasiblePlan = 11,
  CoverageError = 12,
  ShapeMismatch = 13,
  NumericFailure = 14,
  Unknown = 15,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace narcan
