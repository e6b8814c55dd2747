#pragma once

#include <stdexcept>
#include <string>

namespace gridinertia {

// Error taxonomy shared across the library. The CLI maps the two categories
// to process exit codes: input/validation failures exit 2, numerical
// failures exit 3.
enum class ErrorCode {
  InvalidParameter,
  DegenerateBase,
  DegenerateSlope,
  TraceGridMismatch,
  WeightMissing,
  WindowTooSparse,
  WindowOutOfRange,
  NetworkSolveDiverged,
  ParseError,
  GridError,
  ValueError,
  SchemaError,
  ValidationError,
  IoError,
};

const char* to_string(ErrorCode code);

/// True for failures of the numerics (degenerate slope, near-zero base,
/// diverged network solve); false for bad inputs, files, and invariant
/// violations.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gridinertia
