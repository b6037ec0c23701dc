#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace salience {

/// Failure categories. Each maps to a distinct CLI exit code (see cli.hpp).
enum class ErrorCode {
  kIndexOutOfRange,
  kSimplexViolation,
  kDimensionMismatch,
  kSchema,
  kParse,
  kInvalidArgument,
  kEnumerationCapExceeded,
  kIterationLimit,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIndexOutOfRange: return "index_out_of_range";
    case ErrorCode::kSimplexViolation: return "simplex_violation";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kSchema: return "schema_violation";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kEnumerationCapExceeded: return "enumeration_cap_exceeded";
    case ErrorCode::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace salience
