#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stabeval {

enum class ErrorCode {
  InvalidArgument,
  InvalidCost,
  ThresholdUnreachable,
  DimensionMismatch,
  Unsupported,
  NonConvergence,
  ParseError,
  LabelDomainError,
  SchemaError,
  MissingVariable,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace stabeval
