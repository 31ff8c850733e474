#include "stabeval/error.hpp"

namespace stabeval {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidCost: return "InvalidCost";
    case ErrorCode::ThresholdUnreachable: return "ThresholdUnreachable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::LabelDomainError: return "LabelDomainError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::MissingVariable: return "MissingVariable";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace stabeval
