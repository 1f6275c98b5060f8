#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace psinf {

enum class ErrorCode {
  NotPositiveDefinite,
  BadBlockSize,
  BadDof,
  TooFewRows,
  SingularSample,
  EmptyDistribution,
  BadProbability,
  MetadataMismatch,
  DimensionMismatch,
  ParseError,
  IoError,
  Usage,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::BadBlockSize: return "BadBlockSize";
    case ErrorCode::BadDof: return "BadDof";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::SingularSample: return "SingularSample";
    case ErrorCode::EmptyDistribution: return "EmptyDistribution";
    case ErrorCode::BadProbability: return "BadProbability";
    case ErrorCode::MetadataMismatch: return "MetadataMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace psinf
