#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace varcause {

enum class ErrorCode {
  ShapeMismatch,
  NotPositiveSemiDefinite,
  Unstable,
  OrderZero,
  InvalidPair,
  InvalidGrid,
  SingularAtFrequency,
  DegenerateRow,
  DimensionTooSmall,
  NoConvergence,
  SingularToeplitz,
  NumericalBreakdown,
  NotConverged,
  RankDeficientRegressors,
  ParseError,
  IoError,
  UsageError,
};

inline constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotPositiveSemiDefinite: return "NotPositiveSemiDefinite";
    case ErrorCode::Unstable: return "Unstable";
    case ErrorCode::OrderZero: return "OrderZero";
    case ErrorCode::InvalidPair: return "InvalidPair";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::SingularAtFrequency: return "SingularAtFrequency";
    case ErrorCode::DegenerateRow: return "DegenerateRow";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularToeplitz: return "SingularToeplitz";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::RankDeficientRegressors: return "RankDeficientRegressors";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

/// True for failures of the numerics on a well-formed input, as opposed to
/// bad input, I/O or usage problems. The CLI maps these to exit status 1.
inline constexpr bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularAtFrequency:
    case ErrorCode::DegenerateRow:
    case ErrorCode::NoConvergence:
    case ErrorCode::SingularToeplitz:
    case ErrorCode::NumericalBreakdown:
    case ErrorCode::NotConverged:
    case ErrorCode::RankDeficientRegressors:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace varcause
