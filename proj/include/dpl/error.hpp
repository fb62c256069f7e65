#pragma once

#include <stdexcept>
#include <string>

namespace dpl {

enum class ErrorCode {
  InvalidArgument,
  NotPositiveDefinite,
  MissingRecord,
  InfeasibleContext,
  InsufficientSamples,
  CorrectionNotPSD,
  LengthMismatch,
  WeightSumViolation,
  BracketingFailure,
  NonConvergence,
  TimestepFailure,
  ConfigError,
  IoError,
  ParseError,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // what() without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::MissingRecord: return "MissingRecord";
    case ErrorCode::InfeasibleContext: return "InfeasibleContext";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::CorrectionNotPSD: return "CorrectionNotPSD";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::WeightSumViolation: return "WeightSumViolation";
    case ErrorCode::BracketingFailure: return "BracketingFailure";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::TimestepFailure: return "TimestepFailure";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace dpl
