#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace accelkit {

enum class ErrorCode {
  NonFiniteInput,
  DimensionMismatch,
  InvalidSpec,
  ParseError,
  UnsupportedFormat,
  SingularWindow,
  ZeroVector,
  DegenerateTrace,
  NotSymmetric,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::SingularWindow: return "SingularWindow";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DegenerateTrace: return "DegenerateTrace";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace accelkit
