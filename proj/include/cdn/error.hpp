#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cdn {

enum class ErrorCode {
  DuplicateName,
  UnknownVariable,
  ArityMismatch,
  UnsupportedReduction,
  DomainError,
  ScheduleError,
  DegreeTooLarge,
  NotATree,
  EmptyGraph,
  UnobservedVariable,
  ZeroEvidenceDensity,
  SubsetTooLarge,
  InvalidQuery,
  InvalidParams,
  InvalidMatch,
  UnknownPlayer,
  TeamTooLarge,
  InsufficientData,
  ParseError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::UnsupportedReduction: return "UnsupportedReduction";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ScheduleError: return "ScheduleError";
    case ErrorCode::DegreeTooLarge: return "DegreeTooLarge";
    case ErrorCode::NotATree: return "NotATree";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::UnobservedVariable: return "UnobservedVariable";
    case ErrorCode::ZeroEvidenceDensity: return "ZeroEvidenceDensity";
    case ErrorCode::SubsetTooLarge: return "SubsetTooLarge";
    case ErrorCode::InvalidQuery: return "InvalidQuery";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::InvalidMatch: return "InvalidMatch";
    case ErrorCode::UnknownPlayer: return "UnknownPlayer";
    case ErrorCode::TeamTooLarge: return "TeamTooLarge";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace cdn
