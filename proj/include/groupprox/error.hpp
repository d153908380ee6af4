#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace groupprox {

enum class ErrorCode {
  OverlappingGroups,
  IndexOutOfRange,
  EmptyGroup,
  InvalidBeta,
  InvalidArgument,
  StepTooLarge,
  NotInterior,
  PreconditionViolated,
  BadBracket,
  SolverFailed,
  InvalidSizes,
  EmptyMinibatch,
  DimensionMismatch,
  PartitionMismatch,
  DegenerateLayer,
  NonFinite,
  Io,
  ConfigParse,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-checkable code and, where relevant, the index
/// of the group that triggered it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> group = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        group_(group),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix that what() carries.
  const std::string& message() const noexcept { return message_; }
  std::optional<std::size_t> group() const noexcept { return group_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> group_;
  std::string message_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::OverlappingGroups: return "overlapping-groups";
    case ErrorCode::IndexOutOfRange: return "index-out-of-range";
    case ErrorCode::EmptyGroup: return "empty-group";
    case ErrorCode::InvalidBeta: return "invalid-beta";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::StepTooLarge: return "step-too-large";
    case ErrorCode::NotInterior: return "not-interior";
    case ErrorCode::PreconditionViolated: return "precondition-violated";
    case ErrorCode::BadBracket: return "bad-bracket";
    case ErrorCode::SolverFailed: return "solver-failed";
    case ErrorCode::InvalidSizes: return "invalid-sizes";
    case ErrorCode::EmptyMinibatch: return "empty-minibatch";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::PartitionMismatch: return "partition-mismatch";
    case ErrorCode::DegenerateLayer: return "degenerate-layer";
    case ErrorCode::NonFinite: return "non-finite";
    case ErrorCode::Io: return "io";
    case ErrorCode::ConfigParse: return "config-parse";
  }
  return "unknown";
}

}  // namespace groupprox
