#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace seqcd {

enum class ErrorCode {
  InvalidArgument,
  EmptyGraph,
  DimensionMismatch,
  EmptySubset,
  SelfLoop,
  NoConvergence,
  TooLarge,
  InvalidEps,
  DegeneratePartition,
  NoFinitePiece,
  NonConvergence,
  ParseError,
  IdOutOfRange,
  NotSquare,
  NotSymmetric,
  BadEntry,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptySubset: return "EmptySubset";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InvalidEps: return "InvalidEps";
    case ErrorCode::DegeneratePartition: return "DegeneratePartition";
    case ErrorCode::NoFinitePiece: return "NoFinitePiece";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IdOutOfRange: return "IdOutOfRange";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::BadEntry: return "BadEntry";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the power iteration when the residual never drops below tol.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, double last_residual)
      : Error(ErrorCode::NoConvergence, what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// Raised by calibration when the alpha sequence has not settled within the
/// round budget. One alpha history per requested target.
class AlphaNonConvergence : public Error {
 public:
  AlphaNonConvergence(const std::string& what, std::vector<std::vector<double>> histories)
      : Error(ErrorCode::NonConvergence, what), histories_(std::move(histories)) {}

  const std::vector<std::vector<double>>& alpha_histories() const noexcept { return histories_; }

 private:
  std::vector<std::vector<double>> histories_;
};

}  // namespace seqcd
