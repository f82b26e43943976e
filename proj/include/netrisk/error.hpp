#pragma once

#include <stdexcept>
#include <string>

namespace netrisk {

enum class ErrorCode {
  ZeroTotal,
  ShapeMismatch,
  NegativeEntry,
  UnstableNetwork,
  NonConvergence,
  RankDeficient,
  InsufficientPeriods,
  TooFewObservations,
  OutOfRangeDistance,
  NonPositiveArgument,
  EmptyPairSum,
  InvalidCovariance,
  OptimizerFailure,
  NoSolution,
  DegenerateK,
  MissingCalibration,
  InsufficientData,
  InvalidArgument,
  IoFailure,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroTotal: return "ZeroTotal";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::UnstableNetwork: return "UnstableNetwork";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InsufficientPeriods: return "InsufficientPeriods";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::OutOfRangeDistance: return "OutOfRangeDistance";
    case ErrorCode::NonPositiveArgument: return "NonPositiveArgument";
    case ErrorCode::EmptyPairSum: return "EmptyPairSum";
    case ErrorCode::InvalidCovariance: return "InvalidCovariance";
    case ErrorCode::OptimizerFailure: return "OptimizerFailure";
    case ErrorCode::NoSolution: return "NoSolution";
    case ErrorCode::DegenerateK: return "DegenerateK";
    case ErrorCode::MissingCalibration: return "MissingCalibration";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

/// Library-wide exception; carries a machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

  /// Validation errors come from bad inputs; numerical errors from failed computation.
  bool is_validation() const {
    switch (code_) {
      case ErrorCode::UnstableNetwork:
      case ErrorCode::NonConvergence:
      case ErrorCode::RankDeficient:
      case ErrorCode::OptimizerFailure:
      case ErrorCode::NoSolution:
        return false;
      default:
        return true;
    }
  }

 private:
  ErrorCode code_;
};

}  // namespace netrisk
