#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qbo {

enum class ErrorCode {
  NonPositiveMass,
  NegativeParameter,
  NonFinite,
  CovarianceBound,
  NonZeroMean,
  NegativeTime,
  ZeroFrequency,
  ZeroDamping,
  UnsupportedOrder,
  ClosureViolation,
  StepSizeUnderflow,
  InvalidGrid,
  QuadratureNonConvergence,
  DegenerateDistribution,
  UnstableStep,
  InvalidSpec,
  RationalOverflow,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveMass: return "NonPositiveMass";
    case ErrorCode::NegativeParameter: return "NegativeParameter";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::CovarianceBound: return "CovarianceBound";
    case ErrorCode::NonZeroMean: return "NonZeroMean";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::ZeroFrequency: return "ZeroFrequency";
    case ErrorCode::ZeroDamping: return "ZeroDamping";
    case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorCode::ClosureViolation: return "ClosureViolation";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::QuadratureNonConvergence: return "QuadratureNonConvergence";
    case ErrorCode::DegenerateDistribution: return "DegenerateDistribution";
    case ErrorCode::UnstableStep: return "UnstableStep";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::RationalOverflow: return "RationalOverflow";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` distinguishes the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qbo
