#pragma once

#include <stdexcept>
#include <string>

namespace stab {

enum class ErrorCode {
  DimensionMismatch,
  DegreeCapExceeded,
  SizeCapExceeded,
  EnumerationCapExceeded,
  BudgetExceeded,
  NonSymmetricInput,
  NonConvergence,
  GradientNotZero,
  HessianNotPD,
  SingularHessian,
  EpsilonNonPositive,
  RadiusTooLarge,
  InvalidArgument,
  InvalidConfig,
  NonFiniteValue,
  IoError,
};

[[nodiscard]] constexpr const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegreeCapExceeded: return "DegreeCapExceeded";
    case ErrorCode::SizeCapExceeded: return "SizeCapExceeded";
    case ErrorCode::EnumerationCapExceeded: return "EnumerationCapExceeded";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::NonSymmetricInput: return "NonSymmetricInput";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::GradientNotZero: return "GradientNotZero";
    case ErrorCode::HessianNotPD: return "HessianNotPD";
    case ErrorCode::SingularHessian: return "SingularHessian";
    case ErrorCode::EpsilonNonPositive: return "EpsilonNonPositive";
    case ErrorCode::RadiusTooLarge: return "RadiusTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stab
