#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spde_cov {

enum class ErrorKind {
  InvalidArgument,
  ShapeMismatch,
  NonSymmetric,
  NoConvergence,
  NotPSD,
  Singular,
  EllipticityViolated,
  MismatchedBC,
  NoPointwiseKernel,
  NegativeSquare,
  CholeskyFailure,
  TooFewSamples,
  DegenerateFit,
  IoFailure,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonSymmetric: return "NonSymmetric";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::EllipticityViolated: return "EllipticityViolated";
    case ErrorKind::MismatchedBC: return "MismatchedBC";
    case ErrorKind::NoPointwiseKernel: return "NoPointwiseKernel";
    case ErrorKind::NegativeSquare: return "NegativeSquare";
    case ErrorKind::CholeskyFailure: return "CholeskyFailure";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

/// Numerical or contract failure raised by the library. The CLI maps these
/// to exit code 2.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed or inconsistent configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spde_cov
