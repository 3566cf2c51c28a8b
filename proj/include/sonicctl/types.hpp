#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace sonicctl {

/// Largest system dimension supported. Vectors and matrices are dynamically
/// sized but stack allocated up to this bound.
inline constexpr int kMaxDim = 6;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxDim>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

enum class ErrorKind {
  ComplexOrRepeatedEigenvalues,
  OutOfDomain,
  SonicFamilyForbidden,
  InvalidParams,
  EquilibriumNotSonic,
  Unsupported,
  LeftDomain,
  BlowUp,
  NoConvergence,
  Focusing,
  MiddleNotSonicFree,
  CFLViolation,
  GradientBlowup,
  SonicInside,
  MatchFailure,
  HypothesisNotCertified,
  ToleranceNotMet,
  Validation,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ComplexOrRepeatedEigenvalues: return "ComplexOrRepeatedEigenvalues";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::SonicFamilyForbidden: return "SonicFamilyForbidden";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::EquilibriumNotSonic: return "EquilibriumNotSonic";
    case ErrorKind::Unsupported: return "Unsupported";
    case ErrorKind::LeftDomain: return "LeftDomain";
    case ErrorKind::BlowUp: return "BlowUp";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::Focusing: return "Focusing";
    case ErrorKind::MiddleNotSonicFree: return "MiddleNotSonicFree";
    case ErrorKind::CFLViolation: return "CFLViolation";
    case ErrorKind::GradientBlowup: return "GradientBlowup";
    case ErrorKind::SonicInside: return "SonicInside";
    case ErrorKind::MatchFailure: return "MatchFailure";
    case ErrorKind::HypothesisNotCertified: return "HypothesisNotCertified";
    case ErrorKind::ToleranceNotMet: return "ToleranceNotMet";
    case ErrorKind::Validation: return "Validation";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Numerical tolerances shared by the ODE, root-finding and matching stages.
struct Tolerances {
  double ode_tol = 1e-10;
  double root_tol = 1e-13;
};

inline Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace sonicctl
