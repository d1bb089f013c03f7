#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qgeo {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Reduced Planck constant used as the Kähler scale when a caller does not
/// supply one. Every function that depends on it takes it explicitly.
inline constexpr double kDefaultHbar = 1.0;

enum class ErrorKind {
  DimensionMismatch,
  OutsideChart,
  InvalidArgument,
  NotNormalized,
  ZeroVector,
  BasePointMismatch,
  UnbalancedPerturbation,
  NonPositiveProbability,
  BoundaryPolicy,
  MissingInput,
  SingularMetric,
  NotFlat,
  NumericalFailure,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::OutsideChart: return "ray outside chart";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::NotNormalized: return "state not normalized";
    case ErrorKind::ZeroVector: return "zero vector";
    case ErrorKind::BasePointMismatch: return "base-point mismatch";
    case ErrorKind::UnbalancedPerturbation: return "unbalanced perturbation";
    case ErrorKind::NonPositiveProbability: return "non-positive probability";
    case ErrorKind::BoundaryPolicy: return "boundary policy violation";
    case ErrorKind::MissingInput: return "missing input";
    case ErrorKind::SingularMetric: return "singular metric";
    case ErrorKind::NotFlat: return "metric is not flat";
    case ErrorKind::NumericalFailure: return "numerical failure";
    case ErrorKind::Io: return "i/o error";
  }
  return "unknown error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace qgeo
