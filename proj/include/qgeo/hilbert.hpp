#pragma once

// Finite-dimensional Hilbert space: states, the Hermitian inner product, rays,
// and the index-chart atlas of the projective space P(C^N).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "qgeo/core.hpp"

namespace qgeo {

inline constexpr double kNormalizedTol = 1e-12;
inline constexpr double kChartZeroTol = 1e-300;

/// A vector psi in C^N, N >= 2. Not necessarily normalized.
class StateVector {
 public:
  StateVector() = default;

  explicit StateVector(CVector amplitudes) : amps_(std::move(amplitudes)) {
    require(amps_.size() >= 2, ErrorKind::InvalidArgument, "state dimension must be >= 2");
    require(amps_.allFinite(), ErrorKind::InvalidArgument, "state amplitudes must be finite");
  }

  static StateVector basis(int dim, int index) {
    require(index >= 1 && index <= dim, ErrorKind::InvalidArgument, "basis index out of range");
    CVector v = CVector::Zero(dim);
    v(index - 1) = 1.0;
    return StateVector(std::move(v));
  }

  int dim() const { return static_cast<int>(amps_.size()); }
  const CVector& amplitudes() const { return amps_; }
  cplx operator[](int i) const { return amps_(i); }

  double norm() const { return amps_.norm(); }
  bool is_normalized(double tol = kNormalizedTol) const {
    return std::abs(amps_.squaredNorm() - 1.0) <= tol;
  }

  StateVector normalized() const {
    const double n = norm();
    require(n > 0.0, ErrorKind::ZeroVector, "cannot normalize the zero vector");
    return StateVector(amps_ / n);
  }

  StateVector scaled(cplx c) const { return StateVector(amps_ * c); }

 private:
  CVector amps_;
};

/// Hermitian inner product <phi|psi>, conjugate-linear in the first slot.
inline cplx inner_product(const StateVector& phi, const StateVector& psi) {
  require(phi.dim() == psi.dim(), ErrorKind::DimensionMismatch,
          "inner product of dimension " + std::to_string(phi.dim()) + " and " +
              std::to_string(psi.dim()));
  return phi.amplitudes().dot(psi.amplitudes());  // Eigen conjugates the left operand
}

/// Real/imaginary split <phi|psi> = (1/2hbar) g + (i/2hbar) omega.
struct RealPairing {
  double g = 0.0;
  double omega = 0.0;
};

inline RealPairing real_pairing(const StateVector& phi, const StateVector& psi,
                                double hbar = kDefaultHbar) {
  const cplx ip = inner_product(phi, psi);
  return {2.0 * hbar * ip.real(), 2.0 * hbar * ip.imag()};
}

/// Coordinates z^k of a ray in the chart U_k = {eta_k != 0}. chart_index is 1-based.
struct ChartPoint {
  int chart_index = 1;
  CVector coords;

  int dim() const { return static_cast<int>(coords.size()) + 1; }

  bool same_point(const ChartPoint& other) const {
    return chart_index == other.chart_index && coords.size() == other.coords.size() &&
           coords == other.coords;
  }

  double coords_norm2() const { return coords.squaredNorm(); }
};

namespace detail {

inline void check_chart_index(int k, int dim) {
  require(k >= 1 && k <= dim, ErrorKind::InvalidArgument,
          "chart index " + std::to_string(k) + " outside [1, " + std::to_string(dim) + "]");
}

}  // namespace detail

/// Vector x = z + u_k in C^N whose chart-k coordinates are z (the affine lift).
inline CVector lift(const ChartPoint& p) {
  const int n = p.dim();
  detail::check_chart_index(p.chart_index, n);
  CVector x(n);
  const int k = p.chart_index - 1;
  for (int i = 0, c = 0; i < n; ++i) {
    x(i) = (i == k) ? cplx(1.0) : p.coords(c++);
  }
  return x;
}

/// Embeds chart-tangent components into C^N (zero in the chart slot).
inline CVector lift_tangent(int chart_index, const CVector& components) {
  const int n = static_cast<int>(components.size()) + 1;
  CVector v(n);
  const int k = chart_index - 1;
  for (int i = 0, c = 0; i < n; ++i) {
    v(i) = (i == k) ? cplx(0.0) : components(c++);
  }
  return v;
}

/// Drops the chart slot of a vector of C^N.
inline CVector drop_slot(int chart_index, const CVector& x) {
  const int n = static_cast<int>(x.size());
  CVector out(n - 1);
  const int k = chart_index - 1;
  for (int i = 0, c = 0; i < n; ++i) {
    if (i != k) out(c++) = x(i);
  }
  return out;
}

inline int auto_chart(const CVector& x) {
  Eigen::Index best = 0;
  x.cwiseAbs().maxCoeff(&best);
  return static_cast<int>(best) + 1;
}

/// z^k_n = eta_n / eta_k (n < k), eta_{n+1} / eta_k (n >= k). An empty chart
/// selects the chart with the largest |eta_k|.
inline ChartPoint to_chart(const CVector& x, std::optional<int> chart = std::nullopt) {
  const int n = static_cast<int>(x.size());
  require(n >= 2, ErrorKind::InvalidArgument, "state dimension must be >= 2");
  const int k = chart.value_or(auto_chart(x));
  detail::check_chart_index(k, n);
  const cplx eta_k = x(k - 1);
  require(std::abs(eta_k) > kChartZeroTol, ErrorKind::OutsideChart,
          "eta_" + std::to_string(k) + " vanishes");
  ChartPoint p;
  p.chart_index = k;
  p.coords = drop_slot(k, x) / eta_k;
  require(p.coords.allFinite(), ErrorKind::OutsideChart, "chart coordinates overflow");
  return p;
}

inline ChartPoint to_chart(const StateVector& psi, std::optional<int> chart = std::nullopt) {
  return to_chart(psi.amplitudes(), chart);
}

/// Normalized representative with eta_k real and positive.
inline StateVector from_chart(const ChartPoint& p) {
  require(p.coords.allFinite(), ErrorKind::InvalidArgument, "chart coordinates must be finite");
  const CVector x = lift(p);
  return StateVector(x / x.norm());
}

inline ChartPoint chart_transition(const ChartPoint& p, int target) {
  if (target == p.chart_index) return p;
  return to_chart(lift(p), target);
}

/// Max modulus of d(phi_j o phi_k^-1)/dz-bar at p, by central differences in the
/// real and imaginary directions of every coordinate.
inline double transition_cr_residual(const ChartPoint& p, int target, double step = 1e-6) {
  const int m = static_cast<int>(p.coords.size());
  double worst = 0.0;
  for (int a = 0; a < m; ++a) {
    auto eval = [&](cplx delta) {
      ChartPoint q = p;
      q.coords(a) += delta;
      return chart_transition(q, target).coords;
    };
    const CVector dx = (eval(step) - eval(-step)) / (2.0 * step);
    const CVector dy = (eval(cplx(0, step)) - eval(cplx(0, -step))) / (2.0 * step);
    const CVector dzbar = 0.5 * (dx + cplx(0, 1) * dy);
    worst = std::max(worst, dzbar.cwiseAbs().maxCoeff());
  }
  return worst;
}

/// Unitarily invariant random state: i.i.d. standard complex Gaussians, normalized.
inline StateVector random_state(int dim, std::uint64_t seed) {
  require(dim >= 2, ErrorKind::InvalidArgument, "random_state requires N >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CVector v(dim);
  for (int i = 0; i < dim; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    v(i) = cplx(re, im);
  }
  return StateVector(v / v.norm());
}

/// Observable on C^N. Construction rejects matrices that are not Hermitian to
/// 1e-10 (relative) and symmetrizes the remainder exactly.
class HermitianOperator {
 public:
  HermitianOperator() = default;

  explicit HermitianOperator(const CMatrix& m) {
    require(m.rows() == m.cols() && m.rows() >= 1, ErrorKind::DimensionMismatch,
            "operator must be square");
    require(m.allFinite(), ErrorKind::InvalidArgument, "operator entries must be finite");
    const double scale = 1.0 + m.norm();
    require((m - m.adjoint()).norm() <= 1e-10 * scale, ErrorKind::InvalidArgument,
            "matrix is not Hermitian");
    m_ = 0.5 * (m + m.adjoint());
  }

  static HermitianOperator diagonal(const RVector& eigenvalues) {
    return HermitianOperator(eigenvalues.cast<cplx>().asDiagonal().toDenseMatrix());
  }

  static HermitianOperator identity(int dim) {
    return HermitianOperator(CMatrix::Identity(dim, dim));
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }

  CVector apply(const CVector& x) const { return m_ * x; }

 private:
  CMatrix m_;
};

/// Hermitian matrix with i.i.d. Gaussian entries (GUE up to scale).
inline HermitianOperator random_hermitian(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      const double re = normal(rng);
      const double im = normal(rng);
      m(i, j) = cplx(re, im);
    }
  }
  return HermitianOperator(0.5 * (m + m.adjoint()));
}

inline CVector random_complex_vector(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CVector v(dim);
  for (int i = 0; i < dim; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    v(i) = cplx(re, im);
  }
  return v;
}

/// Haar-ish random unitary from the QR factorization of a Ginibre matrix.
inline CMatrix random_unitary(int dim, std::mt19937_64& rng) {
  CMatrix g(dim, dim);
  for (int j = 0; j < dim; ++j) g.col(j) = random_complex_vector(dim, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    const cplx d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

inline StateVector random_state(int dim, std::mt19937_64& rng) {
  const CVector v = random_complex_vector(dim, rng);
  return StateVector(v / v.norm());
}

}  // namespace qgeo
