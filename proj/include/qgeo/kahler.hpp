#pragma once

// The Kähler triple (J, g, omega) of projective space in chart coordinates.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "qgeo/hilbert.hpp"

namespace qgeo {

/// Tangent vector at a chart point, stored by its holomorphic components.
struct TangentVector {
  ChartPoint base;
  CVector components;

  TangentVector() = default;
  TangentVector(ChartPoint b, CVector c) : base(std::move(b)), components(std::move(c)) {
    require(components.size() == base.coords.size(), ErrorKind::DimensionMismatch,
            "tangent components must match chart dimension");
    require(components.allFinite(), ErrorKind::InvalidArgument, "tangent components must be finite");
  }
};

struct MetricValue {
  double g = 0.0;
  double omega = 0.0;
};

namespace detail {

inline void check_common_base(const TangentVector& v, const TangentVector& w) {
  require(v.base.same_point(w.base), ErrorKind::BasePointMismatch,
          "tangent vectors live at different points");
}

// (v|w)/(1+|z|^2) - (v|z)(z|w)/(1+|z|^2)^2
inline cplx hermitian_bracket(const CVector& z, const CVector& v, const CVector& w) {
  const double s = 1.0 + z.squaredNorm();
  return v.dot(w) / s - v.dot(z) * z.dot(w) / (s * s);
}

}  // namespace detail

/// Both parts of the Hermitian pairing at once: g = 2 nu Re[...], omega = 2 nu Im[...].
inline MetricValue kahler_pairing(const TangentVector& v, const TangentVector& w,
                                  double nu = kDefaultHbar) {
  detail::check_common_base(v, w);
  const cplx b = detail::hermitian_bracket(v.base.coords, v.components, w.components);
  return {2.0 * nu * b.real(), 2.0 * nu * b.imag()};
}

inline double fs_metric(const TangentVector& v, const TangentVector& w, double nu = kDefaultHbar) {
  return kahler_pairing(v, w, nu).g;
}

inline double symplectic_form(const TangentVector& v, const TangentVector& w,
                              double nu = kDefaultHbar) {
  return kahler_pairing(v, w, nu).omega;
}

/// Hermitian component matrix g_mn = delta_mn/(1+|z|^2) - conj(z_m) z_n/(1+|z|^2)^2,
/// the coefficient of dz_m (x) dz-bar_n.
inline CMatrix fs_component_matrix(const ChartPoint& z) {
  const int m = static_cast<int>(z.coords.size());
  const double s = 1.0 + z.coords_norm2();
  CMatrix g = CMatrix::Identity(m, m) / s;
  g -= z.coords.conjugate() * z.coords.transpose() / (s * s);
  return g;
}

/// Contraction sum g_mn v_m conj(w_n) of the component form. It equals the
/// complex conjugate of the bracket used by fs_metric: same real part,
/// opposite imaginary part.
inline cplx fs_component_contraction(const TangentVector& v, const TangentVector& w) {
  detail::check_common_base(v, w);
  const CMatrix g = fs_component_matrix(v.base);
  return (v.components.transpose() * g * w.components.conjugate())(0, 0);
}

/// Complex structure: multiplication of the holomorphic components by i.
inline TangentVector apply_J(const TangentVector& v) {
  return TangentVector(v.base, cplx(0.0, 1.0) * v.components);
}

/// Local Kähler function f = log(1 + sum z_i conj(z_i)).
inline double kahler_potential(const ChartPoint& z) { return std::log1p(z.coords_norm2()); }

inline double kahler_potential(const CVector& coords) { return std::log1p(coords.squaredNorm()); }

/// Levi-form matrix H_mn = d^2 f / dz_m dz-bar_n by central differences on the real
/// and imaginary parts (z = x + i y, d/dz = (d/dx - i d/dy)/2).
inline CMatrix potential_levi_form_fd(const ChartPoint& z, double step = 1e-4) {
  const int m = static_cast<int>(z.coords.size());
  const CVector& c = z.coords;
  auto f = [&](int a, cplx da, int b, cplx db) {
    CVector q = c;
    q(a) += da;
    q(b) += db;
    return kahler_potential(q);
  };
  // Mixed partial d^2 f / (d u_a d u_b) with u in {x, y}.
  auto mixed = [&](int a, cplx ea, int b, cplx eb) {
    const double h = step;
    return (f(a, h * ea, b, h * eb) - f(a, h * ea, b, -h * eb) - f(a, -h * ea, b, h * eb) +
            f(a, -h * ea, b, -h * eb)) /
           (4.0 * h * h);
  };
  const cplx one(1.0, 0.0);
  const cplx i(0.0, 1.0);
  CMatrix levi(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      // d/dz_a d/dzbar_b = (1/4)(dx_a - i dy_a)(dx_b + i dy_b)
      const double xx = mixed(a, one, b, one);
      const double yy = mixed(a, i, b, i);
      const double xy = mixed(a, one, b, i);
      const double yx = mixed(a, i, b, one);
      levi(a, b) = 0.25 * cplx(xx + yy, xy - yx);
    }
  }
  return levi;
}

struct PotentialCheck {
  double g_fd = 0.0;
  double omega_fd = 0.0;
  double g = 0.0;
  double omega = 0.0;
  double residual = 0.0;
};

/// Compares omega = i (2 nu) d dbar f with the metric and fundamental form from the
/// Levi form of the potential: g = 2 nu Re sum H_mn v_m conj(w_n), omega = -2 nu Im(...).
inline PotentialCheck potential_hessian_check(const TangentVector& v, const TangentVector& w,
                                              double nu = kDefaultHbar, double step = 1e-4) {
  detail::check_common_base(v, w);
  const CMatrix levi = potential_levi_form_fd(v.base, step);
  const cplx c = (v.components.transpose() * levi * w.components.conjugate())(0, 0);
  PotentialCheck out;
  out.g_fd = 2.0 * nu * c.real();
  out.omega_fd = -2.0 * nu * c.imag();
  const MetricValue mv = kahler_pairing(v, w, nu);
  out.g = mv.g;
  out.omega = mv.omega;
  out.residual = std::max(std::abs(out.g_fd - out.g), std::abs(out.omega_fd - out.omega));
  return out;
}

/// Hilbert-space angle arccos |<r1|r2>| between rays; inputs are normalized first.
inline double geodesic_distance(const StateVector& r1, const StateVector& r2) {
  const cplx ov = inner_product(r1.normalized(), r2.normalized());
  const double c = std::clamp(std::abs(ov), 0.0, 1.0);
  return std::acos(c);
}

inline double geodesic_distance(const ChartPoint& p1, const ChartPoint& p2) {
  return geodesic_distance(from_chart(p1), from_chart(p2));
}

/// Squared length of the component of dpsi orthogonal to the normalized psi.
inline double orthogonal_norm2(const StateVector& psi, const CVector& dpsi) {
  const StateVector u = psi.normalized();
  const CVector perp = dpsi - u.amplitudes() * u.amplitudes().dot(dpsi);
  return perp.squaredNorm();
}

struct FsDecomposition {
  double fisher_part = 0.0;          // (1/4) sum dp^2 / p
  double phase_variance_part = 0.0;  // sum p dphi^2 - (sum p dphi)^2
  double total() const { return fisher_part + phase_variance_part; }
};

inline FsDecomposition fs_decomposition(const RVector& p, const RVector& dp, const RVector& dphi) {
  require(p.size() == dp.size() && p.size() == dphi.size(), ErrorKind::DimensionMismatch,
          "p, dp and dphi must have equal length");
  require((p.array() > 0.0).all(), ErrorKind::NonPositiveProbability,
          "every probability must be positive");
  require(std::abs(p.sum() - 1.0) <= 1e-12, ErrorKind::InvalidArgument,
          "probabilities must sum to 1");
  require(std::abs(dp.sum()) <= 1e-12, ErrorKind::UnbalancedPerturbation,
          "perturbation must sum to 0");
  FsDecomposition d;
  d.fisher_part = 0.25 * (dp.array().square() / p.array()).sum();
  const double mean = (p.array() * dphi.array()).sum();
  // Centered form keeps the variance nonnegative under rounding.
  d.phase_variance_part = (p.array() * (dphi.array() - mean).square()).sum();
  return d;
}

/// psi = sum sqrt(p_j) e^{i phi_j} |j>.
inline StateVector amplitude_state(const RVector& p, const RVector& phase) {
  CVector v(p.size());
  for (Eigen::Index j = 0; j < p.size(); ++j) v(j) = std::polar(std::sqrt(p(j)), phase(j));
  return StateVector(std::move(v));
}

/// Real-linear vector field on a chart, acting on holomorphic coordinates.
using ChartVectorField = std::function<CVector(const CVector&)>;

namespace detail {

// Lie bracket [X, Y](z) = DY(z) X(z) - DX(z) Y(z) with real directional derivatives.
inline CVector lie_bracket_fd(const ChartVectorField& X, const ChartVectorField& Y,
                              const CVector& z, double step) {
  auto directional = [&](const ChartVectorField& F, const CVector& dir) {
    return CVector((F(z + step * dir) - F(z - step * dir)) / (2.0 * step));
  };
  return directional(Y, X(z)) - directional(X, Y(z));
}

}  // namespace detail

/// Max-norm of N(X,Y) = [JX,JY] - [X,Y] - J[X,JY] - J[JX,Y] with J the chart
/// complex structure and brackets taken by central differences.
inline double nijenhuis_residual(const ChartVectorField& X, const ChartVectorField& Y,
                                 const CVector& z, double step = 1e-5) {
  const cplx i(0.0, 1.0);
  ChartVectorField JX = [&](const CVector& q) { return CVector(i * X(q)); };
  ChartVectorField JY = [&](const CVector& q) { return CVector(i * Y(q)); };
  const CVector n = detail::lie_bracket_fd(JX, JY, z, step) - detail::lie_bracket_fd(X, Y, z, step) -
                    i * detail::lie_bracket_fd(X, JY, z, step) -
                    i * detail::lie_bracket_fd(JX, Y, z, step);
  return n.size() == 0 ? 0.0 : n.cwiseAbs().maxCoeff();
}

/// Constant-coefficient extensions of v and w.
inline double nijenhuis_residual(const TangentVector& v, const TangentVector& w, double step = 1e-5) {
  detail::check_common_base(v, w);
  const CVector a = v.components;
  const CVector b = w.components;
  return nijenhuis_residual([a](const CVector&) { return a; }, [b](const CVector&) { return b; },
                            v.base.coords, step);
}

}  // namespace qgeo
