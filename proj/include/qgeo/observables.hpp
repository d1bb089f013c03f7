#pragma once

// Observables as Kähler functions <A> on projective space: mean values,
// dispersions, Hamiltonian and gradient fields, the Poisson/Riemann/Kähler
// brackets, the circ and star products, flows and the uncertainty relation.

#include <cmath>
#include <map>
#include <random>
#include <string>

#include "qgeo/kahler.hpp"

namespace qgeo {

namespace detail {

inline void check_operator_state(const HermitianOperator& a, const CVector& x) {
  require(a.dim() == x.size(), ErrorKind::DimensionMismatch, "operator and state dimensions differ");
  require(x.squaredNorm() > 0.0, ErrorKind::ZeroVector, "state must be nonzero");
}

// <x|M|x>/<x|x> for an arbitrary matrix.
inline cplx expectation(const CMatrix& m, const CVector& x) {
  return x.dot(m * x) / x.squaredNorm();
}

}  // namespace detail

/// <A>_[x] = (x|Ax)/|x|^2.
inline double mean_value(const HermitianOperator& a, const StateVector& x) {
  detail::check_operator_state(a, x.amplitudes());
  return detail::expectation(a.matrix(), x.amplitudes()).real();
}

/// Chart form (z+h|A(z+h))/(1+|z|^2) with h the chart basis vector.
inline double mean_value(const HermitianOperator& a, const ChartPoint& z) {
  const CVector x = lift(z);
  require(a.dim() == x.size(), ErrorKind::DimensionMismatch, "operator and chart dimensions differ");
  return x.dot(a.apply(x)).real() / (1.0 + z.coords_norm2());
}

/// Delta^2 A = <(A - <A>)^2>.
inline double dispersion2(const HermitianOperator& a, const StateVector& x) {
  detail::check_operator_state(a, x.amplitudes());
  const double mean = mean_value(a, x);
  const CMatrix shifted = a.matrix() - mean * CMatrix::Identity(a.dim(), a.dim());
  const CVector y = shifted * x.amplitudes();
  return y.squaredNorm() / x.amplitudes().squaredNorm();
}

inline double dispersion(const HermitianOperator& a, const StateVector& x) {
  return std::sqrt(std::max(dispersion2(a, x), 0.0));
}

/// Directional derivative of <A> at the ray of x along eta in C^N.
inline double differential_mean(const HermitianOperator& a, const StateVector& x, const CVector& eta) {
  detail::check_operator_state(a, x.amplitudes());
  require(eta.size() == x.dim(), ErrorKind::DimensionMismatch, "tangent dimension differs");
  const CVector& v = x.amplitudes();
  const double n2 = v.squaredNorm();
  const double mean = v.dot(a.apply(v)).real() / n2;
  // d/dt (x+t eta|A(x+t eta))/|x+t eta|^2 at t = 0
  return 2.0 * (eta.dot(a.apply(v)).real() - mean * eta.dot(v).real()) / n2;
}

/// Chart form: 2 Re( [A(z+h) - <A> z]/(1+|z|^2) | v ), restricted to the chart model.
inline double differential_mean(const HermitianOperator& a, const TangentVector& v) {
  const CVector x = lift(v.base);
  require(a.dim() == x.size(), ErrorKind::DimensionMismatch, "operator and chart dimensions differ");
  const double s = 1.0 + v.base.coords_norm2();
  const double mean = x.dot(a.apply(x)).real() / s;
  const CVector ax = drop_slot(v.base.chart_index, a.apply(x));
  const CVector covector = (ax - mean * v.base.coords) / s;
  return 2.0 * covector.dot(v.components).real();
}

/// X = I d<A> in chart coordinates: (1/nu)(i (h|A(z+h)) (z+h) - i A(z+h)).
inline TangentVector hamiltonian_field(const HermitianOperator& a, const ChartPoint& p,
                                       double nu = kDefaultHbar) {
  const CVector x = lift(p);
  const CVector ax = a.apply(x);
  const cplx hax = ax(p.chart_index - 1);
  const cplx i(0.0, 1.0);
  const CVector full = (i * hax * x - i * ax) / nu;
  return TangentVector(p, drop_slot(p.chart_index, full));
}

/// Y = G d<A> in chart coordinates: (1/nu)(-(h|A(z+h)) (z+h) + A(z+h)).
inline TangentVector gradient_field(const HermitianOperator& a, const ChartPoint& p,
                                    double nu = kDefaultHbar) {
  const CVector x = lift(p);
  const CVector ax = a.apply(x);
  const cplx hax = ax(p.chart_index - 1);
  const CVector full = (-hax * x + ax) / nu;
  return TangentVector(p, drop_slot(p.chart_index, full));
}

/// Operator side of {<A>,<B>}: <(1/(i nu))[A,B]>.
inline double poisson_bracket(const HermitianOperator& a, const HermitianOperator& b,
                              const StateVector& x, double nu = kDefaultHbar) {
  detail::check_operator_state(a, x.amplitudes());
  const CMatrix comm = a.matrix() * b.matrix() - b.matrix() * a.matrix();
  return (detail::expectation(comm, x.amplitudes()) / cplx(0.0, nu)).real();
}

/// Operator side of ((<A>,<B>)): (1/nu)<AB+BA> - (2/nu)<A><B>.
inline double riemann_bracket(const HermitianOperator& a, const HermitianOperator& b,
                              const StateVector& x, double nu = kDefaultHbar) {
  detail::check_operator_state(a, x.amplitudes());
  const CMatrix anti = a.matrix() * b.matrix() + b.matrix() * a.matrix();
  return detail::expectation(anti, x.amplitudes()).real() / nu -
         2.0 / nu * mean_value(a, x) * mean_value(b, x);
}

/// The self-adjoint operator (1/(i nu))[A,B] whose mean is {<A>,<B>}.
inline HermitianOperator poisson_operator(const HermitianOperator& a, const HermitianOperator& b,
                                          double nu = kDefaultHbar) {
  const CMatrix comm = a.matrix() * b.matrix() - b.matrix() * a.matrix();
  return HermitianOperator(CMatrix(comm / cplx(0.0, nu)));
}

/// Cyclic sum {A,{B,C}} + {B,{C,A}} + {C,{A,B}} with every bracket evaluated on
/// the geometric side.
inline double jacobi_residual(const HermitianOperator& a, const HermitianOperator& b,
                              const HermitianOperator& c, const StateVector& x, double nu = kDefaultHbar);

/// Geometric side omega(X_A, X_B) at a chart point.
inline double poisson_bracket_geometric(const HermitianOperator& a, const HermitianOperator& b,
                                        const ChartPoint& p, double nu = kDefaultHbar) {
  return symplectic_form(hamiltonian_field(a, p, nu), hamiltonian_field(b, p, nu), nu);
}

/// Geometric side g(Y_A, Y_B) at a chart point.
inline double riemann_bracket_geometric(const HermitianOperator& a, const HermitianOperator& b,
                                        const ChartPoint& p, double nu = kDefaultHbar) {
  return fs_metric(gradient_field(a, p, nu), gradient_field(b, p, nu), nu);
}

inline double jacobi_residual(const HermitianOperator& a, const HermitianOperator& b,
                              const HermitianOperator& c, const StateVector& x, double nu) {
  const ChartPoint p = to_chart(x);
  return std::abs(poisson_bracket_geometric(a, poisson_operator(b, c, nu), p, nu) +
                  poisson_bracket_geometric(b, poisson_operator(c, a, nu), p, nu) +
                  poisson_bracket_geometric(c, poisson_operator(a, b, nu), p, nu));
}

/// <f,h> = ((f,h)) + i {f,h}.
inline cplx kahler_bracket(const HermitianOperator& a, const HermitianOperator& b,
                           const StateVector& x, double nu = kDefaultHbar) {
  return {riemann_bracket(a, b, x, nu), poisson_bracket(a, b, x, nu)};
}

/// f o_nu h = (nu/2) ((f,h)) + f h.
inline double circ_product(const HermitianOperator& a, const HermitianOperator& b,
                           const StateVector& x, double nu = kDefaultHbar) {
  return 0.5 * nu * riemann_bracket(a, b, x, nu) + mean_value(a, x) * mean_value(b, x);
}

/// f *_nu h = (nu/2) <f,h> + f h.
inline cplx star_product(const HermitianOperator& a, const HermitianOperator& b,
                         const StateVector& x, double nu = kDefaultHbar) {
  return 0.5 * nu * kahler_bracket(a, b, x, nu) + mean_value(a, x) * mean_value(b, x);
}

/// Operator expectation <AB>, the value the star product must reproduce.
inline cplx operator_product_mean(const HermitianOperator& a, const HermitianOperator& b,
                                  const StateVector& x) {
  detail::check_operator_state(a, x.amplitudes());
  return detail::expectation(a.matrix() * b.matrix(), x.amplitudes());
}

struct BracketReport {
  double poisson = 0.0;
  double riemann = 0.0;
  cplx kahler;
  std::map<std::string, double> residuals;
};

/// Evaluates both sides of every bracket identity at x (read in its auto chart).
inline BracketReport bracket_report(const HermitianOperator& a, const HermitianOperator& b,
                                    const StateVector& x, double nu = kDefaultHbar) {
  BracketReport r;
  r.poisson = poisson_bracket(a, b, x, nu);
  r.riemann = riemann_bracket(a, b, x, nu);
  r.kahler = kahler_bracket(a, b, x, nu);
  const ChartPoint p = to_chart(x);
  const double mean_a = mean_value(a, x);
  const double mean_b = mean_value(b, x);
  const cplx ab = operator_product_mean(a, b, x);
  const cplx ba = operator_product_mean(b, a, x);
  const cplx star_ab = star_product(a, b, x, nu);
  const cplx star_ba = star_product(b, a, x, nu);

  r.residuals["poisson_geometric"] = std::abs(r.poisson - poisson_bracket_geometric(a, b, p, nu));
  r.residuals["riemann_geometric"] = std::abs(r.riemann - riemann_bracket_geometric(a, b, p, nu));
  r.residuals["kahler_covariance"] =
      std::abs(r.kahler - (2.0 / nu) * (ab - mean_a * mean_b));
  r.residuals["circ_jordan"] = std::abs(circ_product(a, b, x, nu) - 0.5 * (ab + ba).real());
  r.residuals["star_operator_product"] = std::abs(star_ab - ab);
  r.residuals["star_circ_poisson"] =
      std::abs(star_ab - (circ_product(a, b, x, nu) + cplx(0.0, 0.5 * nu) * r.poisson));
  r.residuals["circ_symmetrized_star"] =
      std::abs(circ_product(a, b, x, nu) - 0.5 * (star_ab + star_ba).real());
  r.residuals["poisson_star_commutator"] =
      std::abs(cplx(r.poisson) - (star_ab - star_ba) / cplx(0.0, nu));
  r.residuals["kahler_real_imag"] =
      std::abs(r.kahler - cplx(r.riemann, r.poisson));
  return r;
}

struct UncertaintyReport {
  double lhs = 0.0;                  // Delta^2 A Delta^2 B
  double commutator_term = 0.0;      // ((hbar/2) {A,B})^2
  double covariance = 0.0;           // {A,B}_+ - <A><B>
  double jordan_bracket = 0.0;       // {A,B}_+ = <(1/2)[A,B]_+>
  double covariance_geometric = 0.0; // (hbar/2) ((A,B))
  double rhs = 0.0;
  double slack() const { return lhs - rhs; }
};

inline UncertaintyReport uncertainty_check(const HermitianOperator& a, const HermitianOperator& b,
                                           const StateVector& x, double hbar = kDefaultHbar) {
  require(x.is_normalized(1e-10), ErrorKind::NotNormalized, "uncertainty_check needs a unit state");
  UncertaintyReport r;
  r.lhs = dispersion2(a, x) * dispersion2(b, x);
  const double pb = poisson_bracket(a, b, x, hbar);
  r.commutator_term = std::pow(0.5 * hbar * pb, 2);
  const CMatrix anti = a.matrix() * b.matrix() + b.matrix() * a.matrix();
  r.jordan_bracket = 0.5 * detail::expectation(anti, x.amplitudes()).real();
  r.covariance = r.jordan_bracket - mean_value(a, x) * mean_value(b, x);
  r.covariance_geometric = 0.5 * hbar * riemann_bracket(a, b, x, hbar);
  r.rhs = r.commutator_term + r.covariance * r.covariance;
  return r;
}

/// exp(-i (t/nu) A), by dense eigendecomposition.
inline CMatrix flow_operator(const HermitianOperator& a, double t, double nu = kDefaultHbar) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix());
  require(es.info() == Eigen::Success, ErrorKind::NumericalFailure, "eigendecomposition failed");
  const RVector& lambda = es.eigenvalues();
  CVector phases(lambda.size());
  for (Eigen::Index j = 0; j < lambda.size(); ++j) phases(j) = std::polar(1.0, -t * lambda(j) / nu);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

inline StateVector flow(const HermitianOperator& a, double t, const StateVector& x,
                        double nu = kDefaultHbar) {
  require(a.dim() == x.dim(), ErrorKind::DimensionMismatch, "operator and state dimensions differ");
  return StateVector(flow_operator(a, t, nu) * x.amplitudes());
}

/// Pushforward of v by the induced map [x] -> [U x], expressed in the chart of
/// largest modulus at the image point.
inline TangentVector pushforward(const CMatrix& u, const TangentVector& v) {
  const CVector x = lift(v.base);
  const CVector dx = lift_tangent(v.base.chart_index, v.components);
  const CVector y = u * x;
  const CVector dy = u * dx;
  const ChartPoint q = to_chart(y);
  const int k = q.chart_index - 1;
  // d(y / y_k) = dy / y_k - y dy_k / y_k^2
  const CVector dz = dy / y(k) - y * (dy(k) / (y(k) * y(k)));
  return TangentVector(q, drop_slot(q.chart_index, dz));
}

/// ||f||_nu = sqrt(sup over rays of (conj(f) *_nu f)) with f = <A>. The supremum is
/// located by projected power iteration on A^dagger A from `restarts` random
/// starts, scoring each iterate with the star-product objective.
inline double kahler_norm(const HermitianOperator& a, double nu = kDefaultHbar,
                          std::uint64_t seed = 12345, int max_iter = 2000, int restarts = 64) {
  require(restarts >= 1, ErrorKind::InvalidArgument, "kahler_norm needs at least one start");
  std::mt19937_64 rng(seed);
  const CMatrix ata = a.matrix().adjoint() * a.matrix();
  double best = 0.0;
  for (int r = 0; r < restarts; ++r) {
    StateVector x = random_state(a.dim(), rng);
    double value = star_product(a, a, x, nu).real();
    best = std::max(best, value);
    for (int it = 0; it < max_iter; ++it) {
      const CVector y = ata * x.amplitudes();
      const double n = y.norm();
      if (n == 0.0) break;
      x = StateVector(y / n);
      const double next = star_product(a, a, x, nu).real();
      best = std::max(best, next);
      const bool converged = std::abs(next - value) <= 1e-15 * std::max(1.0, std::abs(next));
      value = next;
      if (converged) break;
    }
  }
  return std::sqrt(std::max(best, 0.0));
}

inline double stationarity_residual(const HermitianOperator& a, const StateVector& x) {
  detail::check_operator_state(a, x.amplitudes());
  const CVector& v = x.amplitudes();
  return (a.apply(v) - mean_value(a, x) * v).norm() / v.norm();
}

/// x spans an eigenline of A, i.e. [x] is a critical point of <A>.
inline bool is_stationary(const HermitianOperator& a, const StateVector& x, double tol) {
  require(x.is_normalized(1e-10), ErrorKind::NotNormalized, "is_stationary needs a unit state");
  return stationarity_residual(a, x) < tol;
}

/// Largest |d<A>(e)| over the real basis tangents e_j, i e_j of the auto chart.
inline double differential_norm(const HermitianOperator& a, const StateVector& x) {
  const ChartPoint p = to_chart(x);
  const int m = static_cast<int>(p.coords.size());
  double worst = 0.0;
  for (int j = 0; j < m; ++j) {
    for (cplx unit : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) {
      CVector e = CVector::Zero(m);
      e(j) = unit;
      worst = std::max(worst, std::abs(differential_mean(a, TangentVector(p, e))));
    }
  }
  return worst;
}

}  // namespace qgeo
