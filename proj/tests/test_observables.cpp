// Observables as functions on rays: brackets, products, flows, uncertainty.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qgeo/observables.hpp"

using namespace qgeo;

namespace {

const cplx I1(0.0, 1.0);

HermitianOperator pauli(char which) {
  CMatrix m = CMatrix::Zero(2, 2);
  switch (which) {
    case 'x': m(0, 1) = m(1, 0) = 1.0; break;
    case 'y': m(0, 1) = -I1; m(1, 0) = I1; break;
    default: m(0, 0) = 1.0; m(1, 1) = -1.0;
  }
  return HermitianOperator(m);
}

StateVector plus_state() {
  CVector v(2);
  v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return StateVector(v);
}

}  // namespace

TEST(ObservableOracle, PauliMeansAndDispersions) {
  const StateVector up = StateVector::basis(2, 1);
  EXPECT_DOUBLE_EQ(mean_value(pauli('z'), up), 1.0);
  EXPECT_NEAR(dispersion2(pauli('z'), up), 0.0, 1e-15);
  EXPECT_NEAR(dispersion2(pauli('x'), up), 1.0, 1e-15);
  EXPECT_NEAR(mean_value(pauli('x'), plus_state()), 1.0, 1e-15);
  // Mean value ignores the scale and phase of the representative.
  EXPECT_NEAR(mean_value(pauli('x'), plus_state().scaled(3.0 * I1)), 1.0, 1e-15);
}

TEST(ObservableOracle, PoissonBracketOfPaulis) {
  // (1/i nu)[sx, sy] = (2/nu) sz.
  const StateVector up = StateVector::basis(2, 1);
  EXPECT_NEAR(poisson_bracket(pauli('x'), pauli('y'), up, 1.0), 2.0, 1e-14);
  EXPECT_NEAR(poisson_bracket(pauli('x'), pauli('y'), up, 0.5), 4.0, 1e-14);
  EXPECT_NEAR(poisson_bracket_geometric(pauli('x'), pauli('y'), to_chart(up), 1.0), 2.0, 1e-12);
}

TEST(ObservableOracle, UncertaintyIsTightForSxSyOnUp) {
  const UncertaintyReport r = uncertainty_check(pauli('x'), pauli('y'), StateVector::basis(2, 1), 1.0);
  EXPECT_NEAR(r.lhs, 1.0, 1e-14);
  EXPECT_NEAR(r.rhs, 1.0, 1e-14);
  EXPECT_NEAR(r.covariance, 0.0, 1e-14);
}

TEST(ObservableOracle, FlowRotatesSx) {
  for (double t : {0.0, 0.3, 1.1, -2.0}) {
    const StateVector x = flow(pauli('z'), t, plus_state(), 1.0);
    EXPECT_NEAR(mean_value(pauli('x'), x), std::cos(2.0 * t), 1e-14);
  }
}

TEST(ObservableOracle, KahlerNormIsLargestSingularValue) {
  RVector ev(2);
  ev << 3.0, -5.0;
  EXPECT_NEAR(kahler_norm(HermitianOperator::diagonal(ev)), 5.0, 1e-12);
  EXPECT_NEAR(kahler_norm(pauli('y')), 1.0, 1e-12);
}

TEST(ObservableOracle, EigenvectorsAreStationary) {
  EXPECT_TRUE(is_stationary(pauli('z'), StateVector::basis(2, 2), 1e-12));
  EXPECT_FALSE(is_stationary(pauli('z'), plus_state(), 1e-3));
  EXPECT_LT(differential_norm(pauli('z'), StateVector::basis(2, 1)), 1e-14);
  EXPECT_GT(differential_norm(pauli('z'), plus_state()), 0.1);
}

TEST(ObservableErrors, Rejections) {
  EXPECT_THROW(mean_value(pauli('x'), StateVector::basis(3, 1)), Error);
  EXPECT_THROW(uncertainty_check(pauli('x'), pauli('y'), StateVector::basis(2, 1).scaled(2.0)), Error);
  EXPECT_THROW(kahler_norm(pauli('x'), 1.0, 1, 10, 0), Error);
}

// --- properties ------------------------------------------------------------

TEST(BracketProperty, IdentitiesHoldOnRandomTriples) {
  std::mt19937_64 rng(11);
  for (int N : {2, 4, 8}) {
    for (int t = 0; t < 100; ++t) {
      const HermitianOperator A = random_hermitian(N, rng), B = random_hermitian(N, rng), C = random_hermitian(N, rng);
      const StateVector x = random_state(N, rng);
      const BracketReport br = bracket_report(A, B, x);
      const double scale = std::max({1.0, std::abs(br.poisson), std::abs(br.riemann)});
      for (const auto& [name, value] : br.residuals) EXPECT_LT(value / scale, 1e-9) << name;
      EXPECT_LT(jacobi_residual(A, B, C, x, 1.0), 1e-8);
      EXPECT_NEAR(riemann_bracket(A, A, x, 1.0), 2.0 * dispersion2(A, x), 1e-10 * scale);
      EXPECT_NEAR(poisson_bracket(A, B, x), -poisson_bracket(B, A, x), 1e-12 * scale);
    }
  }
}

TEST(BracketProperty, FieldsRepresentTheDifferential) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 200; ++t) {
    const HermitianOperator A = random_hermitian(4, rng);
    const ChartPoint p = to_chart(random_state(4, rng));
    const TangentVector eta(p, random_complex_vector(3, rng));
    const double d = differential_mean(A, eta);
    const double scale = std::max(1.0, std::abs(d));
    EXPECT_NEAR(symplectic_form(hamiltonian_field(A, p), eta), d, 1e-10 * scale);
    EXPECT_NEAR(fs_metric(gradient_field(A, p), eta), d, 1e-10 * scale);
  }
}

TEST(BracketProperty, UncertaintyNeverViolated) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 1000; ++t) {
    const HermitianOperator A = random_hermitian(4, rng), B = random_hermitian(4, rng);
    const StateVector x = random_state(4, rng);
    const UncertaintyReport r = uncertainty_check(A, B, x);
    EXPECT_GE(r.slack(), -1e-10);
    EXPECT_NEAR(r.covariance, r.covariance_geometric, 1e-10 * std::max(1.0, std::abs(r.covariance)));
    const UncertaintyReport eq = uncertainty_check(A, A, x);
    EXPECT_NEAR(eq.lhs, eq.rhs, 1e-9 * std::max(1.0, eq.lhs));
  }
}

TEST(BracketProperty, FlowIsAUnitaryIsometry) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> time(-10.0, 10.0);
  for (int t = 0; t < 100; ++t) {
    const HermitianOperator A = random_hermitian(3, rng);
    const double s = time(rng);
    const CMatrix U = flow_operator(A, s);
    EXPECT_LT((U.adjoint() * U - CMatrix::Identity(3, 3)).norm(), 1e-11);
    const ChartPoint p = to_chart(random_state(3, rng));
    const TangentVector v(p, random_complex_vector(2, rng)), w(p, random_complex_vector(2, rng));
    const TangentVector pv = pushforward(U, v), pw = pushforward(U, w);
    const double g = fs_metric(v, w), om = symplectic_form(v, w);
    EXPECT_NEAR(fs_metric(pv, pw), g, 1e-8 * std::max(1.0, std::abs(g)));
    EXPECT_NEAR(symplectic_form(pv, pw), om, 1e-8 * std::max(1.0, std::abs(om)));
  }
}

TEST(BracketProperty, StarProductDecomposes) {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 100; ++t) {
    const HermitianOperator A = random_hermitian(5, rng), B = random_hermitian(5, rng);
    const StateVector x = random_state(5, rng);
    const double nu = 0.7;
    const cplx star = star_product(A, B, x, nu);
    const cplx expect = circ_product(A, B, x, nu) + cplx(0.0, 0.5 * nu) * poisson_bracket(A, B, x, nu);
    EXPECT_LT(std::abs(star - expect), 1e-10 * std::max(1.0, std::abs(star)));
    EXPECT_LT(std::abs(star - operator_product_mean(A, B, x)), 1e-10 * std::max(1.0, std::abs(star)));
  }
}
