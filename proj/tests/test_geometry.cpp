// Hilbert space charts and the Kahler structure of CP^{N-1}.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qgeo/kahler.hpp"
#include "qgeo/observables.hpp"

using namespace qgeo;

namespace {

const cplx I1(0.0, 1.0);

CVector vec(std::initializer_list<cplx> xs) {
  CVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (cplx x : xs) v(i++) = x;
  return v;
}

ChartPoint origin(int dim) { return ChartPoint{1, CVector::Zero(dim - 1)}; }

}  // namespace

// --- oracles ---------------------------------------------------------------

TEST(HilbertOracle, BasisStatesAreOrthonormal) {
  const StateVector e1 = StateVector::basis(3, 1), e2 = StateVector::basis(3, 2);
  EXPECT_EQ(inner_product(e1, e2), cplx(0.0));
  EXPECT_EQ(inner_product(e1, e1), cplx(1.0));
}

TEST(HilbertOracle, InnerProductConjugatesLeftSlot) {
  const StateVector a(vec({I1, 0.0})), b(vec({1.0, 0.0}));
  EXPECT_EQ(inner_product(a, b), -I1);
}

TEST(HilbertOracle, RealPairingSplitsGAndOmega) {
  const StateVector a(vec({1.0, 0.0})), b(vec({I1, 0.0}));
  const RealPairing rp = real_pairing(a, b, 0.5);
  EXPECT_DOUBLE_EQ(rp.g, 0.0);
  EXPECT_DOUBLE_EQ(rp.omega, 1.0);
}

TEST(HilbertOracle, ChartCoordinatesOfKnownRay) {
  const ChartPoint p = to_chart(vec({1.0, I1}), 1);
  ASSERT_EQ(p.coords.size(), 1);
  EXPECT_EQ(p.coords(0), I1);
  const ChartPoint q = to_chart(vec({2.0, 4.0, 1.0}), 2);
  EXPECT_EQ(q.coords(0), cplx(0.5));
  EXPECT_EQ(q.coords(1), cplx(0.25));
}

TEST(HilbertOracle, AutoChartPicksLargestComponent) {
  EXPECT_EQ(to_chart(vec({0.1, 3.0, -1.0})).chart_index, 2);
}

TEST(HilbertOracle, FromChartAtOriginIsBasisState) {
  const StateVector s = from_chart(origin(3));
  EXPECT_EQ(s.amplitudes(), StateVector::basis(3, 1).amplitudes());
}

TEST(HilbertErrors, OutsideChartAndMismatches) {
  try {
    to_chart(vec({0.0, 1.0}), 1);
    FAIL() << "expected OutsideChart";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutsideChart);
  }
  EXPECT_THROW(inner_product(StateVector::basis(2, 1), StateVector::basis(3, 1)), Error);
  EXPECT_THROW(StateVector(CVector::Zero(1)), Error);
  EXPECT_THROW(StateVector(CVector::Zero(2)).normalized(), Error);
  EXPECT_THROW(to_chart(vec({1.0, 1.0}), 3), Error);
}

TEST(HilbertErrors, NonHermitianMatrixRejected) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  EXPECT_THROW(HermitianOperator{m}, Error);
}

TEST(KahlerOracle, MetricAtOriginIsTwiceEuclidean) {
  const ChartPoint o = origin(3);
  const TangentVector v(o, vec({1.0, 0.0}));
  const TangentVector w(o, vec({0.0, 2.0}));
  EXPECT_DOUBLE_EQ(fs_metric(v, v, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(fs_metric(w, w, 0.5), 4.0);
  EXPECT_DOUBLE_EQ(fs_metric(v, w, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(symplectic_form(v, apply_J(v), 1.0), 2.0);
}

TEST(KahlerOracle, MetricShrinksAlongTheRadialDirection) {
  // At z = t in CP^1 the metric is 2 nu / (1 + t^2)^2.
  const double t = 0.7;
  const ChartPoint p{1, vec({t})};
  const TangentVector v(p, vec({1.0}));
  EXPECT_NEAR(fs_metric(v, v, 1.0), 2.0 / std::pow(1.0 + t * t, 2), 1e-15);
}

TEST(KahlerOracle, GeodesicDistances) {
  const StateVector e1 = StateVector::basis(2, 1), e2 = StateVector::basis(2, 2);
  const StateVector plus(vec({1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}));
  EXPECT_NEAR(geodesic_distance(e1, e2), kPi / 2.0, 1e-15);
  EXPECT_NEAR(geodesic_distance(e1, plus), kPi / 4.0, 1e-15);
  EXPECT_NEAR(geodesic_distance(e1, e1.scaled(I1)), 0.0, 1e-7);
}

TEST(KahlerOracle, PotentialValues) {
  EXPECT_DOUBLE_EQ(kahler_potential(origin(3)), 0.0);
  EXPECT_NEAR(kahler_potential(ChartPoint{1, vec({0.6, 0.8 * I1})}), std::log(2.0), 1e-15);
}

TEST(KahlerOracle, FubiniStudyDecompositionSimpleCases) {
  RVector p(2), dp(2), dphi(2);
  p << 0.5, 0.5;
  dp << 0.1, -0.1;
  dphi << 0.3, 0.3;
  FsDecomposition d = fs_decomposition(p, dp, dphi);
  EXPECT_NEAR(d.fisher_part, 0.25 * (0.01 / 0.5 + 0.01 / 0.5), 1e-15);
  EXPECT_NEAR(d.phase_variance_part, 0.0, 1e-15);
  dp.setZero();
  dphi << 1.0, -1.0;
  d = fs_decomposition(p, dp, dphi);
  EXPECT_DOUBLE_EQ(d.fisher_part, 0.0);
  EXPECT_NEAR(d.phase_variance_part, 1.0, 1e-15);
}

TEST(KahlerErrors, RejectsBadInputs) {
  RVector p(2), dp(2), dphi(2);
  p << 0.5, 0.5;
  dp << 0.1, 0.1;
  dphi << 0.0, 0.0;
  EXPECT_THROW(fs_decomposition(p, dp, dphi), Error);  // sum dp != 0
  p << 1.0, 0.0;
  dp << 0.0, 0.0;
  EXPECT_THROW(fs_decomposition(p, dp, dphi), Error);  // p not positive
  const TangentVector v(origin(3), vec({1.0, 0.0}));
  const TangentVector w(ChartPoint{2, vec({0.0, 0.0})}, vec({1.0, 0.0}));
  EXPECT_THROW(fs_metric(v, w), Error);
}

// --- properties ------------------------------------------------------------

class KahlerProperty : public ::testing::TestWithParam<int> {};

TEST_P(KahlerProperty, CompatibilityAndInvariance) {
  const int N = GetParam();
  std::mt19937_64 rng(1000 + N);
  for (int t = 0; t < 200; ++t) {
    const StateVector x = random_state(N, rng);
    const ChartPoint p = to_chart(x);
    const TangentVector v(p, random_complex_vector(N - 1, rng));
    const TangentVector w(p, random_complex_vector(N - 1, rng));
    const double g = fs_metric(v, w), om = symplectic_form(v, w);
    const double scale = std::max({1.0, std::abs(g), std::abs(om)});
    EXPECT_NEAR(g, symplectic_form(v, apply_J(w)), 1e-12 * scale);
    EXPECT_NEAR(om, fs_metric(apply_J(v), w), 1e-12 * scale);
    EXPECT_NEAR(g, fs_metric(w, v), 1e-12 * scale);
    EXPECT_NEAR(om, -symplectic_form(w, v), 1e-12 * scale);
    EXPECT_GT(fs_metric(v, v), 0.0);

    const cplx c = fs_component_contraction(v, w);
    EXPECT_NEAR(2.0 * c.real(), g, 1e-12 * scale);
    EXPECT_NEAR(-2.0 * c.imag(), om, 1e-12 * scale);

    const PotentialCheck pc = potential_hessian_check(v, w, 1.0);
    EXPECT_LT(pc.residual / scale, 1e-6);

    EXPECT_LT(nijenhuis_residual(v, w), 1e-8);

    const StateVector y = random_state(N, rng);
    const int j = 1 + t % N, k = 1 + (t + 1) % N;
    EXPECT_NEAR(geodesic_distance(to_chart(x, j), to_chart(y, j)), geodesic_distance(to_chart(x, k), to_chart(y, k)),
                1e-10);
    const CMatrix U = random_unitary(N, rng);
    EXPECT_NEAR(geodesic_distance(StateVector(U * x.amplitudes()), StateVector(U * y.amplitudes())),
                geodesic_distance(x, y), 1e-12);
  }
}

TEST_P(KahlerProperty, ChartRoundTripAndTransitions) {
  const int N = GetParam();
  std::mt19937_64 rng(2000 + N);
  for (int t = 0; t < 100; ++t) {
    const StateVector x = random_state(N, rng);
    const int k = 1 + t % N;
    const ChartPoint p = to_chart(x, k);
    EXPECT_LT((to_chart(from_chart(p), k).coords - p.coords).cwiseAbs().maxCoeff(), 1e-12);
    const int j = 1 + (t + 1) % N;
    const ChartPoint q = chart_transition(chart_transition(p, j), k);
    EXPECT_LT((q.coords - p.coords).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + p.coords.norm()));
    EXPECT_LT(transition_cr_residual(p, j), 1e-6);
    EXPECT_NEAR(std::abs(inner_product(from_chart(p), from_chart(to_chart(x, j)))), 1.0, 1e-10);
  }
}

TEST_P(KahlerProperty, RayPhaseInvariance) {
  const int N = GetParam();
  std::mt19937_64 rng(3000 + N);
  for (int t = 0; t < 50; ++t) {
    const StateVector x = random_state(N, rng);
    const StateVector xr = x.scaled(std::polar(2.5, 0.1 * t));
    const HermitianOperator A = random_hermitian(N, rng);
    EXPECT_NEAR(mean_value(A, x), mean_value(A, xr), 1e-10);
    EXPECT_LT((to_chart(x).coords - to_chart(xr).coords).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST_P(KahlerProperty, FisherPlusPhaseVarianceIsOrthogonalNorm) {
  const int N = GetParam();
  std::mt19937_64 rng(4000 + N);
  std::exponential_distribution<double> expo(1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    RVector p(N), dp(N), dphi(N), phi(N);
    for (int j = 0; j < N; ++j) {
      p(j) = expo(rng) + 0.01;
      dphi(j) = normal(rng);
      phi(j) = normal(rng);
      dp(j) = normal(rng);
    }
    p /= p.sum();
    dp = p.cwiseProduct(dp);
    dp -= p * dp.sum();
    dp(N - 1) = -dp.head(N - 1).sum();
    const FsDecomposition d = fs_decomposition(p, dp, dphi);
    EXPECT_GE(d.phase_variance_part, 0.0);
    CVector dpsi(N);
    for (int j = 0; j < N; ++j) {
      dpsi(j) = std::polar(1.0, phi(j)) * cplx(dp(j) / (2.0 * std::sqrt(p(j))), std::sqrt(p(j)) * dphi(j));
    }
    EXPECT_NEAR(orthogonal_norm2(amplitude_state(p, phi), dpsi), d.total(), 1e-12 * (1.0 + d.total()));
  }
}

INSTANTIATE_TEST_SUITE_P(Dimensions, KahlerProperty, ::testing::Values(2, 3, 4, 8));
