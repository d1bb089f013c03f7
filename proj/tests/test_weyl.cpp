// Weyl connection, curvature, and the quantum potential as curvature.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qgeo/experiments.hpp"
#include "qgeo/suites.hpp"
#include "qgeo/weyl.hpp"

using namespace qgeo;
using namespace qgeo::experiments;
using qgeo::suites::detail::random_manifold;
using qgeo::suites::detail::sampled_covector;
using qgeo::suites::detail::sampled_metric;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvalidArgument;
}

double max_diff(const TensorField& a, const TensorField& b, const std::vector<char>& keep) {
  double d = 0.0;
  for (std::size_t f = 0; f < a.component_count(); ++f) d = std::max(d, max_abs_diff(a.component(f), b.component(f), keep));
  return d;
}

}  // namespace

// --- oracles ---------------------------------------------------------------

TEST(WeylOracle, GammaValues) {
  EXPECT_DOUBLE_EQ(weyl_gamma(3), 1.0 / 12.0);
  EXPECT_DOUBLE_EQ(weyl_gamma(4), 1.0 / 9.0);
}

TEST(WeylOracle, SphereHasScalarTwoOverRadiusSquared) {
  const double a = 2.0;
  const int N = 41;
  const Grid g({N, N}, {0.4 / (N - 1), 0.4 / (N - 1)}, {1.0, 0.0}, Boundary::Decay);
  const WeylManifold M(sampled_metric(g, [&](const auto& x) {
                         RMatrix v = RMatrix::Zero(2, 2);
                         v(0, 0) = a * a;
                         v(1, 1) = a * a * std::sin(x[0]) * std::sin(x[0]);
                         return v;
                       }),
                       TensorField(g, {Variance::Lower}));
  const CurvatureBundle b = curvature(M);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (b.keep[i]) {
      EXPECT_NEAR(b.standard_riemannian_scalar[i], 2.0 / (a * a), 1e-5);
    }
  }
  // With phi = 0 the Weyl chain is the Riemannian one.
  EXPECT_EQ(max_abs_diff(b.scalar, b.riemannian_scalar, b.keep), 0.0);
}

TEST(WeylOracle, PolarCoordinatesAreFlat) {
  const int N = 61;
  const Grid g({N, N}, {1.0 / (N - 1), 1.0 / (N - 1)}, {1.0, 0.0}, Boundary::Decay);
  const WeylManifold M(sampled_metric(g, [](const auto& x) {
                         RMatrix v = RMatrix::Zero(2, 2);
                         v(0, 0) = 1.0;
                         v(1, 1) = x[0] * x[0];
                         return v;
                       }),
                       TensorField(g, {Variance::Lower}));
  EXPECT_LT(max_abs(curvature(M).scalar, curvature(M).keep), 1e-6);
}

TEST(WeylOracle, ConstantGaugeOnFlatSpace) {
  // R = (n-1)(n-2) |phi|^2 for constant phi on flat R^n.
  const Grid g = Grid::centered(3, 12, 1.0, Boundary::Decay);
  const double p[3] = {0.3, -0.2, 0.5};
  const TensorField phi = sampled_covector(g, [&](int k, const auto&) { return p[k]; });
  const CurvatureBundle b = curvature(WeylManifold::flat(g, RMatrix::Identity(3, 3), phi));
  const double expect = 2.0 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  for (double v : b.scalar.values()) EXPECT_NEAR(v, expect, 1e-12 * expect);
}

TEST(WeylOracle, GaussianDensityGauge) {
  // For a unit Gaussian in three dimensions the gauge is phi = x.
  const Grid g = Grid::centered(3, 33, 7.0, Boundary::Decay);
  const ScalarField rho = gaussian_density(g, 1.0);
  const TensorField phi = gauge_from_density(rho, 3);
  std::vector<char> inner = threshold_mask(rho, 1e-8);
  erode_edges(g, inner, 2);
  for (int a = 0; a < 3; ++a) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (inner[i]) {
        EXPECT_NEAR(phi({a})[i], g.position(i)[a], 1e-8);
      }
    }
  }
  const QCurvatureIdentity q = q_curvature_identity(rho, 1.0, 1.0, false);
  EXPECT_LT(q.max_relative_gap, 1e-6);
  EXPECT_DOUBLE_EQ(q.gamma, 1.0 / 12.0);
}

TEST(WeylOracle, TensorChainDisagreesWithClosedFormByFourThirds) {
  const Grid g = Grid::centered(3, 33, 7.0, Boundary::Decay);
  const QCurvatureIdentity q = q_curvature_identity(gaussian_density(g, 1.0), 1.0, 1.0, true);
  EXPECT_NEAR(q.tensor_chain_ratio, 4.0 / 3.0, 1e-2);
}

TEST(WeylOracle, FisherCurvatureConstantHasTheOppositeSign) {
  const Grid g = Grid::centered(3, 49, 7.0, Boundary::Decay);
  const FisherCurvatureReport fc = fisher_curvature_report(DensityGrid(gaussian_density(g, 1.0)), 1.0, 1.0);
  EXPECT_NEAR(fc.implied_constant, 8.0 / 12.0, 1e-15);
  EXPECT_NEAR(fc.fitted_constant, -fc.implied_constant, 1e-3);
  EXPECT_NEAR(fc.int_rho_Q, 3.0 / 8.0, 1e-4);
}

TEST(WeylErrors, Rejections) {
  const Grid g2 = Grid::centered(2, 9, 1.0, Boundary::Decay);
  const Grid g3 = Grid::centered(3, 9, 3.0, Boundary::Decay);
  std::mt19937_64 rng(5);
  EXPECT_EQ(kind_of([] { weyl_gamma(2); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { gauge_from_density(gaussian_density(g2, 1.0), 2); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { gauge_from_density(gaussian_density(g3, 1.0), 4); }), ErrorKind::DimensionMismatch);
  const WeylManifold curved = random_manifold(rng, 9);
  EXPECT_EQ(kind_of([&] { weyl_scalar_from_density(gaussian_density(curved.grid(), 1.0), curved, 0.1); }),
            ErrorKind::NotFlat);
  const Grid p3 = Grid::centered(3, 8, 3.0, Boundary::Periodic);
  EXPECT_EQ(kind_of([&] { q_curvature_identity(gaussian_density(p3, 1.0), 1.0, 1.0, false); }),
            ErrorKind::BoundaryPolicy);
  EXPECT_EQ(kind_of([&] {
              covariant_derivative(TensorField(Grid::centered(2, 11, 1.0, Boundary::Decay), {Variance::Lower}),
                                   weyl_connection(curved));
            }),
            ErrorKind::DimensionMismatch);
}

// --- properties ------------------------------------------------------------

TEST(WeylProperty, CurvatureIdentitiesOnRandomPatches) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 4; ++t) {
    const WeylManifold M = random_manifold(rng, 41);
    const Grid& g = M.grid();
    const TensorField G = weyl_connection(M);
    for (int i = 0; i < 2; ++i) {
      for (std::size_t node = 0; node < g.size(); ++node) EXPECT_EQ(G({i, 0, 1})[node], G({i, 1, 0})[node]);
    }
    const CurvatureBundle b = curvature(M);
    const CurvatureSymmetry cs = curvature_symmetry(b);
    EXPECT_LT(cs.antisymmetry, 1e-12);
    EXPECT_LT(cs.bianchi, 1e-6);
    EXPECT_LT(scalar_decomposition_check(M).max_residual, 1e-5);
  }
}

TEST(WeylProperty, ConnectionIsGaugeInvariant) {
  // g -> exp(2 l) g together with phi -> phi + dl leaves the connection fixed
  // and rescales the scalar by exp(-2 l).
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int t = 0; t < 3; ++t) {
    const WeylManifold M = random_manifold(rng, 41);
    const Grid& g = M.grid();
    const double a = u(rng), b = u(rng);
    auto lam = [&](const auto& x) { return a * std::sin(x[0]) + b * x[0] * x[1]; };
    TensorField metric = M.metric();
    for (std::size_t f = 0; f < metric.component_count(); ++f) {
      for (std::size_t i = 0; i < g.size(); ++i) metric.component(f)[i] *= std::exp(2.0 * lam(g.position(i)));
    }
    TensorField phi = M.gauge();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto x = g.position(i);
      phi({0})[i] += a * std::cos(x[0]) + b * x[1];
      phi({1})[i] += b * x[0];
    }
    const WeylManifold Mt(std::move(metric), std::move(phi));
    std::vector<char> inner(g.size(), 1);
    erode_edges(g, inner, 4);
    EXPECT_LT(max_diff(weyl_connection(M), weyl_connection(Mt), inner), 1e-6);
    const CurvatureBundle c0 = curvature(M), c1 = curvature(Mt);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (c0.keep[i]) err = std::max(err, std::abs(c1.scalar[i] * std::exp(2.0 * lam(g.position(i))) - c0.scalar[i]));
    }
    EXPECT_LT(err, 1e-5);
  }
}

TEST(WeylProperty, QuantumPotentialMatchesCurvatureOnMixtures) {
  std::mt19937_64 rng(43);
  const Grid g = Grid::centered(3, 41, 9.0, Boundary::Decay);
  for (int t = 0; t < 3; ++t) {
    const ScalarField rho = random_mixture(g, rng, 6.0);
    for (auto [hbar, mass] : {std::pair{1.0, 1.0}, std::pair{0.5, 3.0}}) {
      EXPECT_LT(q_curvature_identity(rho, hbar, mass, false).max_relative_gap, 1e-6);
    }
  }
  const Grid g4 = Grid::centered(4, 17, 6.5, Boundary::Decay);
  EXPECT_LT(q_curvature_identity(gaussian_density(g4, 1.0), 1.0, 1.0, false).max_relative_gap, 1e-6);
}

TEST(WeylProperty, QuantumPotentialConvergesAtFourthOrder) {
  const double e1 = gaussian_q_error(Grid::centered(3, 49, 7.0, Boundary::Decay), 1.0, 4.0);
  const double e2 = gaussian_q_error(Grid::centered(3, 97, 7.0, Boundary::Decay), 1.0, 4.0);
  EXPECT_GT(observed_order(e1, e2), 3.7);
}
