// Fisher information: discrete metric, grid functional, exact uncertainty.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qgeo/experiments.hpp"
#include "qgeo/fisher.hpp"
#include "qgeo/madelung.hpp"

using namespace qgeo;

namespace {

RVector rv(std::initializer_list<double> xs) {
  RVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvalidArgument;
}

RVector random_simplex(int K, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  RVector p(K);
  for (int j = 0; j < K; ++j) p(j) = expo(rng) + 1e-3;
  return p / p.sum();
}

}  // namespace

// --- oracles ---------------------------------------------------------------

TEST(FisherOracle, DiscreteMetricOfFairCoin) {
  const ProbabilityVector p(rv({0.5, 0.5}));
  EXPECT_NEAR(fisher_metric_discrete(p, rv({0.1, -0.1})), 0.04, 1e-15);
}

TEST(FisherOracle, StatisticalDistanceExtremes) {
  const ProbabilityVector a(rv({0.3, 0.7}));
  EXPECT_NEAR(statistical_distance(a, a), 0.0, 1e-7);
  // Disjoint supports are clamped to the floor, so the angle sits just below pi/2.
  const ProbabilityVector e1(rv({1.0, 0.0})), e2(rv({0.0, 1.0}));
  EXPECT_NEAR(statistical_distance(e1, e2), kPi / 2.0, 1e-5);
  EXPECT_EQ(e1.clamped(), 1);
}

TEST(FisherOracle, GaussianTranslationFisherAndCramerRao) {
  const Grid g = Grid::centered(1, 801, 12.0, Boundary::Decay);
  for (double sigma : {0.8, 1.3, 1.6}) {
    const DensityGrid rho(experiments::gaussian_density(g, sigma, {0.4}));
    EXPECT_NEAR(translation_fisher(rho).fisher * sigma * sigma, 1.0, 1e-8);
    EXPECT_NEAR(cramer_rao(rho).product(), 1.0, 1e-8);
    EXPECT_NEAR(fisher_functional(rho), 0.5 / (sigma * sigma), 1e-8);
    EXPECT_NEAR(fisher_functional(rho, FisherConvention::Classical), 1.0 / (sigma * sigma), 1e-8);
  }
}

TEST(FisherOracle, LocationScaleMatrix) {
  const Grid g = Grid::centered(1, 1601, 14.0, Boundary::Decay);
  ParametricFamily fam{[&](const std::vector<double>& th) {
                         return DensityGrid(ScalarField::sample(g, [&](auto x) {
                           const double z = (x[0] - th[0]) / th[1];
                           return std::exp(-0.5 * z * z) / (th[1] * std::sqrt(2.0 * kPi));
                         }));
                       },
                       2};
  const double s = 1.5;
  const RMatrix I = fisher_matrix(fam, {0.2, s});
  EXPECT_NEAR(I(0, 0), 0.5 / (s * s), 1e-6);
  EXPECT_NEAR(I(1, 1), 1.0 / (s * s), 1e-6);
  EXPECT_NEAR(I(0, 1), 0.0, 1e-6);
}

TEST(FisherOracle, CrossEntropyOfShiftedGaussianIsQuadratic) {
  const Grid g = Grid::centered(1, 1024, 12.0, Boundary::Decay);
  const DensityGrid rho(experiments::gaussian_density(g, 1.0));
  const CrossEntropyExpansion ce = cross_entropy_expansion(rho, {0.1});
  EXPECT_NEAR(ce.exact, ce.quadratic, 1e-6 * ce.quadratic);
  EXPECT_EQ(cross_entropy_expansion(rho, {0.0}).exact, 0.0);
}

TEST(FisherOracle, ChirpedGaussianSaturatesExactUncertainty) {
  const Grid g = Grid::centered(1, 1024, 10.0, Boundary::Decay);
  for (double hbar : {1.0, 0.6}) {
    const ComplexField psi = Wavefield::normalized(experiments::gaussian_packet(g, 1.0, 0.3, 0.7, 0.15), hbar, 1.0).psi;
    const ExactUncertaintyReport eu = exact_uncertainty(psi, hbar);
    EXPECT_NEAR(eu.product(), 0.5 * hbar, 1e-6 * hbar);
    EXPECT_NEAR(eu.mean_p, (0.7 + 2.0 * 0.15 * 0.3) * hbar, 1e-7);  // hbar (k0 + 2 beta x0)
    EXPECT_NEAR(eu.mean_p, eu.mean_p_classical, 1e-8);
    EXPECT_TRUE(eu.chain_holds(1e-12));
  }
}

TEST(FisherErrors, Rejections) {
  EXPECT_EQ(kind_of([] { ProbabilityVector(rv({0.5, 0.6})); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { ProbabilityVector(rv({1.5, -0.5})); }), ErrorKind::NonPositiveProbability);
  EXPECT_EQ(kind_of([] { fisher_metric_discrete(ProbabilityVector(rv({0.5, 0.5})), rv({0.1, 0.1})); }),
            ErrorKind::UnbalancedPerturbation);
  EXPECT_EQ(kind_of([] { fisher_metric_discrete(ProbabilityVector(rv({0.5, 0.5})), rv({0.1, -0.1, 0.0})); }),
            ErrorKind::DimensionMismatch);
  const Grid g = Grid::centered(1, 201, 5.0, Boundary::Decay);
  EXPECT_EQ(kind_of([&] { DensityGrid(experiments::gaussian_density(g, 3.0)); }), ErrorKind::BoundaryPolicy);
  EXPECT_EQ(kind_of([&] { DensityGrid(ScalarField(g)); }), ErrorKind::InvalidArgument);
  const Grid p = Grid::centered(1, 64, 5.0, Boundary::Periodic);
  const ComplexField flat = ComplexField::sample(p, [](auto) { return cplx(0.1, 0.0); });
  EXPECT_EQ(kind_of([&] { exact_uncertainty(flat); }), ErrorKind::BoundaryPolicy);
}

// --- properties ------------------------------------------------------------

TEST(FisherProperty, DiscreteMetricIsAPositiveQuadraticForm) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    const int K = 2 + t % 9;
    const ProbabilityVector p(random_simplex(K, rng));
    RVector u(K), v(K);
    for (int j = 0; j < K; ++j) {
      u(j) = normal(rng);
      v(j) = normal(rng);
    }
    u.array() -= u.mean();
    v.array() -= v.mean();
    const double fu = fisher_metric_discrete(p, u), fv = fisher_metric_discrete(p, v);
    EXPECT_GE(fu, 0.0);
    const double a = 0.7, b = -1.3;
    const RVector w = a * u + b * v;
    const double cross = 0.5 * (fisher_metric_discrete(p, u + v) - fu - fv);
    EXPECT_NEAR(fisher_metric_discrete(p, w), a * a * fu + b * b * fv + 2.0 * a * b * cross,
                1e-12 * (1.0 + fu + fv) * 4.0);
  }
}

TEST(FisherProperty, DistanceIsAMetricAndApproachesFisher) {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    const int K = 2 + t % 7;
    const ProbabilityVector a(random_simplex(K, rng)), b(random_simplex(K, rng)), c(random_simplex(K, rng));
    const double ab = statistical_distance(a, b), bc = statistical_distance(b, c), ac = statistical_distance(a, c);
    EXPECT_LE(ac, ab + bc + 1e-14);
    EXPECT_NEAR(ab, statistical_distance(b, a), 1e-15);
    // Small displacements: (2 theta)^2 -> sum dp^2/p.
    RVector dp(K);
    for (int j = 0; j < K; ++j) dp(j) = normal(rng) * a(j);
    dp.array() -= dp.sum() / K;
    const double eps = 1e-4 / std::max(1.0, (dp.array() / a.values().array()).abs().maxCoeff());
    const ProbabilityVector moved(a.values() + eps * dp, 0.0);
    const double theta = statistical_distance(a, moved);
    const double f = fisher_metric_discrete(a, dp) * eps * eps;
    EXPECT_NEAR(4.0 * theta * theta, f, 1e-3 * f);
  }
}

TEST(FisherProperty, CramerRaoHoldsForRandomMixtures) {
  std::mt19937_64 rng(23);
  const Grid g = Grid::centered(1, 1201, 12.0, Boundary::Decay);
  for (int t = 0; t < 40; ++t) {
    const DensityGrid rho(experiments::random_mixture(g, rng, 12.0));
    const CramerRao cr = cramer_rao(rho);
    EXPECT_GE(cr.product(), 1.0 - 1e-10);
    const TranslationFisher tf = translation_fisher(rho);
    EXPECT_GE(std::sqrt(cr.variance), tf.fisher_length - 1e-12);
  }
}

TEST(FisherProperty, TranslationFisherIsShiftInvariant) {
  const Grid g = Grid::centered(1, 1201, 12.0, Boundary::Decay);
  const std::vector<experiments::MixtureComponent> base{{1.0, 1.0, {-1.0}}, {0.6, 0.7, {1.5}}};
  const double f0 = translation_fisher(DensityGrid(experiments::mixture_density(g, base))).fisher;
  for (double shift : {0.37, -1.1, 2.0}) {
    auto moved = base;
    for (auto& c : moved) c.center[0] += shift;
    EXPECT_NEAR(translation_fisher(DensityGrid(experiments::mixture_density(g, moved))).fisher, f0, 1e-8 * f0);
  }
}

TEST(FisherProperty, ExactUncertaintyChainOnRandomPackets) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Grid g = Grid::centered(1, 1024, 12.0, Boundary::Decay);
  for (int t = 0; t < 20; ++t) {
    ComplexField a = experiments::gaussian_packet(g, 0.9, -1.0 + u(rng), u(rng), 0.2 * u(rng));
    const ComplexField b = experiments::gaussian_packet(g, 1.1, 1.0 + u(rng), u(rng), 0.2 * u(rng));
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += 0.7 * b[i];
    const ComplexField psi = Wavefield::normalized(a, 1.0, 1.0).psi;
    const ExactUncertaintyReport eu = exact_uncertainty(psi);
    EXPECT_TRUE(eu.chain_holds(1e-10));
    EXPECT_GE(eu.product(), 0.5 - 1e-6);
  }
}
