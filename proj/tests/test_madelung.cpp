// Madelung split, quantum potential, evolution and entropy.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qgeo/experiments.hpp"
#include "qgeo/madelung.hpp"

using namespace qgeo;
using namespace qgeo::experiments;

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

double max_rel(const ScalarField& a, const ScalarField& b, const std::vector<char>& keep) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!keep[i]) continue;
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / std::max(den, 1e-300);
}

}  // namespace

// --- oracles ---------------------------------------------------------------

TEST(MadelungOracle, GaussianQuantumPotential) {
  const Grid g = Grid::centered(1, 801, 10.0, Boundary::Decay);
  for (double hbar : {1.0, 0.5}) {
    EXPECT_LT(gaussian_q_error(g, 1.0, 4.0, hbar, 1.0), 1e-6);
    // Q(0) = hbar^2 / (4 m sigma^2) in one dimension.
    const QuantumPotential q = quantum_potential(gaussian_density(g, 1.0), hbar, 2.0);
    EXPECT_NEAR(q.Q[400], hbar * hbar / 8.0, 1e-7);
  }
}

TEST(MadelungOracle, UniformDensityHasNoQuantumPotential) {
  const Grid g = Grid::centered(2, 32, 4.0, Boundary::Periodic);
  const ScalarField rho = ScalarField::sample(g, [](auto) { return 1.0 / 64.0; });
  const QuantumPotential q = quantum_potential(rho, 1.0, 1.0);
  for (double v : q.Q.values()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(MadelungOracle, SplitJoinAndPlaneWavePhase) {
  const Grid g = Grid::centered(1, 801, 12.0, Boundary::Decay);
  const Wavefield w = Wavefield::normalized(gaussian_packet(g, 1.1, 0.4, 1.3, 0.2), 0.8, 1.0);
  const MadelungPair m = madelung_split(w);
  EXPECT_FALSE(m.unwrap_flagged());
  const ComplexField back = madelung_join_field(m);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (m.keep[i]) EXPECT_LT(std::abs(back[i] - w.psi[i]), 1e-10);
  }
  // S = hbar (k0 x + beta x^2) up to a constant.
  const std::size_t a = 300, b = 500;
  const double xa = g.position(a)[0], xb = g.position(b)[0];
  EXPECT_NEAR(m.S[b] - m.S[a], 0.8 * (1.3 * (xb - xa) + 0.2 * (xb * xb - xa * xa)), 1e-9);
}

TEST(MadelungOracle, DisconnectedSupportIsFlagged) {
  const Grid g = Grid::centered(1, 801, 20.0, Boundary::Decay);
  ComplexField psi = gaussian_packet(g, 0.5, -8.0);
  const ComplexField right = gaussian_packet(g, 0.5, 8.0, 1.0);
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] += right[i];
  EXPECT_TRUE(madelung_split(Wavefield::normalized(psi, 1.0, 1.0)).unwrap_flagged());
}

TEST(MadelungOracle, OscillatorGroundStateSolvesHamiltonJacobi) {
  const double hbar = 1.0, mass = 1.0, omega = 1.0, dt = 1e-3;
  const Grid g = Grid::centered(1, 1601, 10.0, Boundary::Decay);
  const ScalarField V = harmonic_potential(g, omega, mass);
  const Wavefield w = Wavefield::normalized(oscillator_ground_state(g, omega, 0.0, hbar, mass), hbar, mass, V);
  const TimeDerivatives td = madelung_time_derivatives(oscillator_ground_state(g, omega, -dt, hbar, mass),
                                                       oscillator_ground_state(g, omega, dt, hbar, mass), dt, hbar);
  const MadelungPair m = madelung_split(w);
  const double E = 0.5 * hbar * omega;
  EXPECT_LT(hj_residual(m, V, td).weighted_norm(m.rho) / E, 1e-6);
  EXPECT_LT(continuity_residual(m, td).weighted_norm(m.rho), 1e-8);
  // A coefficient 16 times too large leaves an O(1) residual.
  EXPECT_GT(hj_residual(m, V, td, 4.0 * hbar * hbar).weighted_norm(m.rho) / E, 1.0);

  const LagrangianReport lr = quantum_lagrangian(m, V, td);
  const double q = 0.25 * hbar * omega;
  EXPECT_NEAR(lr.classical, -q, 1e-6 * q);
  EXPECT_NEAR(lr.information, q, 1e-6 * q);
  EXPECT_NEAR(lr.total, 0.0, 1e-6 * q);
  EXPECT_NEAR(lr.hbar_from_c, hbar, 1e-14);
  EXPECT_LT(lr.rho_variation_gap, 1e-4);
  EXPECT_LT(lr.s_variation_gap, 1e-4);
}

TEST(MadelungOracle, FreePacketSpreadsAnalytically) {
  const Grid g = Grid::centered(1, 512, 16.0, Boundary::Periodic);
  EvolutionOptions opt;
  opt.dt = 1e-3;
  opt.steps = 1000;
  const EvolutionResult r = evolve_se(Wavefield::normalized(gaussian_packet(g, 1.0), 1.0, 1.0), opt);
  EXPECT_NEAR(std::sqrt(moments(r.final_state.density()).variance), std::sqrt(1.25), 1e-8);
  EXPECT_LT(r.max_norm_drift, 1e-10);
  EXPECT_LT(r.max_energy_drift, 1e-8);
  ASSERT_EQ(r.snapshots.size(), 2u);
  EXPECT_EQ(r.snapshots.back().step, 1000);
}

TEST(MadelungOracle, GaussianEntropyAndHeatFlow) {
  const Grid g = Grid::centered(1, 2048, 40.0, Boundary::Periodic);
  for (double sigma : {0.7, 1.0, 2.5}) {
    EXPECT_NEAR(entropy(gaussian_density(g, sigma)), 0.5 * std::log(2.0 * kPi * std::exp(1.0) * sigma * sigma), 1e-10);
  }
  // The heat flow widens a Gaussian to variance sigma^2 + 2 D t.
  const ScalarField out = heat_flow(gaussian_density(g, 1.0), 0.5, 2.0);
  EXPECT_NEAR(entropy(out), 0.5 * std::log(2.0 * kPi * std::exp(1.0) * 3.0), 1e-10);
  const EntropyProductionRun run = diffusion_entropy_run();
  EXPECT_LT(run.mid_relative_error, 1e-2);
  EXPECT_GE(run.min_rate, 0.0);
}

TEST(MadelungOracle, IntegratedQuantumPotentialIsPositiveFisher) {
  const Grid g = Grid::centered(1, 1601, 12.0, Boundary::Decay);
  const double sigma = 1.2, hbar = 1.0, mass = 1.0;
  const FisherQIdentity f = fisher_q_identity(DensityGrid(gaussian_density(g, sigma)), hbar, mass);
  const double expect = hbar * hbar / (8.0 * mass * sigma * sigma);
  EXPECT_NEAR(f.lhs, expect, 1e-8);
  EXPECT_LT(f.corrected_gap, 1e-6);
  EXPECT_NEAR(f.relative_gap, 2.0, 1e-6);  // the negative sign is off by exactly -1
}

TEST(MadelungErrors, Rejections) {
  const Grid g = Grid::centered(1, 128, 8.0, Boundary::Periodic);
  const ComplexField twice = gaussian_packet(g, 1.0).map([](cplx z) { return 2.0 * z; });
  EXPECT_EQ(kind_of([&] { Wavefield(twice, 1.0, 1.0); }), ErrorKind::NotNormalized);
  EXPECT_EQ(kind_of([&] { Wavefield::normalized(ComplexField(g), 1.0, 1.0); }), ErrorKind::ZeroVector);
  EXPECT_EQ(kind_of([&] { Wavefield::normalized(gaussian_packet(g, 1.0), 0.0, 1.0); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { scheme_from_string("leapfrog"); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { entropy_rate({}, 0.1); }), ErrorKind::MissingInput);
  const Grid d = Grid::centered(1, 128, 8.0, Boundary::Decay);
  EvolutionOptions opt;
  opt.steps = 1;
  EXPECT_EQ(kind_of([&] { evolve_se(Wavefield::normalized(gaussian_packet(d, 1.0), 1.0, 1.0), opt); }),
            ErrorKind::BoundaryPolicy);
  EXPECT_EQ(kind_of([&] {
              fisher_q_identity(DensityGrid(gaussian_density(g, 1.0)), 1.0, 1.0);
            }),
            ErrorKind::BoundaryPolicy);
}

// --- properties ------------------------------------------------------------

TEST(MadelungProperty, QuantumPotentialIsScaleInvariant) {
  std::mt19937_64 rng(31);
  const Grid g = Grid::centered(1, 1201, 12.0, Boundary::Decay);
  for (int t = 0; t < 20; ++t) {
    const ScalarField rho = random_mixture(g, rng, 12.0);
    const QuantumPotential a = quantum_potential(rho, 1.0, 1.0);
    const QuantumPotential b = quantum_potential(rho.map([&](double v) { return (1.0 + t) * v; }), 1.0, 1.0);
    EXPECT_LT(max_rel(b.Q, a.Q, a.keep), 1e-11);
    // Q scales as hbar^2 / m.
    const QuantumPotential c = quantum_potential(rho, 0.5, 2.0);
    EXPECT_LT(max_rel(c.Q.map([](double v) { return 8.0 * v; }), a.Q, a.keep), 1e-12);
  }
}

TEST(MadelungProperty, ExpandedAndOsmoticFormsAgree) {
  std::mt19937_64 rng(32);
  const Grid g = Grid::centered(1, 4801, 15.0, Boundary::Decay);
  for (int t = 0; t < 5; ++t) {
    const ScalarField rho = random_mixture(g, rng, 10.0);
    const ExpandedFormReport er = expanded_form_report(rho, 1.0, 1.0);
    EXPECT_LT(er.log_derivative_gap, 1e-6);
    EXPECT_NEAR(er.log_derivative_ratio, 1.0, 1e-6);
    const OsmoticReport os = osmotic_checks(rho, 1.0, 1.0);
    EXPECT_LT(os.identity_residual, 1e-5);
    EXPECT_NEAR(os.fitted_factor, -1.0, 1e-5);
  }
}

TEST(MadelungProperty, IntegratedQuantumPotentialMatchesFisherOnMixtures) {
  std::mt19937_64 rng(33);
  const Grid g = Grid::centered(1, 2401, 12.0, Boundary::Decay);
  for (int t = 0; t < 10; ++t) {
    const FisherQIdentity f = fisher_q_identity(DensityGrid(random_mixture(g, rng, 12.0)), 1.0, 1.0);
    EXPECT_GT(f.lhs, 0.0);
    EXPECT_LT(f.corrected_gap, 1e-6);
  }
}

TEST(MadelungProperty, EvolutionConservesNormForBothSchemes) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Grid g = Grid::centered(1, 256, 12.0, Boundary::Periodic);
  const ScalarField V = harmonic_potential(g, 0.5, 1.0);
  for (int t = 0; t < 6; ++t) {
    const Wavefield w = Wavefield::normalized(gaussian_packet(g, 0.8 + 0.3 * u(rng), u(rng), u(rng)), 1.0, 1.0, V);
    for (Scheme s : {Scheme::SplitStep, Scheme::CrankNicolson}) {
      EvolutionOptions opt;
      opt.scheme = s;
      opt.dt = 5e-3;
      opt.steps = 100;
      opt.snapshot_every = 25;
      const EvolutionResult r = evolve_se(w, opt);
      EXPECT_LT(r.max_norm_drift, 1e-10) << to_string(s);
      EXPECT_EQ(r.snapshots.size(), 5u);
    }
  }
}

TEST(MadelungProperty, SplitJoinRoundTripOnRandomPackets) {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Grid g = Grid::centered(1, 801, 12.0, Boundary::Decay);
  for (int t = 0; t < 50; ++t) {
    const Wavefield w =
        Wavefield::normalized(gaussian_packet(g, 1.0 + 0.3 * u(rng), u(rng), 2.0 * u(rng), 0.3 * u(rng)), 1.0, 1.0);
    const MadelungPair m = madelung_split(w);
    const ComplexField back = madelung_join_field(m);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (m.keep[i]) err = std::max(err, std::abs(back[i] - w.psi[i]));
    }
    EXPECT_LT(err, 1e-10);
  }
}
