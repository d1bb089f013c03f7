#pragma once

// Reference problems shared by the verification suites, the acceptance runner
// and the examples: closed-form densities and wavefields, refinement sweeps and
// entropy production runs.

#include <cmath>
#include <random>
#include <vector>

#include "qgeo/madelung.hpp"
#include "qgeo/weyl.hpp"

namespace qgeo::experiments {

/// Isotropic Gaussian density exp(-|x|^2 / 2 sigma^2), normalized on the grid.
inline ScalarField gaussian_density(const Grid& g, double sigma, std::vector<double> center = {}) {
  center.resize(g.dims(), 0.0);
  ScalarField f = ScalarField::sample(g, [&](auto x) {
    double r2 = 0.0;
    for (int a = 0; a < g.dims(); ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
    return std::exp(-r2 / (2.0 * sigma * sigma));
  });
  const double m = integrate(f);
  for (double& v : f.values()) v /= m;
  return f;
}

struct MixtureComponent {
  double weight = 1.0;
  double sigma = 1.0;
  std::vector<double> center;
};

inline ScalarField mixture_density(const Grid& g, const std::vector<MixtureComponent>& parts) {
  ScalarField f(g);
  for (const auto& p : parts) {
    std::vector<double> c = p.center;
    c.resize(g.dims(), 0.0);
    const double norm = std::pow(2.0 * kPi * p.sigma * p.sigma, -0.5 * g.dims());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto x = g.position(i);
      double r2 = 0.0;
      for (int a = 0; a < g.dims(); ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
      f[i] += p.weight * norm * std::exp(-r2 / (2.0 * p.sigma * p.sigma));
    }
  }
  const double m = integrate(f);
  for (double& v : f.values()) v /= m;
  return f;
}

/// Random smooth mixture of three Gaussians with centers inside half the box.
inline ScalarField random_mixture(const Grid& g, std::mt19937_64& rng, double extent) {
  std::uniform_real_distribution<double> c(-0.25 * extent, 0.25 * extent);
  std::uniform_real_distribution<double> s(0.8, 1.4);
  std::uniform_real_distribution<double> w(0.5, 1.5);
  std::vector<MixtureComponent> parts;
  for (int k = 0; k < 3; ++k) {
    MixtureComponent p;
    p.weight = w(rng);
    p.sigma = s(rng);
    for (int a = 0; a < g.dims(); ++a) p.center.push_back(c(rng));
    parts.push_back(p);
  }
  return mixture_density(g, parts);
}

/// Smooth compactly supported bump exp(-1 / (1 - r^2 / R^2)) raised to `power`.
inline ScalarField bump_density(const Grid& g, double radius, double power = 2.0) {
  ScalarField f = ScalarField::sample(g, [&](auto x) {
    double r2 = 0.0;
    for (int a = 0; a < g.dims(); ++a) r2 += x[a] * x[a];
    const double u = r2 / (radius * radius);
    return u < 1.0 ? std::exp(-power / (1.0 - u)) : 0.0;
  });
  const double m = integrate(f);
  for (double& v : f.values()) v /= m;
  return f;
}

/// Gaussian packet (2 pi sigma^2)^(-1/4) exp(-(x-x0)^2/(4 sigma^2) + i k0 x + i beta x^2) in 1-D.
inline ComplexField gaussian_packet(const Grid& g, double sigma, double x0 = 0.0, double k0 = 0.0, double beta = 0.0) {
  return ComplexField::sample(g, [&](auto x) {
    const double d = x[0] - x0;
    return std::pow(2.0 * kPi * sigma * sigma, -0.25) * std::exp(-d * d / (4.0 * sigma * sigma)) *
           std::polar(1.0, k0 * x[0] + beta * x[0] * x[0]);
  });
}

/// Free Gaussian packet with zero mean momentum at time t, width sigma0 at t = 0.
inline ComplexField free_packet_exact(const Grid& g, double sigma0, double t, double hbar, double mass) {
  const cplx st = sigma0 * (1.0 + cplx(0.0, hbar * t / (2.0 * mass * sigma0 * sigma0)));
  return ComplexField::sample(g, [&](auto x) {
    cplx r2 = 0.0;
    for (int a = 0; a < g.dims(); ++a) r2 += x[a] * x[a];
    return std::pow(2.0 * kPi * st * st, -0.25 * g.dims()) * std::exp(-r2 / (4.0 * sigma0 * st));
  });
}

/// Harmonic oscillator ground state times exp(-i E t / hbar), E = n hbar omega / 2.
inline ComplexField oscillator_ground_state(const Grid& g, double omega, double t, double hbar, double mass) {
  const double s2 = hbar / (2.0 * mass * omega);
  const double energy = 0.5 * g.dims() * hbar * omega;
  return ComplexField::sample(g, [&](auto x) {
    double r2 = 0.0;
    for (int a = 0; a < g.dims(); ++a) r2 += x[a] * x[a];
    return std::pow(2.0 * kPi * s2, -0.25 * g.dims()) * std::exp(-r2 / (4.0 * s2)) *
           std::polar(1.0, -energy * t / hbar);
  });
}

inline ScalarField harmonic_potential(const Grid& g, double omega, double mass) {
  return ScalarField::sample(g, [&](auto x) {
    double r2 = 0.0;
    for (int a = 0; a < g.dims(); ++a) r2 += x[a] * x[a];
    return 0.5 * mass * omega * omega * r2;
  });
}

// ---------------------------------------------------------------------------
// Madelung residuals along a Schrödinger evolution

enum class Problem { FreePacket, CoherentState };

struct SweepLevel {
  int nodes = 0;
  double dt = 0.0;
  double hj = 0.0;          // rho-weighted L2 norm
  double continuity = 0.0;  // rho-weighted L2 norm
};

struct SweepResult {
  std::vector<SweepLevel> levels;
  double hj_order = 0.0;          // smallest observed order between levels
  double continuity_order = 0.0;
};

/// Evolves the problem to t = 1 by split-step on a periodic box [-16, 16) and
/// evaluates both residuals at t = 1/2 from neighbouring snapshots.
inline SweepLevel madelung_level(Problem problem, int nodes, double dt, double hbar = 1.0, double mass = 1.0) {
  const Grid g = Grid::centered(1, nodes, 16.0, Boundary::Periodic);
  const bool coherent = problem == Problem::CoherentState;
  const double omega = 1.0;
  const double sigma = coherent ? std::sqrt(hbar / (2.0 * mass * omega)) : 1.0;
  const ComplexField psi = gaussian_packet(g, sigma, coherent ? 1.0 : 0.0, coherent ? 0.0 : 1.0);
  const ScalarField V = coherent ? harmonic_potential(g, omega, mass) : ScalarField(g);
  const Wavefield w = Wavefield::normalized(psi, hbar, mass, V);
  const int steps = static_cast<int>(std::lround(1.0 / dt));
  EvolutionOptions opt;
  opt.scheme = Scheme::SplitStep;
  opt.dt = dt;
  opt.steps = steps;
  opt.snapshot_every = 1;
  const EvolutionResult r = evolve_se(w, opt);
  const int mid = steps / 2;
  const TimeDerivatives td = madelung_time_derivatives(r.snapshots[mid - 1].psi, r.snapshots[mid + 1].psi, dt, hbar);
  const MadelungPair m = madelung_split(Wavefield(r.snapshots[mid].psi, hbar, mass, V));
  SweepLevel level;
  level.nodes = nodes;
  level.dt = dt;
  level.hj = hj_residual(m, V, td).weighted_norm(m.rho);
  level.continuity = continuity_residual(m, td).weighted_norm(m.rho);
  return level;
}

inline double observed_order(double coarse, double fine) { return std::log2(coarse / fine); }

/// (h, dt) halved together `levels - 1` times from (base_nodes, base_dt).
inline SweepResult madelung_sweep(Problem problem, int base_nodes = 1024, double base_dt = 0.01, int levels = 3,
                                  double hbar = 1.0, double mass = 1.0) {
  SweepResult s;
  int n = base_nodes;
  double dt = base_dt;
  for (int k = 0; k < levels; ++k) {
    s.levels.push_back(madelung_level(problem, n, dt, hbar, mass));
    n *= 2;
    dt /= 2.0;
  }
  s.hj_order = s.continuity_order = 1e300;
  for (std::size_t k = 1; k < s.levels.size(); ++k) {
    s.hj_order = std::min(s.hj_order, observed_order(s.levels[k - 1].hj, s.levels[k].hj));
    s.continuity_order = std::min(s.continuity_order, observed_order(s.levels[k - 1].continuity, s.levels[k].continuity));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Entropy production

struct EntropyProductionRun {
  std::vector<double> times;       // times at which rates are evaluated
  std::vector<double> rates;       // central-difference d(entropy)/dt
  std::vector<double> production;  // D * int (grad rho)^2 / rho
  double mid_relative_error = 0.0;
  double min_rate = 0.0;
};

/// Gaussian spreading under the heat semigroup with D = hbar / 2m on a periodic
/// grid of `nodes` points over [-40, 40).
inline EntropyProductionRun diffusion_entropy_run(int nodes = 2048, double sigma0 = 1.0, double t_end = 4.0,
                                                  int intervals = 400, double hbar = 1.0, double mass = 1.0) {
  const Grid g = Grid::centered(1, nodes, 40.0, Boundary::Periodic);
  const double D = hbar / (2.0 * mass);
  const ScalarField rho0 = gaussian_density(g, sigma0);
  const double dt = t_end / intervals;
  std::vector<ScalarField> rhos;
  for (int k = 0; k <= intervals; ++k) rhos.push_back(heat_flow(rho0, D, k * dt));
  EntropyProductionRun run;
  run.rates = entropy_rate(rhos, dt);
  run.min_rate = 1e300;
  for (std::size_t i = 0; i < run.rates.size(); ++i) {
    run.times.push_back((i + 1) * dt);
    run.production.push_back(diffusive_entropy_production(rhos[i + 1], D));
    run.min_rate = std::min(run.min_rate, run.rates[i]);
  }
  const std::size_t mid = run.rates.size() / 2;
  run.mid_relative_error = std::abs(run.rates[mid] - run.production[mid]) / run.production[mid];
  return run;
}

/// The same comparison along free Schrödinger spreading, where the rate and
/// D Tr F agree only at the single instant D t = sigma0^2.
inline EntropyProductionRun schrodinger_entropy_run(int nodes = 2048, double sigma0 = 1.0, double t_end = 4.0,
                                                    int intervals = 400, double hbar = 1.0, double mass = 1.0) {
  const Grid g = Grid::centered(1, nodes, 40.0, Boundary::Periodic);
  const double D = hbar / (2.0 * mass);
  const double dt = t_end / intervals;
  std::vector<ScalarField> rhos;
  for (int k = 0; k <= intervals; ++k) {
    rhos.push_back(free_packet_exact(g, sigma0, k * dt, hbar, mass).map([](cplx z) { return std::norm(z); }));
  }
  EntropyProductionRun run;
  run.rates = entropy_rate(rhos, dt);
  run.min_rate = 1e300;
  for (std::size_t i = 0; i < run.rates.size(); ++i) {
    run.times.push_back((i + 1) * dt);
    run.production.push_back(diffusive_entropy_production(rhos[i + 1], D));
    run.min_rate = std::min(run.min_rate, run.rates[i]);
  }
  const std::size_t mid = run.rates.size() / 2;
  run.mid_relative_error = std::abs(run.rates[mid] - run.production[mid]) / run.production[mid];
  return run;
}

// ---------------------------------------------------------------------------
// Quantum potential on a 3-D grid

/// Closed-form Q of an isotropic Gaussian density of width sigma in n dimensions.
inline double gaussian_q(double r2, double sigma, int n, double hbar, double mass) {
  return -hbar * hbar / (2.0 * mass) * (r2 / (4.0 * std::pow(sigma, 4)) - n / (2.0 * sigma * sigma));
}

/// Max error of the grid Q against the closed form within radius `r_max`,
/// divided by max |Q| there.
inline double gaussian_q_error(const Grid& g, double sigma, double r_max, double hbar = 1.0, double mass = 1.0) {
  const ScalarField rho = gaussian_density(g, sigma);
  const QuantumPotential q = quantum_potential(rho, hbar, mass);
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.position(i);
    double r2 = 0.0;
    for (int a = 0; a < g.dims(); ++a) r2 += x[a] * x[a];
    if (r2 > r_max * r_max || !q.keep[i]) continue;
    const double exact = gaussian_q(r2, sigma, g.dims(), hbar, mass);
    err = std::max(err, std::abs(q.Q[i] - exact));
    scale = std::max(scale, std::abs(exact));
  }
  return err / scale;
}

}  // namespace qgeo::experiments
