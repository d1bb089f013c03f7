#pragma once

// Madelung split of a wavefunction, the quantum potential, the Hamilton-Jacobi
// and continuity residuals, Schrödinger time stepping, entropy production and
// the integral identity between the quantum potential and Fisher information.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qgeo/fft.hpp"
#include "qgeo/fisher.hpp"
#include "qgeo/grid.hpp"

namespace qgeo {

/// |psi| below this fraction of max|psi| counts as a node (rho below its square).
inline constexpr double kRhoMaskThreshold = kPsiMaskThreshold * kPsiMaskThreshold;

/// psi on a grid with its physical constants. psi must carry unit mass under the
/// trapezoid rule to within 1e-8.
struct Wavefield {
  ComplexField psi;
  double hbar = kDefaultHbar;
  double mass = 1.0;
  ScalarField potential;

  Wavefield() = default;
  Wavefield(ComplexField p, double h, double m, std::optional<ScalarField> v = std::nullopt)
      : psi(std::move(p)), hbar(h), mass(m) {
    require(hbar > 0.0 && mass > 0.0, ErrorKind::InvalidArgument, "hbar and mass must be positive");
    potential = v ? std::move(*v) : ScalarField(psi.grid());
    require(potential.grid().same_geometry(psi.grid()), ErrorKind::DimensionMismatch,
            "potential lives on a different grid");
    require(std::abs(norm() - 1.0) <= 1e-8, ErrorKind::NotNormalized,
            "wavefield must be normalized (mass " + std::to_string(norm()) + ")");
  }

  /// Rescales psi to unit mass before construction.
  static Wavefield normalized(ComplexField p, double h, double m, std::optional<ScalarField> v = std::nullopt) {
    const double n = integrate(p.map([](cplx z) { return std::norm(z); }));
    require(n > 0.0, ErrorKind::ZeroVector, "wavefunction is identically zero");
    for (cplx& z : p.values()) z /= std::sqrt(n);
    return Wavefield(std::move(p), h, m, std::move(v));
  }

  const Grid& grid() const { return psi.grid(); }
  double norm() const { return integrate(psi.map([](cplx z) { return std::norm(z); })); }
  ScalarField density() const { return psi.map([](cplx z) { return std::norm(z); }); }
};

struct MadelungPair {
  ScalarField rho;
  ScalarField S;            // action, in units where psi = sqrt(rho) exp(i S / hbar)
  std::vector<char> keep;   // nodes above the mask threshold
  int unwrap_regions = 0;   // > 1 flags disconnected support
  double hbar = kDefaultHbar;
  double mass = 1.0;

  bool unwrap_flagged() const { return unwrap_regions > 1; }
};

/// rho = |psi|^2 and S = hbar * unwrapped arg(psi). Phase is integrated along a
/// breadth-first spanning tree rooted at the largest |psi| of each connected
/// region of kept nodes.
inline MadelungPair madelung_split(const Wavefield& w) {
  const Grid& g = w.grid();
  MadelungPair m;
  m.hbar = w.hbar;
  m.mass = w.mass;
  m.rho = w.density();
  m.S = ScalarField(g);
  m.keep = threshold_mask(m.rho, kRhoMaskThreshold);

  std::vector<char> seen(g.size(), 0);
  std::deque<std::size_t> queue;
  for (;;) {
    std::size_t root = g.size();
    double best = -1.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (m.keep[i] && !seen[i] && m.rho[i] > best) {
        best = m.rho[i];
        root = i;
      }
    }
    if (root == g.size()) break;
    ++m.unwrap_regions;
    seen[root] = 1;
    m.S[root] = w.hbar * std::arg(w.psi[root]);
    queue.push_back(root);
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      auto ijk = g.unravel(i);
      for (int a = 0; a < g.dims(); ++a) {
        for (int step : {-1, 1}) {
          auto nb = ijk;
          nb[a] += step;
          if (nb[a] < 0 || nb[a] >= g.shape()[a]) {
            if (!g.periodic()) continue;
            nb[a] = (nb[a] + g.shape()[a]) % g.shape()[a];
          }
          const std::size_t j = g.ravel(nb);
          if (!m.keep[j] || seen[j]) continue;
          seen[j] = 1;
          m.S[j] = m.S[i] + w.hbar * std::arg(w.psi[j] * std::conj(w.psi[i]));
          queue.push_back(j);
        }
      }
    }
  }
  return m;
}

/// sqrt(rho) exp(i S / hbar); masked nodes carry zero phase.
inline ComplexField madelung_join_field(const MadelungPair& m) {
  ComplexField psi(m.rho.grid());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double a = std::sqrt(std::max(m.rho[i], 0.0));
    psi[i] = m.keep[i] ? std::polar(a, m.S[i] / m.hbar) : cplx(a, 0.0);
  }
  return psi;
}

inline Wavefield madelung_join(const MadelungPair& m, std::optional<ScalarField> potential = std::nullopt) {
  return Wavefield(madelung_join_field(m), m.hbar, m.mass, std::move(potential));
}

struct QuantumPotential {
  ScalarField Q;
  std::vector<char> keep;
  std::size_t masked = 0;
};

/// Q = -(hbar^2 / 2m) Lap(sqrt rho) / sqrt rho with a fourth-order Laplacian.
inline QuantumPotential quantum_potential(const ScalarField& rho, double hbar, double mass) {
  require(hbar > 0.0 && mass > 0.0, ErrorKind::InvalidArgument, "hbar and mass must be positive");
  for (double v : rho.values()) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::InvalidArgument, "density must be nonnegative");
  }
  QuantumPotential out;
  out.keep = threshold_mask(rho, kRhoMaskThreshold);
  out.masked = rho.size() - count_kept(out.keep);
  const ScalarField amp = rho.map([](double v) { return std::sqrt(v); });
  const ScalarField lap = laplacian(amp);
  out.Q = ScalarField(rho.grid());
  const double c = -hbar * hbar / (2.0 * mass);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (out.keep[i]) out.Q[i] = c * lap[i] / amp[i];
  }
  return out;
}

inline QuantumPotential quantum_potential(const DensityGrid& rho, double hbar, double mass) {
  return quantum_potential(rho.field(), hbar, mass);
}

/// Log-derivative form (hbar^2 / 8m) sum_a [(d_a rho / rho)^2 - 2 d_a^2 rho / rho].
inline ScalarField quantum_potential_expanded(const ScalarField& rho, double hbar, double mass,
                                              const std::vector<char>& keep) {
  const Grid& g = rho.grid();
  ScalarField out(g);
  const double c = hbar * hbar / (8.0 * mass);
  for (int a = 0; a < g.dims(); ++a) {
    const ScalarField d1 = derivative(rho, a);
    const ScalarField d2 = second_derivative(rho, a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!keep[i]) continue;
      const double l = d1[i] / rho[i];
      out[i] += c * (l * l - 2.0 * d2[i] / rho[i]);
    }
  }
  return out;
}

/// How the alternative closed forms of Q compare with the canonical one.
/// Each ratio is the least-squares constant c with form ~ c * Q.
struct ExpandedFormReport {
  double log_derivative_ratio = 0.0;  // -(hbar^2/8m)[2 rho''/rho - (rho'/rho)^2]
  double metric_form_ratio = 0.0;     // +(hbar^2 g / 8m)(2 dd rho / rho - d rho d rho / rho^2)
  double amplitude_form_ratio = 0.0;  // -2 hbar^2 g [(dP)^2 / P^2 - 2 ddP / P]
  double log_derivative_gap = 0.0;    // max |expanded - Q| / max |Q|
};

/// Forms are compared where rho >= support * max rho; further out both carry
/// finite-difference error that grows like a power of |x|.
inline ExpandedFormReport expanded_form_report(const ScalarField& rho, double hbar, double mass,
                                               double support = 1e-8) {
  const QuantumPotential q = quantum_potential(rho, hbar, mass);
  std::vector<char> keep = erode_mask(rho.grid(), q.keep, 2);
  const std::vector<char> region = threshold_mask(rho, support);
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = keep[i] && region[i];
  const ScalarField expanded = quantum_potential_expanded(rho, hbar, mass, keep);
  // bracket = (dP/P)^2 - 2 ddP/P summed over axes; the amplitude form uses g = 1/m.
  ScalarField metric_form(rho.grid()), amplitude_form(rho.grid());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!keep[i]) continue;
    const double bracket = expanded[i] * 8.0 * mass / (hbar * hbar);  // (dP/P)^2 - 2 ddP/P
    metric_form[i] = -(hbar * hbar / (8.0 * mass)) * bracket;
    amplitude_form[i] = -2.0 * hbar * hbar / mass * bracket;
  }
  auto ratio = [&](const ScalarField& f) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      if (!keep[i]) continue;
      num += f[i] * q.Q[i];
      den += q.Q[i] * q.Q[i];
    }
    return den > 0.0 ? num / den : 0.0;
  };
  ExpandedFormReport r;
  r.log_derivative_ratio = ratio(expanded);
  r.metric_form_ratio = ratio(metric_form);
  r.amplitude_form_ratio = ratio(amplitude_form);
  const double scale = max_abs(q.Q, keep);
  r.log_derivative_gap = scale > 0.0 ? max_abs_diff(expanded, q.Q, keep) / scale : max_abs_diff(expanded, q.Q, keep);
  return r;
}

/// Coefficient of the quantum term in the Hamilton-Jacobi equation written as
/// S_t + (1/2m)[|grad S|^2 + lambda((grad P)^2/P^2 - 2 Lap P / P)] + V = 0.
/// Agreement with the Schrödinger equation needs lambda = hbar^2 / 4.
inline double schrodinger_lambda(double hbar) { return hbar * hbar / 4.0; }

/// The value (2 hbar)^2 quoted alongside the variational derivation.
inline double quoted_lambda(double hbar) { return 4.0 * hbar * hbar; }

/// Time derivatives of rho and S at the middle of three equally spaced snapshots.
struct TimeDerivatives {
  ScalarField rho_t;
  ScalarField S_t;
};

inline TimeDerivatives madelung_time_derivatives(const ComplexField& prev, const ComplexField& next,
                                                 double dt, double hbar) {
  require(prev.grid().same_geometry(next.grid()), ErrorKind::DimensionMismatch,
          "snapshots on different grids");
  require(dt > 0.0, ErrorKind::InvalidArgument, "snapshot spacing must be positive");
  TimeDerivatives d{ScalarField(prev.grid()), ScalarField(prev.grid())};
  for (std::size_t i = 0; i < prev.size(); ++i) {
    d.rho_t[i] = (std::norm(next[i]) - std::norm(prev[i])) / (2.0 * dt);
    d.S_t[i] = hbar * std::arg(next[i] * std::conj(prev[i])) / (2.0 * dt);
  }
  return d;
}

struct ResidualField {
  ScalarField values;
  std::vector<char> keep;  // nodes where the residual is meaningful

  /// sqrt(int w r^2) over kept nodes.
  double weighted_norm(const ScalarField& weight) const {
    ScalarField t(values.grid());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = weight[i] * values[i] * values[i];
    return std::sqrt(std::max(integrate_masked(t, keep), 0.0));
  }
  double max_abs() const { return qgeo::max_abs(values, keep); }
};

namespace detail {

// Residual mask: kept nodes whose nested stencils stay inside the support.
inline std::vector<char> residual_mask(const MadelungPair& m) {
  return erode_mask(m.rho.grid(), m.keep, 4);
}

inline void check_time_derivatives(const MadelungPair& m, const TimeDerivatives& td) {
  require(td.rho_t.size() == m.rho.size() && td.S_t.size() == m.rho.size(), ErrorKind::MissingInput,
          "time derivatives are missing or on a different grid");
  require(td.rho_t.grid().same_geometry(m.rho.grid()), ErrorKind::DimensionMismatch,
          "time derivatives on a different grid");
}

}  // namespace detail

/// S_t + (1/2m)[|grad S|^2 + lambda((grad rho)^2 / rho^2 - 2 Lap rho / rho)] + V.
inline ResidualField hj_residual(const MadelungPair& m, const ScalarField& V, const TimeDerivatives& td,
                                 std::optional<double> lambda = std::nullopt) {
  detail::check_time_derivatives(m, td);
  const Grid& g = m.rho.grid();
  require(V.grid().same_geometry(g), ErrorKind::DimensionMismatch, "potential on a different grid");
  const double lam = lambda.value_or(schrodinger_lambda(m.hbar));
  ResidualField r{ScalarField(g), detail::residual_mask(m)};
  const double inv2m = 1.0 / (2.0 * m.mass);
  for (int a = 0; a < g.dims(); ++a) {
    const ScalarField dS = derivative(m.S, a);
    const ScalarField dr = derivative(m.rho, a);
    const ScalarField d2r = second_derivative(m.rho, a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!r.keep[i]) continue;
      const double l = dr[i] / m.rho[i];
      r.values[i] += inv2m * (dS[i] * dS[i] + lam * (l * l - 2.0 * d2r[i] / m.rho[i]));
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (r.keep[i]) r.values[i] += td.S_t[i] + V[i];
  }
  return r;
}

/// rho_t + div(rho grad S / m).
inline ResidualField continuity_residual(const MadelungPair& m, const TimeDerivatives& td) {
  detail::check_time_derivatives(m, td);
  const Grid& g = m.rho.grid();
  ResidualField r{td.rho_t, detail::residual_mask(m)};
  for (int a = 0; a < g.dims(); ++a) {
    const ScalarField dS = derivative(m.S, a);
    ScalarField flux(g);
    for (std::size_t i = 0; i < g.size(); ++i) flux[i] = m.keep[i] ? m.rho[i] * dS[i] / m.mass : 0.0;
    const ScalarField div = derivative(flux, a);
    for (std::size_t i = 0; i < g.size(); ++i) r.values[i] += div[i];
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!r.keep[i]) r.values[i] = 0.0;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Time evolution

enum class Scheme { SplitStep, CrankNicolson };

inline const char* to_string(Scheme s) { return s == Scheme::SplitStep ? "split_step" : "crank_nicolson"; }

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "split_step" || s == "spectral") return Scheme::SplitStep;
  if (s == "crank_nicolson" || s == "implicit") return Scheme::CrankNicolson;
  throw Error(ErrorKind::InvalidArgument, "unknown scheme '" + s + "'");
}

struct Snapshot {
  int step = 0;
  double t = 0.0;
  ComplexField psi;
  double norm = 0.0;
  double energy = 0.0;
};

struct EvolutionOptions {
  Scheme scheme = Scheme::SplitStep;
  double dt = 0.0;  // 0 selects default_time_step
  int steps = 0;
  int snapshot_every = 0;  // 0 keeps only the initial and final states
  std::function<void(const Snapshot&)> on_snapshot;
};

struct EvolutionResult {
  Wavefield final_state;
  std::vector<Snapshot> snapshots;
  double dt = 0.0;
  double max_norm_drift = 0.0;
  double max_energy_drift = 0.0;
  double dispersion_number = 0.0;  // hbar dt / (m h^2)
  double potential_phase = 0.0;    // max |V| dt / hbar
  std::vector<std::string> warnings;
};

/// Default step m h^2 / (10 hbar) for the smallest spacing h.
inline double default_time_step(const Grid& g, double hbar, double mass) {
  const double h = *std::min_element(g.spacing().begin(), g.spacing().end());
  return 0.1 * mass * h * h / hbar;
}

namespace detail {

using SparseC = Eigen::SparseMatrix<cplx>;

// Fourth-order finite-difference Hamiltonian. Decay grids treat psi as zero
// outside the box.
inline SparseC fd_hamiltonian(const Grid& g, const ScalarField& V, double hbar, double mass) {
  static constexpr double stencil[5] = {-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0};
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(g.size() * (4 * g.dims() + 1));
  const double kin = -hbar * hbar / (2.0 * mass);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto ijk = g.unravel(i);
    trips.emplace_back(i, i, V[i]);
    for (int a = 0; a < g.dims(); ++a) {
      const double h2 = g.spacing()[a] * g.spacing()[a];
      for (int s = -2; s <= 2; ++s) {
        auto nb = ijk;
        nb[a] += s;
        if (nb[a] < 0 || nb[a] >= g.shape()[a]) {
          if (!g.periodic()) continue;
          nb[a] = (nb[a] + g.shape()[a]) % g.shape()[a];
        }
        trips.emplace_back(i, g.ravel(nb), kin * stencil[s + 2] / h2);
      }
    }
  }
  SparseC H(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
  H.setFromTriplets(trips.begin(), trips.end());
  return H;
}

inline double spectral_energy(const ComplexField& psi, const ScalarField& V, double hbar, double mass,
                              FftPlan& plan, const std::vector<double>& k2) {
  const Grid& g = psi.grid();
  std::vector<cplx> data(psi.values());
  plan.forward(data);
  double kinetic = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) kinetic += k2[i] * std::norm(data[i]);
  kinetic *= hbar * hbar / (2.0 * mass) * g.cell_volume() / static_cast<double>(g.size());
  double potential = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) potential += V[i] * std::norm(psi[i]);
  return kinetic + potential * g.cell_volume();
}

inline double fd_energy(const ComplexField& psi, const SparseC& H, const Grid& g) {
  Eigen::Map<const CVector> v(psi.values().data(), static_cast<Eigen::Index>(psi.size()));
  return v.dot(H * v).real() * g.cell_volume();
}

}  // namespace detail

/// Evolves i hbar psi_t = -(hbar^2/2m) Lap psi + V psi. SplitStep is Strang
/// splitting with exact spectral kinetic steps and needs a periodic grid.
/// CrankNicolson is the implicit midpoint rule on a fourth-order Laplacian.
inline EvolutionResult evolve_se(const Wavefield& w, EvolutionOptions opt) {
  const Grid& g = w.grid();
  require(opt.steps >= 0, ErrorKind::InvalidArgument, "step count must be nonnegative");
  if (opt.dt == 0.0) opt.dt = default_time_step(g, w.hbar, w.mass);
  require(opt.dt > 0.0 && std::isfinite(opt.dt), ErrorKind::InvalidArgument, "dt must be positive");
  if (opt.scheme == Scheme::SplitStep) {
    require(g.periodic(), ErrorKind::BoundaryPolicy, "the split-step scheme needs a periodic grid");
  }
  const double hmin = *std::min_element(g.spacing().begin(), g.spacing().end());
  double vmax = 0.0;
  for (double v : w.potential.values()) vmax = std::max(vmax, std::abs(v));

  EvolutionResult res;
  res.dt = opt.dt;
  res.dispersion_number = w.hbar * opt.dt / (w.mass * hmin * hmin);
  res.potential_phase = vmax * opt.dt / w.hbar;
  if (opt.scheme == Scheme::SplitStep && res.potential_phase > kPi) {
    res.warnings.push_back("potential phase per step exceeds pi; the step under-resolves V");
  }
  if (res.dispersion_number > 1.0) {
    res.warnings.push_back("dispersion number hbar dt/(m h^2) exceeds 1; expect phase errors at high k");
  }

  ComplexField psi = w.psi;
  std::optional<FftPlan> plan;
  std::vector<double> k2;
  std::vector<cplx> kinetic_phase, potential_half;
  detail::SparseC H;
  Eigen::SparseLU<detail::SparseC> lu;
  detail::SparseC rhs_op;

  if (opt.scheme == Scheme::SplitStep) {
    plan.emplace(g);
    k2 = wavenumber_squared(g);
    kinetic_phase.resize(g.size());
    potential_half.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      kinetic_phase[i] = std::polar(1.0, -w.hbar * k2[i] * opt.dt / (2.0 * w.mass));
      potential_half[i] = std::polar(1.0, -w.potential[i] * opt.dt / (2.0 * w.hbar));
    }
  } else {
    H = detail::fd_hamiltonian(g, w.potential, w.hbar, w.mass);
    detail::SparseC I(H.rows(), H.cols());
    I.setIdentity();
    const cplx a(0.0, opt.dt / (2.0 * w.hbar));
    detail::SparseC lhs = I + a * H;
    rhs_op = I - a * H;
    lu.compute(lhs);
    require(lu.info() == Eigen::Success, ErrorKind::NumericalFailure, "implicit step factorization failed");
  }

  auto energy = [&](const ComplexField& p) {
    return opt.scheme == Scheme::SplitStep ? detail::spectral_energy(p, w.potential, w.hbar, w.mass, *plan, k2)
                                           : detail::fd_energy(p, H, g);
  };
  auto mass_of = [&](const ComplexField& p) { return integrate(p.map([](cplx z) { return std::norm(z); })); };

  const double n0 = mass_of(psi);
  const double e0 = energy(psi);
  auto emit = [&](int step) {
    Snapshot s{step, step * opt.dt, psi, mass_of(psi), energy(psi)};
    res.max_norm_drift = std::max(res.max_norm_drift, std::abs(s.norm - n0));
    res.max_energy_drift = std::max(res.max_energy_drift, std::abs(s.energy - e0));
    if (opt.on_snapshot) opt.on_snapshot(s);
    res.snapshots.push_back(std::move(s));
  };
  emit(0);

  std::vector<cplx> buf;
  for (int step = 1; step <= opt.steps; ++step) {
    if (opt.scheme == Scheme::SplitStep) {
      buf = psi.values();
      for (std::size_t i = 0; i < g.size(); ++i) buf[i] *= potential_half[i];
      plan->forward(buf);
      for (std::size_t i = 0; i < g.size(); ++i) buf[i] *= kinetic_phase[i];
      plan->inverse(buf);
      for (std::size_t i = 0; i < g.size(); ++i) buf[i] *= potential_half[i];
      psi.values() = buf;
    } else {
      Eigen::Map<CVector> v(psi.values().data(), static_cast<Eigen::Index>(psi.size()));
      const CVector b = rhs_op * v;
      v = lu.solve(b);
    }
    const bool last = step == opt.steps;
    if (last || (opt.snapshot_every > 0 && step % opt.snapshot_every == 0)) {
      for (const cplx& z : psi.values()) {
        require(std::isfinite(z.real()) && std::isfinite(z.imag()), ErrorKind::NumericalFailure,
                "evolution produced non-finite values at step " + std::to_string(step));
      }
      emit(step);
    }
  }
  require(res.max_norm_drift < 1e-6, ErrorKind::NumericalFailure,
          "norm drift " + std::to_string(res.max_norm_drift) + " indicates an unstable configuration");
  res.final_state = Wavefield(psi, w.hbar, w.mass, w.potential);
  return res;
}

// ---------------------------------------------------------------------------
// Entropy and diffusion

/// -int rho log rho over nodes with rho > 0.
inline double entropy(const ScalarField& rho) {
  ScalarField t(rho.grid());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    require(rho[i] >= 0.0 && std::isfinite(rho[i]), ErrorKind::InvalidArgument, "density must be nonnegative");
    if (rho[i] > 0.0) t[i] = -rho[i] * std::log(rho[i]);
  }
  return integrate(t);
}

/// Central differences of the entropy along equally spaced density snapshots;
/// entry i is the rate at snapshot i + 1.
inline std::vector<double> entropy_rate(const std::vector<ScalarField>& rhos, double dt) {
  require(rhos.size() >= 3, ErrorKind::MissingInput, "entropy_rate needs at least three snapshots");
  require(dt > 0.0, ErrorKind::InvalidArgument, "snapshot spacing must be positive");
  std::vector<double> s;
  s.reserve(rhos.size());
  for (const auto& r : rhos) s.push_back(entropy(r));
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) out.push_back((s[i + 1] - s[i - 1]) / (2.0 * dt));
  return out;
}

/// D * int (grad rho)^2 / rho, the entropy production of free diffusion.
inline double diffusive_entropy_production(const ScalarField& rho, double D) {
  const int n = rho.grid().dims();
  return D * fisher_integral(rho, RMatrix::Identity(n, n), kRhoMaskThreshold);
}

/// Heat semigroup exp(t D Lap) applied spectrally. Decay grids are treated as
/// periodic, which is harmless while the density stays away from the edges.
inline ScalarField heat_flow(const ScalarField& rho, double D, double t) {
  require(D >= 0.0 && t >= 0.0, ErrorKind::InvalidArgument, "diffusion constant and time must be nonnegative");
  const Grid& g = rho.grid();
  std::vector<cplx> data(rho.values().begin(), rho.values().end());
  FftPlan plan(g);
  plan.forward(data);
  const std::vector<double> k2 = wavenumber_squared(g);
  for (std::size_t i = 0; i < g.size(); ++i) data[i] *= std::exp(-D * k2[i] * t);
  plan.inverse(data);
  ScalarField out(g);
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = std::max(data[i].real(), 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// Osmotic velocity

struct OsmoticReport {
  ScalarField u;                 // D d(log rho)
  double diffusion = 0.0;        // hbar / 2m
  double identity_residual = 0.0;  // max |Q + m (u^2/2 + D u')| / max |Q|
  double unscaled_residual = 0.0;  // max |Q - (u^2/2 + D u')| / max |Q|
  double fitted_factor = 0.0;      // c with Q ~ c (u^2/2 + D u')
  std::size_t masked = 0;
};

/// Relates Q to the osmotic velocity u = D d(log rho), D = hbar/2m. Pointwise
/// Q = -m (u^2/2 + D u'); the unscaled form u^2/2 + D u' is reported alongside.
/// Residuals are taken where rho >= support * max rho, as in expanded_form_report.
inline OsmoticReport osmotic_checks(const ScalarField& rho, double hbar, double mass, double support = 1e-8) {
  const Grid& g = rho.grid();
  require(g.dims() == 1, ErrorKind::InvalidArgument, "osmotic_checks needs a 1-D density");
  const QuantumPotential q = quantum_potential(rho, hbar, mass);
  std::vector<char> keep = erode_mask(g, q.keep, 4);
  const std::vector<char> region = threshold_mask(rho, support);
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = keep[i] && region[i];
  OsmoticReport r;
  r.diffusion = hbar / (2.0 * mass);
  r.masked = g.size() - count_kept(keep);
  r.u = ScalarField(g);
  const ScalarField dr = derivative(rho, 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (q.keep[i]) r.u[i] = r.diffusion * dr[i] / rho[i];
  }
  const ScalarField du = derivative(r.u, 0);
  ScalarField form(g), scaled(g);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!keep[i]) continue;
    form[i] = 0.5 * r.u[i] * r.u[i] + r.diffusion * du[i];
    scaled[i] = -mass * form[i];
    num += q.Q[i] * form[i];
    den += form[i] * form[i];
  }
  const double scale = std::max(max_abs(q.Q, keep), 1e-300);
  r.identity_residual = max_abs_diff(q.Q, scaled, keep) / scale;
  r.unscaled_residual = max_abs_diff(q.Q, form, keep) / scale;
  r.fitted_factor = den > 0.0 ? num / den : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Integral identity between Q and Fisher information

struct FisherQIdentity {
  double lhs = 0.0;          // int rho Q
  double rhs = 0.0;          // -(hbar^2 / 8m) int (grad rho)^2 / rho
  double relative_gap = 0.0;
  double fisher_unhalved = 0.0;
  double corrected_rhs = 0.0;  // +(hbar^2 / 8m) int (grad rho)^2 / rho
  double corrected_gap = 0.0;
  std::size_t masked = 0;
};

/// Integrating rho Q by parts gives int rho Q = +(hbar^2/8m) int (grad rho)^2/rho.
/// `rhs` keeps the negative sign of the quoted identity; `corrected_rhs` is the
/// integration-by-parts value.
inline FisherQIdentity fisher_q_identity(const DensityGrid& rho, double hbar, double mass) {
  require(!rho.grid().periodic(), ErrorKind::BoundaryPolicy,
          "the identity integrates by parts and needs vanishing boundary terms; periodic grids are rejected");
  const QuantumPotential q = quantum_potential(rho, hbar, mass);
  FisherQIdentity r;
  r.masked = q.masked;
  ScalarField t(rho.grid());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = q.keep[i] ? rho.field()[i] * q.Q[i] : 0.0;
  r.lhs = integrate(t);
  const int n = rho.grid().dims();
  r.fisher_unhalved = fisher_integral(rho.field(), RMatrix::Identity(n, n), kRhoMaskThreshold);
  const double c = hbar * hbar / (8.0 * mass);
  r.rhs = -c * r.fisher_unhalved;
  r.corrected_rhs = c * r.fisher_unhalved;
  auto gap = [](double a, double b) { return std::abs(b) > 0.0 ? std::abs(a - b) / std::abs(b) : std::abs(a - b); };
  r.relative_gap = gap(r.lhs, r.rhs);
  r.corrected_gap = gap(r.lhs, r.corrected_rhs);
  return r;
}

// ---------------------------------------------------------------------------
// Lagrangian with the information term

struct LagrangianReport {
  double classical = 0.0;    // int rho (S_t + |grad S|^2 / 2m + V)
  double information = 0.0;  // lambda * I, I = (1/2m) int (grad rho)^2 / rho
  double total = 0.0;
  double lambda = 0.0;
  double c = 0.0;                  // lambda read as the constant of the momentum-fluctuation term
  double hbar_from_c = 0.0;        // 2 sqrt(c)
  double rho_variation_gap = 0.0;  // d/de L(rho + e eta) vs int eta * hj_residual
  double s_variation_gap = 0.0;    // d/de L(S + e eta) vs -int eta * continuity_residual
};

namespace detail {

inline double lagrangian_value(const ScalarField& rho, const ScalarField& S, const ScalarField& S_t,
                               const ScalarField& V, double mass, double lambda, const std::vector<char>& keep,
                               double* classical_out = nullptr, double* info_out = nullptr) {
  const Grid& g = rho.grid();
  ScalarField cl(g), info(g);
  for (int a = 0; a < g.dims(); ++a) {
    const ScalarField dS = derivative(S, a);
    const ScalarField dr = derivative(rho, a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!keep[i]) continue;
      cl[i] += rho[i] * dS[i] * dS[i] / (2.0 * mass);
      info[i] += dr[i] * dr[i] / rho[i] / (2.0 * mass);
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (keep[i]) cl[i] += rho[i] * (S_t[i] + V[i]);
  }
  const double c = integrate_masked(cl, keep);
  const double inf = lambda * integrate_masked(info, keep);
  if (classical_out) *classical_out = c;
  if (info_out) *info_out = inf;
  return c + inf;
}

}  // namespace detail

/// L = int rho {S_t + (1/2m)[|grad S|^2 + lambda |grad rho|^2 / rho^2] + V}. The
/// first variations along a smooth bump are compared with the HJ and continuity
/// residuals.
inline LagrangianReport quantum_lagrangian(const MadelungPair& m, const ScalarField& V, const TimeDerivatives& td,
                                           std::optional<double> lambda = std::nullopt) {
  detail::check_time_derivatives(m, td);
  const Grid& g = m.rho.grid();
  LagrangianReport r;
  r.lambda = lambda.value_or(schrodinger_lambda(m.hbar));
  r.c = r.lambda;
  r.hbar_from_c = 2.0 * std::sqrt(r.c);
  const std::vector<char> keep = m.keep;
  r.total = detail::lagrangian_value(m.rho, m.S, td.S_t, V, m.mass, r.lambda, keep, &r.classical, &r.information);

  // Smooth bump at the density peak, narrow enough to vanish at the support edge.
  std::size_t peak = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (m.rho[i] > m.rho[peak]) peak = i;
  }
  const auto x0 = g.position(peak);
  double width = 1e300;
  for (int a = 0; a < g.dims(); ++a) width = std::min(width, g.spacing()[a] * g.shape()[a] / 20.0);
  const ScalarField eta = ScalarField::sample(g, [&](auto x) {
    double d2 = 0.0;
    for (int a = 0; a < g.dims(); ++a) d2 += (x[a] - x0[a]) * (x[a] - x0[a]);
    return std::exp(-d2 / (2.0 * width * width));
  });

  const ResidualField hj = hj_residual(m, V, td, r.lambda);
  const ResidualField cont = continuity_residual(m, td);
  const double eps = 1e-6;

  ScalarField rp(m.rho), rm(m.rho);
  for (std::size_t i = 0; i < g.size(); ++i) {
    rp[i] += eps * eta[i] * m.rho[i];
    rm[i] -= eps * eta[i] * m.rho[i];
  }
  // Perturbations proportional to rho keep the variation inside the support.
  const double dL_rho = (detail::lagrangian_value(rp, m.S, td.S_t, V, m.mass, r.lambda, keep) -
                         detail::lagrangian_value(rm, m.S, td.S_t, V, m.mass, r.lambda, keep)) /
                        (2.0 * eps);
  ScalarField w_hj(g);
  for (std::size_t i = 0; i < g.size(); ++i) w_hj[i] = keep[i] ? eta[i] * m.rho[i] * hj.values[i] : 0.0;
  const double pred_rho = integrate_masked(w_hj, hj.keep);
  ScalarField mag(g);
  const QuantumPotential q = quantum_potential(m.rho, m.hbar, m.mass);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (keep[i]) mag[i] = eta[i] * m.rho[i] * (std::abs(td.S_t[i]) + std::abs(V[i]) + std::abs(q.Q[i]));
  }
  const double scale_rho = std::max({std::abs(dL_rho), std::abs(pred_rho), integrate_masked(mag, keep), 1e-300});
  r.rho_variation_gap = std::abs(dL_rho - pred_rho) / scale_rho;

  ScalarField sp(m.S), sm(m.S);
  for (std::size_t i = 0; i < g.size(); ++i) {
    sp[i] += eps * eta[i];
    sm[i] -= eps * eta[i];
  }
  // The S_t term integrates by parts in time to -int eta rho_t.
  ScalarField t_term(g);
  for (std::size_t i = 0; i < g.size(); ++i) t_term[i] = keep[i] ? eta[i] * td.rho_t[i] : 0.0;
  const double dL_S = (detail::lagrangian_value(m.rho, sp, td.S_t, V, m.mass, r.lambda, keep) -
                       detail::lagrangian_value(m.rho, sm, td.S_t, V, m.mass, r.lambda, keep)) /
                          (2.0 * eps) -
                      integrate_masked(t_term, keep);
  ScalarField w_c(g);
  for (std::size_t i = 0; i < g.size(); ++i) w_c[i] = cont.keep[i] ? -eta[i] * cont.values[i] : 0.0;
  const double pred_S = integrate_masked(w_c, cont.keep);
  ScalarField smag(g);
  for (int a = 0; a < g.dims(); ++a) {
    const ScalarField de = derivative(eta, a);
    const ScalarField dS = derivative(m.S, a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (keep[i]) smag[i] += std::abs(de[i] * m.rho[i] * dS[i]) / m.mass;
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i) smag[i] += std::abs(t_term[i]);
  const double scale_S = std::max({std::abs(dL_S), std::abs(pred_S), integrate_masked(smag, keep), 1e-300});
  r.s_variation_gap = std::abs(dL_S - pred_S) / scale_S;
  return r;
}

}  // namespace qgeo
