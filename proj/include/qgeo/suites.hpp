#pragma once

// Verification suites. Every check has a registered name, a one-line identity
// and a default tolerance; the worst trial of each check becomes a record of the
// run report.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "qgeo/experiments.hpp"
#include "qgeo/fisher.hpp"
#include "qgeo/kahler.hpp"
#include "qgeo/madelung.hpp"
#include "qgeo/observables.hpp"
#include "qgeo/report.hpp"
#include "qgeo/weyl.hpp"

namespace qgeo::suites {

struct CheckDef {
  std::string name;
  std::string identity;
  double tolerance;
};

// clang-format off
inline const std::vector<CheckDef>& registry() {
  static const std::vector<CheckDef> defs{
    // kahler
    {"kahler.hermitian_symmetry", "<phi|psi> = conj <psi|phi>", 1e-14},
    {"kahler.chart_roundtrip", "to_chart(from_chart(p), k) = p", 1e-12},
    {"kahler.chart_consistency", "representatives from two charts differ by a phase: |<a|b>| = 1", 1e-10},
    {"kahler.ray_phase_invariance", "<A> and geodesic distance unchanged by psi -> e^{i theta} psi", 1e-10},
    {"kahler.positive_definite", "g(v, v) > 0 for v != 0", 0.5},
    {"kahler.g_symmetry", "g(v, w) = g(w, v)", 1e-12},
    {"kahler.omega_antisymmetry", "omega(v, w) = -omega(w, v)", 1e-12},
    {"kahler.compatibility", "g(v, w) = omega(v, Jw) and omega(v, w) = g(Jv, w)", 1e-12},
    {"kahler.j_isometry", "g(Jv, Jw) = g(v, w)", 1e-12},
    {"kahler.j_squared", "J^2 = -1", 1e-15},
    {"kahler.component_form", "2 nu Re/(-Im) of g_mn v^m conj(w^n) reproduce g and omega", 1e-12},
    {"kahler.potential_levi_form", "g and omega from the Levi form of log(1 + |z|^2), central differences h = 1e-4", 1e-6},
    {"kahler.geodesic_chart_independence", "geodesic distance is the same in every chart", 1e-10},
    {"kahler.unitary_invariance", "d(U psi, U phi) = d(psi, phi)", 1e-12},
    {"kahler.nijenhuis", "N(X, Y) = 0 for the chart complex structure", 1e-8},
    {"kahler.transition_holomorphic", "Cauchy-Riemann residual of the chart transition", 1e-6},
    // brackets
    {"brackets.poisson_geometric", "<(1/i nu)[A,B]> = omega(X_A, X_B)", 1e-9},
    {"brackets.riemann_geometric", "(1/nu)<AB+BA> - (2/nu)<A><B> = g(Y_A, Y_B)", 1e-9},
    {"brackets.kahler_covariance", "<f,h> = (2/nu)(<AB> - <A><B>)", 1e-10},
    {"brackets.kahler_real_imag", "<f,h> = ((f,h)) + i {f,h}", 1e-10},
    {"brackets.circ_jordan", "f o h = <(AB+BA)/2>", 1e-10},
    {"brackets.star_operator_product", "f * h = <AB>", 1e-10},
    {"brackets.star_circ_poisson", "f * h = f o h + (i nu/2){f,h}", 1e-10},
    {"brackets.circ_symmetrized_star", "f o h = Re (f*h + h*f)/2", 1e-10},
    {"brackets.poisson_star_commutator", "{f,h} = (f*h - h*f)/(i nu)", 1e-10},
    {"brackets.jacobi", "{A,{B,C}} + {B,{C,A}} + {C,{A,B}} = 0", 1e-8},
    {"brackets.riemann_dispersion", "((A,A)) = (2/nu) Delta^2 A", 1e-10},
    {"brackets.hamiltonian_field", "omega(X_A, eta) = d<A>(eta) and g(Y_A, eta) = d<A>(eta)", 1e-10},
    {"brackets.differential_mean_fd", "d<A>(eta) against a fourth-order central difference, h = 1e-3", 1e-8},
    {"brackets.flow_unitarity", "|exp(-i t A / nu) x| = |x|", 1e-11},
    {"brackets.flow_isometry", "g and omega preserved by the pushforward of the flow, |t| <= 10", 1e-8},
    {"brackets.flow_generator", "d/dt <B>(flow(A, t, x)) at t = 0 equals {B, A}", 1e-7},
    {"brackets.uncertainty_slack", "Delta^2 A Delta^2 B >= ((hbar/2){A,B})^2 + cov(A,B)^2", 1e-10},
    {"brackets.uncertainty_equality", "equality of the uncertainty relation at B = A", 1e-9},
    {"brackets.covariance_geometric", "<(AB+BA)/2> - <A><B> = (hbar/2)((A,B))", 1e-10},
    {"brackets.kahler_norm", "sup over rays of conj(f) * f equals the largest singular value squared", 1e-8},
    {"brackets.stationary_eigenvector", "eigenvectors of A are critical points of <A>", 1e-10},
    // fisher
    {"fisher.fs_decomposition_exact", "|d psi_perp|^2 = (1/4) sum dp^2/p + phase variance", 1e-12},
    {"fisher.fs_epsilon_order", "relative error of eps^2 ds^2 against sin^2 of the FS angle extrapolates to 0 over eps in {1e-2, 1e-3, 1e-4}", 1e-2},
    {"fisher.fs_overlap", "1 - |<psi + eps dpsi|psi>|^2 (normalized) against eps^2 ds^2 at eps = 1e-3", 1e-4},
    {"fisher.phase_variance_nonnegative", "sum p dphi^2 - (sum p dphi)^2 >= 0", 0.0},
    {"fisher.metric_bilinearity", "Q(a+b) + Q(a-b) = 2Q(a) + 2Q(b) for the discrete Fisher form", 1e-12},
    {"fisher.bhattacharyya_limit", "statistical distance^2 -> (1/4) eps^2 sum dp^2/p", 1e-3},
    {"fisher.triangle_inequality", "d(p1, p3) <= d(p1, p2) + d(p2, p3)", 1e-14},
    {"fisher.permutation_invariance", "d(sigma p1, sigma p2) = d(p1, p2)", 1e-14},
    {"fisher.gaussian_translation_fisher", "F_X = 1/sigma^2 for a Gaussian", 1e-8},
    {"fisher.fisher_grid_order", "F_X converges at order >= 2 under spacing halving", 0.0},
    {"fisher.cramer_rao", "Var(X) F_X >= 1", 1e-10},
    {"fisher.cramer_rao_gaussian", "Var(X) F_X = 1 for a Gaussian", 1e-8},
    {"fisher.rms_exceeds_fisher_length", "Delta X >= delta X", 1e-12},
    {"fisher.location_scale_matrix", "halved Fisher matrix of N(mu, s^2) is diag(1/2s^2, 1/s^2)", 1e-6},
    {"fisher.cross_entropy_gaussian", "J(P(y+dy):P(y)) = I dy^2 for a Gaussian", 1e-6},
    {"fisher.cross_entropy_cubic", "J_exact - J_quadratic = O(dy^3)", 0.5},
    {"fisher.functional_vs_binned", "F_X against sum dp^2/p of 512 bins", 2e-2},
    {"fisher.exact_uncertainty_product", "delta X * Delta p_nc = hbar/2", 1e-6},
    {"fisher.momentum_mean", "<p> = <p_cl>", 1e-8},
    {"fisher.uncertainty_chain", "Delta X Delta p >= delta X Delta p >= delta X Delta p_nc", 1e-12},
    // madelung
    {"madelung.quantum_potential_gaussian", "Q of a Gaussian against its closed form, r < 4", 1e-6},
    {"madelung.expanded_form", "Q = (hbar^2/8m)[(rho'/rho)^2 - 2 rho''/rho]", 1e-6},
    {"madelung.scale_invariance", "Q(c rho) = Q(rho)", 1e-12},
    {"madelung.split_join_roundtrip", "join(split(psi)) = psi off the mask", 1e-10},
    {"madelung.plane_wave_phase", "S increments by hbar k h per node (mod 2 pi hbar) for a plane wave", 1e-10},
    {"madelung.hj_order_free", "HJ residual order under (h, dt) halving, free packet", 0.05},
    {"madelung.continuity_order_free", "continuity residual order under (h, dt) halving, free packet", 0.05},
    {"madelung.hj_final_free", "HJ residual at the finest level, free packet", 1e-5},
    {"madelung.continuity_final_free", "continuity residual at the finest level, free packet", 1e-5},
    {"madelung.hj_order_oscillator", "HJ residual order under (h, dt) halving, coherent state", 0.05},
    {"madelung.continuity_order_oscillator", "continuity residual order under (h, dt) halving, coherent state", 0.05},
    {"madelung.hj_final_oscillator", "HJ residual at the finest level, coherent state", 1e-5},
    {"madelung.continuity_final_oscillator", "continuity residual at the finest level, coherent state", 1e-5},
    {"madelung.hj_ground_state", "stationary oscillator: S_t = -E solves the HJ equation", 1e-6},
    {"madelung.norm_conservation", "norm drift over 1000 split steps", 1e-10},
    {"madelung.energy_conservation", "<H> drift over 1000 split steps, V = 0", 1e-8},
    {"madelung.free_packet_width", "sigma(t) = sigma0 sqrt(1 + (hbar t / 2 m sigma0^2)^2)", 1e-8},
    {"madelung.ehrenfest", "<x>(t) = x0 cos(omega t) for a coherent state", 1e-5},
    {"madelung.scheme_cross_check", "split-step and Crank-Nicolson agree in L2", 1e-4},
    {"madelung.time_order", "split-step error order in dt", 0.1},
    {"madelung.entropy_gaussian", "entropy of a Gaussian = (1/2) log(2 pi e sigma^2)", 1e-10},
    {"madelung.entropy_rate_diffusion", "dS/dt = D int (grad rho)^2/rho at mid evolution", 1e-2},
    {"madelung.entropy_rate_sign", "dS/dt >= 0 throughout free spreading", 0.0},
    {"madelung.osmotic_gaussian", "Q = -m (u^2/2 + D u'), u = D (log rho)', Gaussian", 1e-6},
    {"madelung.osmotic_mixture", "Q = -m (u^2/2 + D u'), random mixture", 1e-5},
    {"madelung.fisher_q_quoted", "int rho Q = -(hbar^2/8m) int (grad rho)^2/rho", 1e-6},
    {"madelung.fisher_q_by_parts", "int rho Q = +(hbar^2/8m) int (grad rho)^2/rho", 1e-6},
    {"madelung.fisher_q_additivity", "int rho Q is additive over well separated components", 1e-4},
    {"madelung.lagrangian_ground_state", "L_CL = -hbar omega/4, lambda I = hbar omega/4, L = 0", 1e-6},
    {"madelung.lagrangian_hbar", "hbar = 2 sqrt(c) with c the information coefficient", 1e-14},
    {"madelung.lagrangian_rho_variation", "dL/drho reproduces the HJ residual", 1e-4},
    {"madelung.lagrangian_s_variation", "dL/dS reproduces the continuity residual", 1e-4},
    // weyl
    {"weyl.connection_symmetry", "Gamma^i_kl = Gamma^i_lk", 0.0},
    {"weyl.phi_zero_reduction", "phi = 0: connection is -Christoffel and R equals the Riemannian scalar", 0.0},
    {"weyl.sphere_scalar", "round sphere of radius a: R = 2/a^2", 1e-5},
    {"weyl.flat_polar", "polar coordinates of the plane: R = 0", 1e-6},
    {"weyl.constant_gauge_scalar", "flat metric, constant phi: R = (n-1)(n-2) phi.phi", 1e-12},
    {"weyl.decomposition_gaussian", "R = R_riem + (n-1)((n-2) phi.phi - 2 div phi), Gaussian gauge", 1e-5},
    {"weyl.decomposition_curved", "scalar decomposition on a curved metric with a smooth gauge", 1e-5},
    {"weyl.commutator", "A^i_{;k;l} - A^i_{;l;k} = R^i_{mkl} A^m", 1e-5},
    {"weyl.antisymmetry", "R^i_{mkl} = -R^i_{mlk}", 1e-12},
    {"weyl.bianchi", "R^i_{mkl} + R^i_{klm} + R^i_{lmk} = 0", 1e-6},
    {"weyl.non_metricity", "g_{ik;l} = 2 g_ik phi_l", 1e-8},
    {"weyl.gauge_gaussian", "phi = -(1/(n-2)) grad log rho for a Gaussian", 1e-8},
    {"weyl.q_curvature_gaussian", "Q = -gamma (hbar^2/m) R, Gaussian, n = 3", 1e-6},
    {"weyl.q_curvature_mixture", "Q = -gamma (hbar^2/m) R, random mixture, n = 3", 1e-6},
    {"weyl.q_curvature_n4", "Q = -gamma (hbar^2/m) R, Gaussian, n = 4", 1e-6},
    {"weyl.q_order", "Q converges at fourth order in 3-D", 0.3},
    {"weyl.closed_form_vs_chain", "R from the closed form in rho equals the tensor-chain R with the density gauge", 1e-5},
    {"weyl.fisher_curvature_chain", "I / int rho R = 8 gamma", 1e-5},
    {"weyl.hj_weyl_ground_state", "S_t + |grad S|^2/2m + V - gamma (hbar^2/m) R = 0, oscillator ground state", 1e-3},
  };
  return defs;
}
// clang-format on

inline const CheckDef* find_check(const std::string& name) {
  for (const auto& d : registry()) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

/// Rejects overrides for names that are not registered.
inline void validate_tolerances(const SuiteConfig& cfg) {
  for (const auto& [name, tol] : cfg.tolerances) {
    require(find_check(name) != nullptr, ErrorKind::InvalidArgument, "unknown check '" + name + "' in tolerances");
  }
}

/// Collects the trials of every check in a suite and flushes them, in
/// registration order, into a report.
class SuiteContext {
 public:
  SuiteContext(const SuiteConfig& cfg, RunReport& report) : cfg_(cfg), report_(report) {}

  const SuiteConfig& config() const { return cfg_; }

  double tolerance(const std::string& name) const {
    auto it = cfg_.tolerances.find(name);
    if (it != cfg_.tolerances.end()) return it->second;
    const CheckDef* d = find_check(name);
    require(d != nullptr, ErrorKind::InvalidArgument, "unregistered check '" + name + "'");
    return d->tolerance;
  }

  void add(const std::string& name, double lhs, double rhs, double residual) {
    auto it = acc_.find(name);
    if (it == acc_.end()) {
      const CheckDef* d = find_check(name);
      require(d != nullptr, ErrorKind::InvalidArgument, "unregistered check '" + name + "'");
      it = acc_.emplace(name, CheckAccumulator(name, d->identity, tolerance(name))).first;
    }
    it->second.add(lhs, rhs, residual);
  }

  /// Residual |lhs - rhs| / max(1, |lhs|, |rhs|).
  void add_relative(const std::string& name, double lhs, double rhs) {
    add(name, lhs, rhs, relative_residual(lhs, rhs));
  }

  /// One-sided check lhs >= rhs; residual is the violation.
  void add_at_least(const std::string& name, double lhs, double rhs) {
    add(name, lhs, rhs, std::max(0.0, rhs - lhs));
  }

  void finding(const std::string& key, ordered_json value) { report_.findings[key] = std::move(value); }

  /// Appends the records in registry order.
  void flush() {
    for (const auto& d : registry()) {
      auto it = acc_.find(d.name);
      if (it != acc_.end()) report_.checks.push_back(it->second.finish());
    }
    acc_.clear();
  }

  /// Independent generator per (suite, trial).
  std::mt19937_64 rng(std::uint64_t stream, std::uint64_t trial) const {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(trial)};
    return std::mt19937_64(seq);
  }

 private:
  const SuiteConfig& cfg_;
  RunReport& report_;
  std::map<std::string, CheckAccumulator> acc_;
};

namespace detail {

inline double field_max_rel_diff(const ScalarField& a, const ScalarField& b, const std::vector<char>& keep) {
  const double scale = std::max({max_abs(a, keep), max_abs(b, keep), 1e-300});
  return max_abs_diff(a, b, keep) / scale;
}

inline std::vector<char> all_nodes(const Grid& g) { return std::vector<char>(g.size(), 1); }

inline double l2_diff(const ComplexField& a, const ComplexField& b) {
  ScalarField t(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) t[i] = std::norm(a[i] - b[i]);
  return std::sqrt(integrate(t));
}

inline double mean_position(const ComplexField& psi) {
  ScalarField t(psi.grid());
  for (std::size_t i = 0; i < psi.size(); ++i) t[i] = psi.grid().position(i)[0] * std::norm(psi[i]);
  return integrate(t);
}

/// Fourth-order central difference of f at 0.
template <class F>
double central4(F&& f, double h) {
  return (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h);
}

inline ordered_json series(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(x);
  return a;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline void run_kahler(SuiteContext& ctx) {
  const int N = ctx.config().dim;
  const double nu = ctx.config().hbar;
  for (int t = 0; t < ctx.config().trials; ++t) {
    auto rng = ctx.rng(1, t);
    const StateVector x = random_state(N, rng);
    const StateVector y = random_state(N, rng);
    const ChartPoint p = to_chart(x);
    const TangentVector v(p, random_complex_vector(N - 1, rng));
    const TangentVector w(p, random_complex_vector(N - 1, rng));

    const cplx xy = inner_product(x, y);
    const cplx yx = inner_product(y, x);
    ctx.add("kahler.hermitian_symmetry", std::abs(xy), std::abs(yx), std::abs(xy - std::conj(yx)));

    std::uniform_int_distribution<int> pick(1, N);
    const int j = pick(rng);
    int k = pick(rng);
    if (k == j) k = j % N + 1;
    const ChartPoint pj = to_chart(x, j);
    const ChartPoint back = to_chart(from_chart(pj), j);
    ctx.add("kahler.chart_roundtrip", 0.0, 0.0, (back.coords - pj.coords).cwiseAbs().maxCoeff());
    const double overlap = std::abs(inner_product(from_chart(pj), from_chart(to_chart(x, k))));
    ctx.add_relative("kahler.chart_consistency", overlap, 1.0);

    const HermitianOperator A = random_hermitian(N, rng);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    const StateVector xr = x.scaled(std::polar(1.0, angle(rng)));
    const double phase_resid = std::max(std::abs(mean_value(A, xr) - mean_value(A, x)),
                                        std::abs(geodesic_distance(xr, y) - geodesic_distance(x, y)));
    ctx.add("kahler.ray_phase_invariance", mean_value(A, xr), mean_value(A, x), phase_resid);

    const double gvv = fs_metric(v, v, nu);
    ctx.add("kahler.positive_definite", gvv, 0.0, gvv > 0.0 ? 0.0 : 1.0);
    ctx.add_relative("kahler.g_symmetry", fs_metric(v, w, nu), fs_metric(w, v, nu));
    ctx.add_relative("kahler.omega_antisymmetry", symplectic_form(v, w, nu), -symplectic_form(w, v, nu));
    const double g = fs_metric(v, w, nu);
    const double om = symplectic_form(v, w, nu);
    const double c1 = relative_residual(g, symplectic_form(v, apply_J(w), nu));
    const double c2 = relative_residual(om, fs_metric(apply_J(v), w, nu));
    ctx.add("kahler.compatibility", g, symplectic_form(v, apply_J(w), nu), std::max(c1, c2));
    ctx.add_relative("kahler.j_isometry", fs_metric(apply_J(v), apply_J(w), nu), g);
    const TangentVector jjv = apply_J(apply_J(v));
    ctx.add("kahler.j_squared", 0.0, 0.0, (jjv.components + v.components).cwiseAbs().maxCoeff());

    const cplx comp = fs_component_contraction(v, w);
    ctx.add("kahler.component_form", 2.0 * nu * comp.real(), g,
            std::max(relative_residual(2.0 * nu * comp.real(), g), relative_residual(-2.0 * nu * comp.imag(), om)));

    const PotentialCheck pc = potential_hessian_check(v, w, nu);
    ctx.add("kahler.potential_levi_form", pc.g_fd, pc.g,
            pc.residual / std::max({1.0, std::abs(pc.g), std::abs(pc.omega)}));

    const double dj = geodesic_distance(to_chart(x, j), to_chart(y, j));
    const double dk = geodesic_distance(to_chart(x, k), to_chart(y, k));
    ctx.add("kahler.geodesic_chart_independence", dj, dk, std::abs(dj - dk));

    const CMatrix U = random_unitary(N, rng);
    const double du = geodesic_distance(StateVector(U * x.amplitudes()), StateVector(U * y.amplitudes()));
    ctx.add("kahler.unitary_invariance", du, geodesic_distance(x, y), std::abs(du - geodesic_distance(x, y)));

    ctx.add("kahler.nijenhuis", nijenhuis_residual(v, w), 0.0, nijenhuis_residual(v, w));
    const double cr = transition_cr_residual(pj, k);
    ctx.add("kahler.transition_holomorphic", cr, 0.0, cr);
  }
}

inline void run_brackets(SuiteContext& ctx) {
  const int N = ctx.config().dim;
  const double nu = ctx.config().hbar;
  const int norm_trials = std::min(ctx.config().trials, 10);
  for (int t = 0; t < ctx.config().trials; ++t) {
    auto rng = ctx.rng(2, t);
    const HermitianOperator A = random_hermitian(N, rng);
    const HermitianOperator B = random_hermitian(N, rng);
    const HermitianOperator C = random_hermitian(N, rng);
    const StateVector x = random_state(N, rng);
    const ChartPoint p = to_chart(x);

    const BracketReport br = bracket_report(A, B, x, nu);
    const double scale = std::max({1.0, std::abs(br.poisson), std::abs(br.riemann)});
    for (const auto& [key, value] : br.residuals) {
      ctx.add("brackets." + key, key == "riemann_geometric" ? br.riemann : br.poisson, 0.0, value / scale);
    }
    const double jac = jacobi_residual(A, B, C, x, nu);
    ctx.add("brackets.jacobi", jac, 0.0, jac);
    ctx.add_relative("brackets.riemann_dispersion", riemann_bracket(A, A, x, nu), 2.0 / nu * dispersion2(A, x));

    const TangentVector eta(p, random_complex_vector(N - 1, rng));
    const double dA = differential_mean(A, eta);
    const double via_omega = symplectic_form(hamiltonian_field(A, p, nu), eta, nu);
    const double via_g = fs_metric(gradient_field(A, p, nu), eta, nu);
    ctx.add("brackets.hamiltonian_field", via_omega, dA,
            std::max(relative_residual(via_omega, dA), relative_residual(via_g, dA)));

    const CVector e = random_complex_vector(N, rng);
    auto along = [&](double h) { return mean_value(A, StateVector(x.amplitudes() + h * e)); };
    const double fd = detail::central4(along, 1e-3);
    ctx.add_relative("brackets.differential_mean_fd", differential_mean(A, x, e), fd);

    std::uniform_real_distribution<double> time(-10.0, 10.0);
    const double tt = time(rng);
    const CMatrix U = flow_operator(A, tt, nu);
    ctx.add_relative("brackets.flow_unitarity", (U * x.amplitudes()).norm(), x.norm());
    const TangentVector v(p, random_complex_vector(N - 1, rng));
    const TangentVector w(p, random_complex_vector(N - 1, rng));
    const TangentVector pv = pushforward(U, v);
    const TangentVector pw = pushforward(U, w);
    const double g0 = fs_metric(v, w, nu), g1 = fs_metric(pv, pw, nu);
    const double o0 = symplectic_form(v, w, nu), o1 = symplectic_form(pv, pw, nu);
    ctx.add("brackets.flow_isometry", g1, g0, std::max(relative_residual(g1, g0), relative_residual(o1, o0)));

    const double gen = detail::central4([&](double s) { return mean_value(B, flow(A, s, x, nu)); }, 1e-3);
    ctx.add_relative("brackets.flow_generator", gen, poisson_bracket(B, A, x, nu));

    const UncertaintyReport ur = uncertainty_check(A, B, x, nu);
    ctx.add_at_least("brackets.uncertainty_slack", ur.lhs, ur.rhs);
    const UncertaintyReport eq = uncertainty_check(A, A, x, nu);
    ctx.add_relative("brackets.uncertainty_equality", eq.lhs, eq.rhs);
    ctx.add_relative("brackets.covariance_geometric", ur.covariance, ur.covariance_geometric);

    if (t < norm_trials) {
      const double kn = kahler_norm(A, nu, ctx.config().seed + static_cast<std::uint64_t>(t));
      Eigen::JacobiSVD<CMatrix> svd(A.matrix());
      ctx.add_relative("brackets.kahler_norm", kn, svd.singularValues()(0));

      Eigen::SelfAdjointEigenSolver<CMatrix> es(A.matrix());
      const StateVector ev(es.eigenvectors().col(0));
      ctx.add("brackets.stationary_eigenvector", differential_norm(A, ev), 0.0,
              std::max(differential_norm(A, ev), stationarity_residual(A, ev)));
    }
  }
}

inline void run_fisher(SuiteContext& ctx) {
  const int K = 8;  // outcomes of the discrete checks
  const double hbar = ctx.config().hbar;
  double worst_order = 1e300;
  for (int t = 0; t < ctx.config().trials; ++t) {
    auto rng = ctx.rng(3, t);
    std::exponential_distribution<double> expo(1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto simplex = [&] {
      RVector p(K);
      for (int j = 0; j < K; ++j) p(j) = expo(rng) + 0.05;
      return RVector(p / p.sum());
    };
    const RVector p = simplex();
    RVector n(K), dphi(K);
    for (int j = 0; j < K; ++j) {
      n(j) = normal(rng);
      dphi(j) = normal(rng);
    }
    RVector dp = p.cwiseProduct(n);
    dp -= p * dp.sum();  // sum zero and bounded by p
    dp(K - 1) = -dp.head(K - 1).sum();

    const FsDecomposition d = fs_decomposition(p, dp, dphi);
    RVector phi0(K);
    for (int j = 0; j < K; ++j) phi0(j) = normal(rng);
    const StateVector psi = amplitude_state(p, phi0);
    CVector dpsi(K);
    for (int j = 0; j < K; ++j) {
      dpsi(j) = std::polar(1.0, phi0(j)) * cplx(dp(j) / (2.0 * std::sqrt(p(j))), std::sqrt(p(j)) * dphi(j));
    }
    ctx.add_relative("fisher.fs_decomposition_exact", orthogonal_norm2(psi, dpsi), d.total());
    ctx.add_at_least("fisher.phase_variance_nonnegative", d.phase_variance_part, 0.0);

    // Normalized comparison along the exact curve p + eps dp, phi + eps dphi:
    // rel(eps) = (sin^2 theta - eps^2 ds^2) / (eps^2 ds^2). Fitting
    // c0 + a eps + b eps^2 through the sweep, c0 must vanish.
    auto rel_at = [&](double eps) {
      const StateVector q = amplitude_state(p + eps * dp, phi0 + eps * dphi);
      const cplx ov = inner_product(psi, q);
      const CVector aligned = q.amplitudes() * std::conj(ov) / std::abs(ov);
      const double s = std::sin(2.0 * std::asin(0.5 * (aligned - psi.amplitudes()).norm()));
      return (s * s - eps * eps * d.total()) / (eps * eps * d.total());
    };
    const double e[3] = {1e-2, 1e-3, 1e-4};
    Eigen::Matrix3d V;
    Eigen::Vector3d r;
    for (int i = 0; i < 3; ++i) {
      V.row(i) << 1.0, e[i], e[i] * e[i];
      r(i) = rel_at(e[i]);
    }
    const Eigen::Vector3d coef = V.colPivHouseholderQr().solve(r);
    const double order = std::log10(std::abs(r(1) / r(2)));
    worst_order = std::min(worst_order, order);
    ctx.add("fisher.fs_epsilon_order", coef(0), 0.0, std::abs(coef(0)) / std::max(std::abs(r(0)), 1e-300));
    {
      // First-order ray psi + eps dpsi: the gap is O(eps^2).
      const double eps = 1e-3;
      const StateVector q = StateVector(psi.amplitudes() + eps * dpsi).normalized();
      const double one_minus = 1.0 - std::norm(inner_product(psi, q));
      ctx.add("fisher.fs_overlap", one_minus, eps * eps * d.total(),
              std::abs(one_minus - eps * eps * d.total()) / (eps * eps * d.total()));
    }

    const ProbabilityVector pv(p);
    RVector a = p.cwiseProduct(n), b = p.cwiseProduct(dphi);
    a -= p * a.sum();
    b -= p * b.sum();
    a(K - 1) = -a.head(K - 1).sum();
    b(K - 1) = -b.head(K - 1).sum();
    const double lhs = fisher_metric_discrete(pv, a + b) + fisher_metric_discrete(pv, a - b);
    const double rhs = 2.0 * fisher_metric_discrete(pv, a) + 2.0 * fisher_metric_discrete(pv, b);
    ctx.add("fisher.metric_bilinearity", lhs, rhs, std::abs(lhs - rhs) / std::max(1e-300, std::abs(rhs)));

    const double eps = 1e-4;
    const double sd = statistical_distance(pv, ProbabilityVector(RVector(p + eps * dp)));
    const double quad = 0.25 * eps * eps * fisher_metric_discrete(pv, dp);
    ctx.add("fisher.bhattacharyya_limit", sd * sd, quad, std::abs(sd * sd - quad) / quad);

    const ProbabilityVector p2(simplex()), p3(simplex());
    const double d12 = statistical_distance(pv, p2), d23 = statistical_distance(p2, p3),
                 d13 = statistical_distance(pv, p3);
    ctx.add_at_least("fisher.triangle_inequality", d12 + d23, d13);
    std::vector<int> perm(K);
    for (int j = 0; j < K; ++j) perm[j] = j;
    std::shuffle(perm.begin(), perm.end(), rng);
    RVector q1(K), q2(K);
    for (int j = 0; j < K; ++j) {
      q1(j) = pv(perm[j]);
      q2(j) = p2(perm[j]);
    }
    const double dperm = statistical_distance(ProbabilityVector(q1), ProbabilityVector(q2));
    ctx.add("fisher.permutation_invariance", dperm, d12, std::abs(dperm - d12));
  }
  ctx.finding("fisher.fs_epsilon_worst_pairwise_order", worst_order);

  // Grid checks are deterministic and run once.
  {
    const double sigma = 1.3;
    const Grid g = Grid::centered(1, 801, 12.0, Boundary::Decay);
    const DensityGrid rho(experiments::gaussian_density(g, sigma));
    const TranslationFisher tf = translation_fisher(rho);
    ctx.add_relative("fisher.gaussian_translation_fisher", tf.fisher, 1.0 / (sigma * sigma));
    const CramerRao cr = cramer_rao(rho);
    ctx.add_relative("fisher.cramer_rao_gaussian", cr.product(), 1.0);

    const CrossEntropyExpansion ce = cross_entropy_expansion(rho, {0.1});
    ctx.add("fisher.cross_entropy_gaussian", ce.exact, ce.quadratic, std::abs(ce.exact - ce.quadratic) / ce.quadratic);

    ParametricFamily fam{[&](const std::vector<double>& th) {
                           return DensityGrid(ScalarField::sample(g, [&](auto x) {
                             const double z = (x[0] - th[0]) / th[1];
                             return std::exp(-0.5 * z * z) / (th[1] * std::sqrt(2.0 * kPi));
                           }));
                         },
                         2};
    const RMatrix I = fisher_matrix(fam, {0.3, 1.1});
    RMatrix expect = RMatrix::Zero(2, 2);
    expect(0, 0) = 0.5 / (1.1 * 1.1);
    expect(1, 1) = 1.0 / (1.1 * 1.1);
    ctx.add("fisher.location_scale_matrix", I(0, 0), expect(0, 0), (I - expect).cwiseAbs().maxCoeff());

    std::vector<double> errs;
    for (int nodes : {41, 81, 161}) {
      const Grid gc = Grid::centered(1, nodes, 10.0, Boundary::Decay);
      errs.push_back(std::abs(translation_fisher(DensityGrid(experiments::gaussian_density(gc, 1.0))).fisher - 1.0));
    }
    const double ord = std::min(experiments::observed_order(errs[0], errs[1]), experiments::observed_order(errs[1], errs[2]));
    ctx.add_at_least("fisher.fisher_grid_order", ord, 2.0);
    ctx.finding("fisher.fisher_grid_errors", detail::series(errs));
  }
  for (int t = 0; t < std::min(ctx.config().trials, 20); ++t) {
    auto rng = ctx.rng(4, t);
    const Grid g = Grid::centered(1, 1201, 15.0, Boundary::Decay);
    const ScalarField f = experiments::random_mixture(g, rng, 10.0);
    const DensityGrid rho(f);
    const CramerRao cr = cramer_rao(rho);
    ctx.add_at_least("fisher.cramer_rao", cr.product(), 1.0);
    const double dx = std::sqrt(moments(f).variance);
    ctx.add_at_least("fisher.rms_exceeds_fisher_length", dx, translation_fisher(rho).fisher_length);

    // Cross entropy at two shifts: the remainder must shrink at least like dy^3.
    const CrossEntropyExpansion c1 = cross_entropy_expansion(rho, {0.2});
    const CrossEntropyExpansion c2 = cross_entropy_expansion(rho, {0.1});
    const double ord = experiments::observed_order(std::abs(c1.exact - c1.quadratic), std::abs(c2.exact - c2.quadratic));
    ctx.add("fisher.cross_entropy_cubic", ord, 3.0, std::max(0.0, 3.0 - ord));
  }
  {
    // Location family of a two-component mixture: binned probabilities and
    // their shift derivatives against the continuum functional.
    auto dens = [](double x) {
      return 0.6 * std::exp(-0.5 * (x + 1.0) * (x + 1.0)) / std::sqrt(2.0 * kPi) +
             0.4 * std::exp(-0.5 * (x - 1.5) * (x - 1.5) / 0.49) / std::sqrt(2.0 * kPi * 0.49);
    };
    auto ddens = [](double x) {
      return -0.6 * (x + 1.0) * std::exp(-0.5 * (x + 1.0) * (x + 1.0)) / std::sqrt(2.0 * kPi) -
             0.4 * (x - 1.5) / 0.49 * std::exp(-0.5 * (x - 1.5) * (x - 1.5) / 0.49) / std::sqrt(2.0 * kPi * 0.49);
    };
    const int bins = 512;
    const double lo = -10.0, hi = 10.0, w = (hi - lo) / bins;
    RVector pb(bins), db(bins);
    for (int j = 0; j < bins; ++j) {
      const double c = lo + (j + 0.5) * w;
      pb(j) = dens(c) * w;
      db(j) = ddens(c) * w;
    }
    pb /= pb.sum();
    db.array() -= db.mean();
    const ProbabilityVector pvb(pb, 1e-300);
    const double binned = fisher_metric_discrete(pvb, db);
    const Grid g = Grid::centered(1, 2001, 10.0, Boundary::Decay);
    const DensityGrid rho = DensityGrid::sample(g, [&](auto x) { return dens(x[0]); });
    const double functional = fisher_functional(rho, FisherConvention::Classical);
    ctx.add("fisher.functional_vs_binned", functional, binned, std::abs(functional - binned) / functional);
    ctx.finding("fisher.functional_vs_binned",
                {{"classical_functional", functional},
                 {"halved_functional", fisher_functional(rho)},
                 {"binned_sum_dp2_over_p", binned},
                 {"quarter_binned", 0.25 * binned}});
  }
  {
    const Grid g = Grid::centered(1, 1024, 10.0, Boundary::Decay);
    const ComplexField psi = Wavefield::normalized(experiments::gaussian_packet(g, 1.0, 0.3, 0.7, 0.15), hbar, 1.0).psi;
    const ExactUncertaintyReport eu = exact_uncertainty(psi, hbar);
    ctx.add("fisher.exact_uncertainty_product", eu.product(), 0.5 * hbar, std::abs(eu.product() - 0.5 * hbar) / (0.5 * hbar));
    ctx.add("fisher.momentum_mean", eu.mean_p, eu.mean_p_classical, std::abs(eu.mean_p - eu.mean_p_classical));
    ctx.add("fisher.uncertainty_chain", eu.delta_x * eu.delta_p, eu.fisher_length * eu.delta_p_nonclassical,
            eu.chain_holds(1e-12) ? 0.0 : 1.0);
  }
}

// ---------------------------------------------------------------------------

inline void run_madelung(SuiteContext& ctx) {
  using namespace experiments;
  const double hbar = ctx.config().hbar;
  const double mass = ctx.config().mass;

  {
    const Grid g = Grid::centered(1, 801, 10.0, Boundary::Decay);
    const double err = gaussian_q_error(g, 1.0, 4.0, hbar, mass);
    ctx.add("madelung.quantum_potential_gaussian", err, 0.0, err);
    const ScalarField rho = gaussian_density(g, 1.0);
    const QuantumPotential q1 = quantum_potential(rho, hbar, mass);
    const QuantumPotential q2 = quantum_potential(rho.map([](double v) { return 7.3 * v; }), hbar, mass);
    ctx.add("madelung.scale_invariance", 0.0, 0.0, detail::field_max_rel_diff(q1.Q, q2.Q, q1.keep));
  }
  std::vector<double> metric_ratio, amplitude_ratio;
  for (int t = 0; t < std::min(ctx.config().trials, 10); ++t) {
    auto rng = ctx.rng(5, t);
    const Grid g = Grid::centered(1, 4801, 15.0, Boundary::Decay);
    const ScalarField rho = random_mixture(g, rng, 10.0);
    const ExpandedFormReport er = expanded_form_report(rho, hbar, mass);
    ctx.add("madelung.expanded_form", er.log_derivative_ratio, 1.0, er.log_derivative_gap);
    metric_ratio.push_back(er.metric_form_ratio);
    amplitude_ratio.push_back(er.amplitude_form_ratio);
    const OsmoticReport os = osmotic_checks(rho, hbar, mass);
    ctx.add("madelung.osmotic_mixture", os.fitted_factor, -mass, os.identity_residual);
  }
  ctx.finding("madelung.expanded_form_ratios", {{"metric_form", detail::series(metric_ratio)},
                                                 {"amplitude_form", detail::series(amplitude_ratio)}});
  {
    const Grid g = Grid::centered(1, 2401, 10.0, Boundary::Decay);
    const OsmoticReport os = osmotic_checks(gaussian_density(g, 1.0), hbar, mass);
    ctx.add("madelung.osmotic_gaussian", os.fitted_factor, -mass, os.identity_residual);
  }
  {
    const Grid g = Grid::centered(1, 801, 12.0, Boundary::Decay);
    const ComplexField psi = gaussian_packet(g, 1.1, 0.4, 1.3, 0.2);
    const Wavefield w = Wavefield::normalized(psi, hbar, mass);
    const MadelungPair m = madelung_split(w);
    const ComplexField back = madelung_join_field(m);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (m.keep[i]) err = std::max(err, std::abs(back[i] - w.psi[i]));
    }
    ctx.add("madelung.split_join_roundtrip", err, 0.0, err);

    const Grid gp = Grid::centered(1, 256, 8.0, Boundary::Periodic);
    const double k = 2.0 * kPi * 3.0 / 16.0;
    const ComplexField pw = ComplexField::sample(gp, [&](auto x) { return std::polar(1.0 / 4.0, k * x[0]); });
    const MadelungPair mp = madelung_split(Wavefield(pw, hbar, mass));
    // A periodic plane wave cannot be unwrapped without one 2 pi jump, so
    // compare node-to-node increments modulo 2 pi hbar.
    const double step = hbar * k * gp.spacing()[0];
    double e2 = 0.0;
    for (std::size_t i = 0; i + 1 < gp.size(); ++i) {
      e2 = std::max(e2, std::abs(std::remainder(mp.S[i + 1] - mp.S[i] - step, 2.0 * kPi * hbar)));
    }
    ctx.add("madelung.plane_wave_phase", std::remainder(mp.S[1] - mp.S[0], 2.0 * kPi * hbar), step, e2 / hbar);
  }

  const std::pair<Problem, std::string> problems[] = {{Problem::FreePacket, "free"}, {Problem::CoherentState, "oscillator"}};
  for (const auto& [prob, tag] : problems) {
    const SweepResult s = madelung_sweep(prob, 1024, 0.01, 3, hbar, mass);
    ctx.add("madelung.hj_order_" + tag, s.hj_order, 2.0, std::max(0.0, 2.0 - s.hj_order));
    ctx.add("madelung.continuity_order_" + tag, s.continuity_order, 2.0, std::max(0.0, 2.0 - s.continuity_order));
    ctx.add("madelung.hj_final_" + tag, s.levels.back().hj, 0.0, s.levels.back().hj);
    ctx.add("madelung.continuity_final_" + tag, s.levels.back().continuity, 0.0, s.levels.back().continuity);
    ordered_json lv = ordered_json::array();
    for (const auto& l : s.levels) lv.push_back({{"nodes", l.nodes}, {"dt", l.dt}, {"hj", l.hj}, {"continuity", l.continuity}});
    ctx.finding("madelung.sweep_" + tag, lv);
  }

  {
    // Stationary ground state with exact time derivatives.
    const double omega = 1.0;
    const Grid g = Grid::centered(1, 1601, 10.0, Boundary::Decay);
    const double dt = 1e-3;
    const ScalarField V = harmonic_potential(g, omega, mass);
    const ComplexField psi = oscillator_ground_state(g, omega, 0.0, hbar, mass);
    const Wavefield w = Wavefield::normalized(psi, hbar, mass, V);
    const TimeDerivatives td = madelung_time_derivatives(oscillator_ground_state(g, omega, -dt, hbar, mass),
                                                         oscillator_ground_state(g, omega, dt, hbar, mass), dt, hbar);
    const MadelungPair m = madelung_split(w);
    const double E = 0.5 * hbar * omega;
    const ResidualField hj = hj_residual(m, V, td);
    ctx.add("madelung.hj_ground_state", hj.weighted_norm(m.rho) / E, 0.0, hj.weighted_norm(m.rho) / E);
    const ResidualField quoted = hj_residual(m, V, td, quoted_lambda(hbar));
    ctx.finding("madelung.hj_ground_state_lambda",
                {{"schrodinger_lambda", schrodinger_lambda(hbar)},
                 {"quoted_lambda", quoted_lambda(hbar)},
                 {"relative_residual_schrodinger", hj.weighted_norm(m.rho) / E},
                 {"relative_residual_quoted", quoted.weighted_norm(m.rho) / E}});

    const LagrangianReport lr = quantum_lagrangian(m, V, td);
    const double q = 0.25 * hbar * omega;
    const double lag = std::max({std::abs(lr.classical + q), std::abs(lr.information - q), std::abs(lr.total)}) / q;
    ctx.add("madelung.lagrangian_ground_state", lr.total, 0.0, lag);
    ctx.add_relative("madelung.lagrangian_hbar", lr.hbar_from_c, hbar);
    ctx.add("madelung.lagrangian_rho_variation", lr.rho_variation_gap, 0.0, lr.rho_variation_gap);
    ctx.add("madelung.lagrangian_s_variation", lr.s_variation_gap, 0.0, lr.s_variation_gap);
    const LagrangianReport lq = quantum_lagrangian(m, V, td, quoted_lambda(hbar));
    ctx.finding("madelung.lagrangian_quoted_lambda",
                {{"classical", lq.classical}, {"information", lq.information}, {"total", lq.total},
                 {"hbar_from_c", lq.hbar_from_c}});
  }

  {
    const Grid g = Grid::centered(1, 512, 16.0, Boundary::Periodic);
    const double sigma0 = 1.0;
    EvolutionOptions opt;
    opt.dt = 1e-3;
    opt.steps = 1000;
    opt.snapshot_every = 100;
    const Wavefield w0 = Wavefield::normalized(gaussian_packet(g, sigma0), hbar, mass);
    const EvolutionResult r = evolve_se(w0, opt);
    ctx.add("madelung.norm_conservation", r.max_norm_drift, 0.0, r.max_norm_drift);
    ctx.add("madelung.energy_conservation", r.max_energy_drift, 0.0, r.max_energy_drift);
    const double T = opt.dt * opt.steps;
    const double width = std::sqrt(moments(r.final_state.density()).variance);
    const double exact = sigma0 * std::sqrt(1.0 + std::pow(hbar * T / (2.0 * mass * sigma0 * sigma0), 2));
    ctx.add_relative("madelung.free_packet_width", width, exact);
  }
  {
    const double omega = 1.0;
    const Grid g = Grid::centered(1, 512, 16.0, Boundary::Periodic);
    const ScalarField V = harmonic_potential(g, omega, mass);
    const double s = std::sqrt(hbar / (2.0 * mass * omega));
    const Wavefield w0 = Wavefield::normalized(gaussian_packet(g, s, 1.0), hbar, mass, V);
    auto run = [&](Scheme scheme, double dt) {
      EvolutionOptions opt;
      opt.scheme = scheme;
      opt.dt = dt;
      opt.steps = static_cast<int>(std::lround(1.0 / dt));
      return evolve_se(w0, opt);
    };
    const EvolutionResult fine = run(Scheme::SplitStep, 1e-3);
    const double x1 = detail::mean_position(fine.final_state.psi);
    ctx.add("madelung.ehrenfest", x1, std::cos(omega), std::abs(x1 - std::cos(omega)));
    ctx.finding("madelung.oscillator_energy_drift", fine.max_energy_drift);

    const EvolutionResult cn = run(Scheme::CrankNicolson, 1e-3);
    const double diff = detail::l2_diff(fine.final_state.psi, cn.final_state.psi);
    ctx.add("madelung.scheme_cross_check", diff, 0.0, diff);

    // Error against the closed-form coherent state at dt and dt/2.
    const ComplexField exact = ComplexField::sample(g, [&](auto x) {
      const double xc = std::cos(omega);
      const double pc = -mass * omega * std::sin(omega);
      const double d = x[0] - xc;
      const double phase = pc * x[0] / hbar - 0.5 * omega - 0.5 * (pc * xc) / hbar;
      return std::pow(2.0 * kPi * s * s, -0.25) * std::exp(-d * d / (4.0 * s * s)) * std::polar(1.0, phase);
    });
    const double e1 = detail::l2_diff(run(Scheme::SplitStep, 0.02).final_state.psi, exact);
    const double e2 = detail::l2_diff(run(Scheme::SplitStep, 0.01).final_state.psi, exact);
    const double ord = observed_order(e1, e2);
    ctx.add("madelung.time_order", ord, 2.0, std::max(0.0, 2.0 - ord));
  }

  {
    const Grid g = Grid::centered(1, 1201, 15.0, Boundary::Decay);
    const double sigma = 1.4;
    const double S = entropy(gaussian_density(g, sigma));
    ctx.add_relative("madelung.entropy_gaussian", S, 0.5 * std::log(2.0 * kPi * std::exp(1.0) * sigma * sigma));
    const EntropyProductionRun run = diffusion_entropy_run(2048, 1.0, 4.0, 400, hbar, mass);
    const std::size_t mid = run.rates.size() / 2;
    ctx.add("madelung.entropy_rate_diffusion", run.rates[mid], run.production[mid], run.mid_relative_error);
    ctx.add_at_least("madelung.entropy_rate_sign", run.min_rate, 0.0);
    const EntropyProductionRun sch = schrodinger_entropy_run(2048, 1.0, 4.0, 400, hbar, mass);
    ordered_json f;
    for (std::size_t k : {sch.rates.size() / 8, sch.rates.size() / 2, 7 * sch.rates.size() / 8}) {
      f.push_back({{"t", sch.times[k]}, {"rate", sch.rates[k]}, {"production", sch.production[k]}});
    }
    ctx.finding("madelung.entropy_schrodinger_spreading", {{"samples", f}, {"min_rate", sch.min_rate}});
  }

  {
    ordered_json vals = ordered_json::array();
    auto fq = [&](const std::string& label, const ScalarField& f) {
      const FisherQIdentity r = fisher_q_identity(DensityGrid(f), hbar, mass);
      ctx.add("madelung.fisher_q_quoted", r.lhs, r.rhs, r.relative_gap);
      ctx.add("madelung.fisher_q_by_parts", r.lhs, r.corrected_rhs, r.corrected_gap);
      vals.push_back({{"density", label}, {"int_rho_Q", r.lhs}, {"quoted_rhs", r.rhs}, {"by_parts_rhs", r.corrected_rhs}});
      return r;
    };
    const Grid g = Grid::centered(1, 1601, 12.0, Boundary::Decay);
    fq("gaussian_1d", gaussian_density(g, 1.0));
    fq("bump_1d", bump_density(g, 6.0));
    const Grid g3 = Grid::centered(3, 161, 7.0, Boundary::Decay);
    fq("gaussian_3d", gaussian_density(g3, 1.0));
    fq("bump_3d", bump_density(g3, 6.9, 18.0));
    ctx.finding("madelung.int_rho_q", vals);

    // Two far apart Gaussians: the identity integral is additive.
    const Grid gw = Grid::centered(1, 2401, 30.0, Boundary::Decay);
    const ScalarField a = gaussian_density(gw, 1.0, {-12.0});
    const ScalarField b = gaussian_density(gw, 0.8, {12.0});
    const ScalarField sum = zip_with(a, b, [](double u, double v) { return 0.5 * u + 0.5 * v; });
    const double ia = fisher_q_identity(DensityGrid(a), hbar, mass).lhs;
    const double ib = fisher_q_identity(DensityGrid(b), hbar, mass).lhs;
    const double is = fisher_q_identity(DensityGrid(sum), hbar, mass).lhs;
    ctx.add("madelung.fisher_q_additivity", is, 0.5 * (ia + ib), std::abs(is - 0.5 * (ia + ib)) / std::abs(is));
  }
}

// ---------------------------------------------------------------------------

namespace detail {

inline TensorField sampled_metric(const Grid& g, const std::function<RMatrix(const std::array<double, kMaxGridDims>&)>& f) {
  const int n = g.dims();
  TensorField m(g, {Variance::Lower, Variance::Lower});
  for (std::size_t i = 0; i < g.size(); ++i) {
    const RMatrix v = f(g.position(i));
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) m({a, b})[i] = v(a, b);
    }
  }
  return m;
}

inline TensorField sampled_covector(const Grid& g, const std::function<double(int, const std::array<double, kMaxGridDims>&)>& f) {
  TensorField c(g, {Variance::Lower});
  for (int a = 0; a < g.dims(); ++a) {
    for (std::size_t i = 0; i < g.size(); ++i) c({a})[i] = f(a, g.position(i));
  }
  return c;
}

/// Smooth random metric and gauge on a 2-D patch.
inline WeylManifold random_manifold(std::mt19937_64& rng, int nodes) {
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const double a = u(rng), b = u(rng), c = u(rng), d = u(rng), e = u(rng), f = u(rng);
  const Grid g = Grid::centered(2, nodes, 1.0, Boundary::Decay);
  TensorField m = sampled_metric(g, [&](const auto& x) {
    RMatrix v(2, 2);
    v(0, 0) = 1.0 + 0.5 * a * std::sin(x[0] + b * x[1]);
    v(1, 1) = 1.2 + 0.5 * c * std::cos(x[1] - d * x[0]);
    v(0, 1) = v(1, 0) = 0.2 * e * std::sin(x[0] * x[1]);
    return v;
  });
  TensorField phi = sampled_covector(g, [&](int k, const auto& x) {
    return k == 0 ? f * std::cos(x[1]) + 0.3 * a * x[0] : 0.4 * b * std::sin(x[0]) - c * x[1] * x[1];
  });
  return WeylManifold(std::move(m), std::move(phi));
}

}  // namespace detail

inline void run_weyl(SuiteContext& ctx) {
  using namespace experiments;
  const double hbar = ctx.config().hbar;
  const double mass = ctx.config().mass;

  {
    // Round sphere patch in (theta, phi), radius a.
    const double a = 2.0;
    const int N = 41;
    const Grid g({N, N}, {0.4 / (N - 1), 0.4 / (N - 1)}, {1.0, 0.0}, Boundary::Decay);
    const WeylManifold M(detail::sampled_metric(g, [&](const auto& x) {
                           RMatrix v = RMatrix::Zero(2, 2);
                           v(0, 0) = a * a;
                           v(1, 1) = a * a * std::sin(x[0]) * std::sin(x[0]);
                           return v;
                         }),
                         TensorField(g, {Variance::Lower}));
    const CurvatureBundle b = curvature(M);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (b.keep[i]) err = std::max(err, std::abs(b.standard_riemannian_scalar[i] - 2.0 / (a * a)));
    }
    ctx.add("weyl.sphere_scalar", b.standard_riemannian_scalar[g.size() / 2], 2.0 / (a * a), err * a * a / 2.0);

    const TensorField G = weyl_connection(M);
    const TensorField C = christoffel(M);
    double red = 0.0;
    for (std::size_t f = 0; f < G.component_count(); ++f) {
      for (std::size_t i = 0; i < g.size(); ++i) red = std::max(red, std::abs(G.component(f)[i] + C.component(f)[i]));
    }
    red = std::max(red, max_abs_diff(b.scalar, b.riemannian_scalar, b.keep));
    ctx.add("weyl.phi_zero_reduction", red, 0.0, red);
  }
  {
    // Polar coordinates on an annulus.
    const int N = 61;
    const Grid g({N, N}, {1.0 / (N - 1), 1.0 / (N - 1)}, {1.0, 0.0}, Boundary::Decay);
    const WeylManifold M(detail::sampled_metric(g, [](const auto& x) {
                           RMatrix v = RMatrix::Zero(2, 2);
                           v(0, 0) = 1.0;
                           v(1, 1) = x[0] * x[0];
                           return v;
                         }),
                         TensorField(g, {Variance::Lower}));
    const CurvatureBundle b = curvature(M);
    const double r = max_abs(b.scalar, b.keep);
    ctx.add("weyl.flat_polar", r, 0.0, r);
  }
  {
    const Grid g = Grid::centered(3, 12, 1.0, Boundary::Decay);
    const double p[3] = {0.3, -0.2, 0.5};
    TensorField phi = detail::sampled_covector(g, [&](int k, const auto&) { return p[k]; });
    const WeylManifold M = WeylManifold::flat(g, RMatrix::Identity(3, 3), phi);
    const CurvatureBundle b = curvature(M);
    const double expect = 2.0 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(b.scalar[i] - expect));
    ctx.add("weyl.constant_gauge_scalar", b.scalar[0], expect, err / expect);
  }
  {
    const Grid g = Grid::centered(3, 33, 7.0, Boundary::Decay);
    const ScalarField rho = gaussian_density(g, 1.0);
    const TensorField phi = gauge_from_density(rho, 3);
    double gerr = 0.0;
    // Away from the edges and from the floored tail of log rho.
    std::vector<char> inner = threshold_mask(rho, 1e-8);
    erode_edges(g, inner, 2);
    for (int a = 0; a < 3; ++a) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (inner[i]) gerr = std::max(gerr, std::abs(phi({a})[i] - g.position(i)[a]));
      }
    }
    ctx.add("weyl.gauge_gaussian", gerr, 0.0, gerr);
    const WeylManifold M = WeylManifold::flat(g, RMatrix::Identity(3, 3), phi);
    const ScalarDecomposition d = scalar_decomposition_check(M);
    ctx.add("weyl.decomposition_gaussian", d.max_residual, 0.0, d.max_residual);

    // Covariant derivative of the metric.
    const TensorField dg = covariant_derivative(M.metric(), weyl_connection(M));
    double nm = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int k = 0; k < 3; ++k) {
        for (int l = 0; l < 3; ++l) {
          const ScalarField& c = dg({i, k, l});
          for (std::size_t node = 0; node < g.size(); ++node) {
            const double expect = 2.0 * M.metric()({i, k})[node] * M.gauge()({l})[node];
            nm = std::max(nm, std::abs(c[node] - expect));
          }
        }
      }
    }
    ctx.add("weyl.non_metricity", nm, 0.0, nm);
  }

  {
    // Connection symmetry, curvature symmetries, commutator and the scalar
    // decomposition on random curved 2-D patches.
    for (int t = 0; t < std::min(ctx.config().trials, 3); ++t) {
      auto rng = ctx.rng(6, t);
      const WeylManifold M = detail::random_manifold(rng, 41);
      const Grid& g = M.grid();
      const TensorField G = weyl_connection(M);
      double sym = 0.0;
      for (int i = 0; i < 2; ++i) {
        for (std::size_t node = 0; node < g.size(); ++node) {
          sym = std::max(sym, std::abs(G({i, 0, 1})[node] - G({i, 1, 0})[node]));
        }
      }
      ctx.add("weyl.connection_symmetry", sym, 0.0, sym);
      const CurvatureBundle b = curvature(M);
      const CurvatureSymmetry cs = curvature_symmetry(b);
      ctx.add("weyl.antisymmetry", cs.antisymmetry, 0.0, cs.antisymmetry);
      ctx.add("weyl.bianchi", cs.bianchi, 0.0, cs.bianchi);
      const ScalarDecomposition d = scalar_decomposition_check(M);
      ctx.add("weyl.decomposition_curved", d.max_residual, 0.0, d.max_residual);

      const TensorField dg = covariant_derivative(M.metric(), G);
      std::vector<char> inner(g.size(), 1);
      erode_edges(g, inner, 2);
      double nm = 0.0;
      for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < 2; ++k) {
          for (int l = 0; l < 2; ++l) {
            for (std::size_t node = 0; node < g.size(); ++node) {
              if (!inner[node]) continue;
              const double expect = 2.0 * M.metric()({i, k})[node] * M.gauge()({l})[node];
              nm = std::max(nm, std::abs(dg({i, k, l})[node] - expect));
            }
          }
        }
      }
      ctx.add("weyl.non_metricity", nm, 0.0, nm);

      TensorField A = detail::sampled_covector(g, [](int k, const auto& x) {
        return k == 0 ? std::sin(x[0] + 0.5 * x[1]) : std::cos(0.7 * x[0] * x[1]) + x[0];
      });
      TensorField Au(g, {Variance::Upper});
      for (int k = 0; k < 2; ++k) Au({k}) = A({k});
      const TensorField DDA = covariant_derivative(covariant_derivative(Au, G), G);
      std::vector<char> keep = b.keep;
      erode_edges(g, keep, 2 * kCurvatureStencilRadius);
      double err = 0.0, scale = 0.0;
      for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < 2; ++k) {
          for (int l = 0; l < 2; ++l) {
            for (std::size_t node = 0; node < g.size(); ++node) {
              if (!keep[node]) continue;
              double rhs = 0.0;
              for (int m = 0; m < 2; ++m) rhs += b.riemann({i, m, k, l})[node] * Au({m})[node];
              const double lhs = DDA({i, k, l})[node] - DDA({i, l, k})[node];
              err = std::max(err, std::abs(lhs - rhs));
              scale = std::max(scale, std::abs(rhs));
            }
          }
        }
      }
      ctx.add("weyl.commutator", err, 0.0, err / std::max(1.0, scale));
    }
  }

  {
    const Grid g = Grid::centered(3, 33, 7.0, Boundary::Decay);
    const QCurvatureIdentity qg = q_curvature_identity(gaussian_density(g, 1.0), hbar, mass, true);
    ctx.add("weyl.q_curvature_gaussian", qg.max_relative_gap, 0.0, qg.max_relative_gap);
    double chain_dev = 0.0;
    {
      // Pointwise comparison of the two scalars on the interior of the support.
      const ScalarField rho = gaussian_density(g, 1.0);
      const WeylScalar closed = weyl_scalar_from_density(rho, qg.gamma);
      const CurvatureBundle b = curvature(WeylManifold::flat(g, RMatrix::Identity(3, 3), gauge_from_density(rho, 3)));
      std::vector<char> keep = erode_mask(g, closed.keep, 2 * kCurvatureStencilRadius);
      chain_dev = detail::field_max_rel_diff(b.scalar, closed.R, keep);
    }
    ctx.add("weyl.closed_form_vs_chain", qg.tensor_chain_ratio, 1.0, chain_dev);
    ctx.finding("weyl.tensor_chain_ratio",
                {{"least_squares_ratio", qg.tensor_chain_ratio},
                 {"gamma", qg.gamma},
                 {"gamma_matching_chain", qg.gamma / qg.tensor_chain_ratio}});
  }
  for (int t = 0; t < std::min(ctx.config().trials, 3); ++t) {
    auto rng = ctx.rng(7, t);
    const Grid g = Grid::centered(3, 41, 9.0, Boundary::Decay);
    const QCurvatureIdentity qm = q_curvature_identity(random_mixture(g, rng, 6.0), hbar, mass, false);
    ctx.add("weyl.q_curvature_mixture", qm.max_relative_gap, 0.0, qm.max_relative_gap);
  }
  {
    const Grid g = Grid::centered(4, 17, 6.5, Boundary::Decay);
    const QCurvatureIdentity q4 = q_curvature_identity(gaussian_density(g, 1.0), hbar, mass, false);
    ctx.add("weyl.q_curvature_n4", q4.max_relative_gap, 0.0, q4.max_relative_gap);
  }
  {
    const double e1 = gaussian_q_error(Grid::centered(3, 49, 7.0, Boundary::Decay), 1.0, 4.0, hbar, mass);
    const double e2 = gaussian_q_error(Grid::centered(3, 97, 7.0, Boundary::Decay), 1.0, 4.0, hbar, mass);
    const double ord = observed_order(e1, e2);
    ctx.add("weyl.q_order", ord, 4.0, std::max(0.0, 4.0 - ord));
  }
  {
    const Grid g = Grid::centered(3, 49, 7.0, Boundary::Decay);
    const FisherCurvatureReport fc = fisher_curvature_report(DensityGrid(gaussian_density(g, 1.0)), hbar, mass);
    ctx.add("weyl.fisher_curvature_chain", fc.fitted_constant, fc.implied_constant, fc.chain_gap);
    ctx.finding("weyl.fisher_curvature",
                {{"int_rho_Q", fc.int_rho_Q},
                 {"fisher_unhalved", fc.fisher_unhalved},
                 {"int_rho_R", fc.int_rho_R},
                 {"fitted_constant", fc.fitted_constant},
                 {"implied_constant", fc.implied_constant},
                 {"gap_to_negated_implied", std::abs(fc.fitted_constant + fc.implied_constant) / fc.implied_constant},
                 {"printed_constant", fc.printed_constant},
                 {"fitted_over_printed", fc.printed_ratio}});
  }
  {
    // Oscillator ground state in 3-D with exact time derivatives.
    const double omega = 0.5;
    const Grid g = Grid::centered(3, 41, 8.0, Boundary::Decay);
    const ScalarField V = harmonic_potential(g, omega, mass);
    const double dt = 1e-3;
    const Wavefield w = Wavefield::normalized(oscillator_ground_state(g, omega, 0.0, hbar, mass), hbar, mass, V);
    const TimeDerivatives td = madelung_time_derivatives(oscillator_ground_state(g, omega, -dt, hbar, mass),
                                                         oscillator_ground_state(g, omega, dt, hbar, mass), dt, hbar);
    const MadelungPair m = madelung_split(w);
    const WeylHJResidual r = hj_weyl_residual(m, V, td);
    const double E = 1.5 * hbar * omega;
    const double res = std::max(r.hj.weighted_norm(m.rho), r.continuity.weighted_norm(m.rho)) / E;
    ctx.add("weyl.hj_weyl_ground_state", res, 0.0, res);
  }
}

// ---------------------------------------------------------------------------

inline const std::vector<std::pair<std::string, std::function<void(SuiteContext&)>>>& suite_table() {
  static const std::vector<std::pair<std::string, std::function<void(SuiteContext&)>>> table{
      {"kahler", run_kahler}, {"brackets", run_brackets}, {"fisher", run_fisher},
      {"madelung", run_madelung}, {"weyl", run_weyl}};
  return table;
}

/// Runs the configured suite (or all of them) into a fresh report.
inline RunReport run_suite(const SuiteConfig& cfg) {
  cfg.validate();
  validate_tolerances(cfg);
  RunReport report;
  report.config = cfg;
  for (const auto& [name, fn] : suite_table()) {
    if (cfg.suite != "all" && cfg.suite != name) continue;
    Stopwatch sw;
    SuiteContext ctx(cfg, report);
    fn(ctx);
    ctx.flush();
    report.timing.emplace_back(name + "_seconds", sw.seconds());
  }
  return report;
}

}  // namespace qgeo::suites
