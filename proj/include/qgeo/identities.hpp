#pragma once

// One JSON report of the density identities for a single input density.

#include <cmath>
#include <string>

#include "qgeo/madelung.hpp"
#include "qgeo/report.hpp"
#include "qgeo/weyl.hpp"

namespace qgeo {

inline constexpr std::size_t kTensorChainMaxNodes = 65 * 65 * 65;

/// Decaying densities go through the boundary-checked identities. Periodic
/// densities have no boundary terms and are integrated directly, which is what
/// makes a uniform density report consistent zeros.
inline ordered_json identity_report(const ScalarField& raw, double hbar, double mass) {
  require(hbar > 0.0 && mass > 0.0, ErrorKind::InvalidArgument, "hbar and mass must be positive");
  for (double v : raw.values()) {
    require(std::isfinite(v), ErrorKind::InvalidArgument, "density has non-finite values");
    require(v >= 0.0, ErrorKind::NonPositiveProbability, "density has negative values");
  }
  const double mass_total = integrate(raw);
  require(mass_total > 0.0, ErrorKind::NonPositiveProbability, "density integrates to zero");
  const ScalarField rho = raw.map([&](double v) { return v / mass_total; });
  const Grid& g = rho.grid();
  const int n = g.dims();

  ordered_json out;
  out["grid"] = {{"dims", n}, {"nodes", g.size()}, {"boundary", to_string(g.boundary())}};
  out["hbar"] = hbar;
  out["mass"] = mass;
  out["input_mass"] = mass_total;
  ordered_json skipped = ordered_json::array();
  const double c = hbar * hbar / (8.0 * mass);

  if (!g.periodic()) {
    const DensityGrid d(rho);  // throws with the named boundary violation
    const FisherQIdentity f = fisher_q_identity(d, hbar, mass);
    out["fisher_q"] = {{"int_rho_Q", f.lhs},
                       {"fisher_unhalved", f.fisher_unhalved},
                       {"quoted_rhs", f.rhs},
                       {"quoted_gap", f.relative_gap},
                       {"by_parts_rhs", f.corrected_rhs},
                       {"by_parts_gap", f.corrected_gap},
                       {"masked_nodes", f.masked}};
    if (n >= 3) {
      // The tensor chain stores every Riemann component; keep it to modest grids.
      const bool chain = n == 3 && g.size() <= kTensorChainMaxNodes;
      const QCurvatureIdentity q = q_curvature_identity(rho, hbar, mass, chain);
      out["q_curvature"] = {{"gamma", q.gamma},
                            {"max_relative_gap", q.max_relative_gap},
                            {"normalized_gap", q.normalized_gap}};
      if (chain) {
        out["q_curvature"]["tensor_chain_ratio"] = q.tensor_chain_ratio;
      } else {
        skipped.push_back("q_curvature.tensor_chain_ratio: grid too large for the rank-4 tensor chain");
      }
      const FisherCurvatureReport fc = fisher_curvature_report(d, hbar, mass);
      out["fisher_curvature"] = {{"int_rho_Q", fc.int_rho_Q},
                                 {"int_rho_R", fc.int_rho_R},
                                 {"fisher_unhalved", fc.fisher_unhalved},
                                 {"fitted_constant", fc.fitted_constant},
                                 {"implied_constant", fc.implied_constant},
                                 {"chain_gap", fc.chain_gap},
                                 {"printed_constant", fc.printed_constant},
                                 {"fitted_over_printed", fc.printed_ratio}};
    }
  } else {
    const QuantumPotential q = quantum_potential(rho, hbar, mass);
    ScalarField rq(g);
    for (std::size_t i = 0; i < g.size(); ++i) rq[i] = q.keep[i] ? rho[i] * q.Q[i] : 0.0;
    const double lhs = integrate(rq);
    const double fisher = fisher_integral(rho, RMatrix::Identity(n, n), kRhoMaskThreshold);
    out["fisher_q"] = {{"int_rho_Q", lhs},
                       {"fisher_unhalved", fisher},
                       {"quoted_rhs", -c * fisher},
                       {"quoted_gap", relative_residual(lhs, -c * fisher)},
                       {"by_parts_rhs", c * fisher},
                       {"by_parts_gap", relative_residual(lhs, c * fisher)},
                       {"masked_nodes", q.masked}};
    if (n >= 3) {
      const double gamma = weyl_gamma(n);
      const WeylScalar R = weyl_scalar_from_density(rho, gamma);
      ScalarField rr(g);
      double gap = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!R.keep[i] || !q.keep[i]) continue;
        rr[i] = rho[i] * R.R[i];
        gap = std::max(gap, relative_residual(q.Q[i], -gamma * hbar * hbar / mass * R.R[i]));
      }
      const double int_rho_R = integrate(rr);
      out["q_curvature"] = {{"gamma", gamma}, {"max_relative_gap", gap}};
      out["fisher_curvature"] = {{"int_rho_Q", lhs}, {"int_rho_R", int_rho_R}, {"fisher_unhalved", fisher}};
      // A flat density has no curvature to fit against.
      if (std::abs(int_rho_R) > 1e-10) {
        out["fisher_curvature"]["fitted_constant"] = fisher / int_rho_R;
      } else {
        skipped.push_back("fisher_curvature.fitted_constant: int rho R vanishes");
      }
    }
  }
  if (n < 3) {
    skipped.push_back("q_curvature: the curvature identity needs at least 3 dimensions");
    skipped.push_back("fisher_curvature: the curvature identity needs at least 3 dimensions");
  }
  out["skipped"] = skipped;
  return out;
}

}  // namespace qgeo
