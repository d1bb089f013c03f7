#pragma once

// Discrete and continuous Fisher information: the statistical distance, the
// Fisher matrix and functional, Cramér-Rao, and the exact-uncertainty split of
// momentum into classical and non-classical parts.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "qgeo/fft.hpp"
#include "qgeo/grid.hpp"

namespace qgeo {

inline constexpr double kProbabilityFloor = 1e-12;

/// Strictly positive probabilities summing to one. Entries below the floor are
/// clamped to it and the vector renormalized; `clamped()` reports how many.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;

  explicit ProbabilityVector(RVector p, double floor = kProbabilityFloor) {
    require(p.size() >= 1, ErrorKind::InvalidArgument, "empty probability vector");
    require(p.allFinite() && (p.array() >= 0.0).all(), ErrorKind::NonPositiveProbability,
            "probabilities must be finite and nonnegative");
    require(std::abs(p.sum() - 1.0) <= 1e-9, ErrorKind::InvalidArgument,
            "probabilities must sum to 1");
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p(i) < floor) {
        p(i) = floor;
        ++clamped_;
      }
    }
    p_ = p / p.sum();
  }

  const RVector& values() const { return p_; }
  Eigen::Index size() const { return p_.size(); }
  int clamped() const { return clamped_; }
  double operator()(Eigen::Index i) const { return p_(i); }

 private:
  RVector p_;
  int clamped_ = 0;
};

/// ds^2 = sum dp_j^2 / p_j for a tangent dp of the simplex.
inline double fisher_metric_discrete(const ProbabilityVector& p, const RVector& dp) {
  require(dp.size() == p.size(), ErrorKind::DimensionMismatch, "perturbation length differs");
  require(std::abs(dp.sum()) <= 1e-12, ErrorKind::UnbalancedPerturbation,
          "perturbation must sum to zero");
  return (dp.array().square() / p.values().array()).sum();
}

/// Bhattacharyya angle arccos(sum sqrt(p1_i p2_i)).
inline double statistical_distance(const ProbabilityVector& p1, const ProbabilityVector& p2) {
  require(p1.size() == p2.size(), ErrorKind::DimensionMismatch, "distributions differ in length");
  const double bc = (p1.values().array() * p2.values().array()).sqrt().sum();
  return std::acos(std::clamp(bc, 0.0, 1.0));
}

/// Prefactor convention for the Fisher matrix and functional. `Halved` keeps the
/// 1/2 in I_jk = (1/2) int (1/P) dP dP; `Classical` drops it.
enum class FisherConvention { Halved, Classical };

inline double convention_factor(FisherConvention c) { return c == FisherConvention::Halved ? 0.5 : 1.0; }

/// Nonnegative density sampled on a grid. On a decay grid every boundary node
/// must be below 1e-10 of the maximum.
class DensityGrid {
 public:
  static constexpr double kDecayTolerance = 1e-10;

  DensityGrid() = default;

  explicit DensityGrid(ScalarField values) : f_(std::move(values)) {
    double mx = 0.0;
    for (double v : f_.values()) {
      require(std::isfinite(v) && v >= 0.0, ErrorKind::InvalidArgument,
              "density values must be finite and nonnegative");
      mx = std::max(mx, v);
    }
    require(mx > 0.0, ErrorKind::InvalidArgument, "density is identically zero");
    if (!f_.grid().periodic()) {
      const double edge = boundary_max();
      require(edge < kDecayTolerance * mx, ErrorKind::BoundaryPolicy,
              "density does not decay at the boundary (edge/max = " + std::to_string(edge / mx) + ")");
    }
  }

  template <typename F>
  static DensityGrid sample(const Grid& g, F&& f) {
    return DensityGrid(ScalarField::sample(g, std::forward<F>(f))).normalized();
  }

  const ScalarField& field() const { return f_; }
  const Grid& grid() const { return f_.grid(); }
  double mass() const { return integrate(f_); }

  DensityGrid normalized() const {
    const double m = mass();
    require(m > 0.0, ErrorKind::InvalidArgument, "density has zero mass");
    DensityGrid out = *this;
    for (double& v : out.f_.values()) v /= m;
    return out;
  }

  double boundary_max() const {
    const Grid& g = f_.grid();
    double edge = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.edge_distance(i) == 0) edge = std::max(edge, f_[i]);
    }
    return edge;
  }

 private:
  ScalarField f_;
};

namespace detail {

inline double positive_floor(const ScalarField& f, double relative) {
  double mx = 0.0;
  for (double v : f.values()) mx = std::max(mx, v);
  return relative * mx;
}

}  // namespace detail

/// Unhalved functional integral of (1/rho) g^{ik} d_i rho d_k rho over nodes
/// where rho exceeds floor_rel * max(rho).
inline double fisher_integral(const ScalarField& rho, const RMatrix& inverse_metric,
                              double floor_rel = 1e-300) {
  const Grid& g = rho.grid();
  const int n = g.dims();
  require(inverse_metric.rows() == n && inverse_metric.cols() == n, ErrorKind::DimensionMismatch,
          "inverse metric must be dims x dims");
  const auto grad = gradient(rho);
  const double floor = detail::positive_floor(rho, floor_rel);
  ScalarField integrand(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (rho[i] <= floor) continue;
    double q = 0.0;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) q += inverse_metric(a, b) * grad[a][i] * grad[b][i];
    }
    integrand[i] = q / rho[i];
  }
  return integrate(integrand);
}

/// I = (g^{ik}/2) int (1/rho) d_i rho d_k rho (Halved) or without the 1/2.
inline double fisher_functional(const DensityGrid& rho, const RMatrix& inverse_metric,
                                FisherConvention convention = FisherConvention::Halved) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (inverse_metric + inverse_metric.transpose()));
  require(es.eigenvalues().minCoeff() >= -1e-12, ErrorKind::InvalidArgument,
          "inverse metric is not positive semi-definite");
  return convention_factor(convention) * fisher_integral(rho.field(), inverse_metric);
}

inline double fisher_functional(const DensityGrid& rho,
                                FisherConvention convention = FisherConvention::Halved) {
  const int n = rho.grid().dims();
  return fisher_functional(rho, RMatrix::Identity(n, n), convention);
}

struct CrossEntropyExpansion {
  double exact = 0.0;
  double quadratic = 0.0;
};

/// Fisher matrix I_jk = (1/2) int (1/P) d_j P d_k P of a density under
/// translations (the location family P(y + theta)).
inline RMatrix translation_fisher_matrix(const DensityGrid& p,
                                         FisherConvention convention = FisherConvention::Halved) {
  const Grid& g = p.grid();
  const int n = g.dims();
  const auto grad = gradient(p.field());
  RMatrix out = RMatrix::Zero(n, n);
  const double floor = detail::positive_floor(p.field(), 1e-300);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      ScalarField integrand(g);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (p.field()[i] > floor) integrand[i] = grad[a][i] * grad[b][i] / p.field()[i];
      }
      out(a, b) = out(b, a) = convention_factor(convention) * integrate(integrand);
    }
  }
  return out;
}

/// Cross entropy J(P(y+dy) : P(y)) and its quadratic Fisher approximation
/// I_jk dy^j dy^k. The shifted density is obtained by Fourier interpolation.
inline CrossEntropyExpansion cross_entropy_expansion(const DensityGrid& p, const std::vector<double>& shift) {
  const Grid& g = p.grid();
  require(static_cast<int>(shift.size()) == g.dims(), ErrorKind::DimensionMismatch,
          "shift must have one entry per axis");
  if (!g.periodic()) {
    for (int a = 0; a < g.dims(); ++a) {
      const double extent = g.spacing()[a] * (g.shape()[a] - 1);
      require(std::abs(shift[a]) <= 0.05 * extent, ErrorKind::BoundaryPolicy,
              "shift too large for a decay boundary");
    }
  }
  CrossEntropyExpansion out;
  const bool zero = std::all_of(shift.begin(), shift.end(), [](double s) { return s == 0.0; });
  if (zero) return out;
  const ScalarField shifted = fourier_shift(p.field(), shift);
  const double floor = detail::positive_floor(p.field(), 1e-14);
  ScalarField integrand(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = shifted[i];
    const double b = p.field()[i];
    if (a > floor && b > floor) integrand[i] = a * std::log(a / b);
  }
  out.exact = integrate(integrand);
  const RMatrix fisher = translation_fisher_matrix(p);
  Eigen::Map<const RVector> dy(shift.data(), static_cast<Eigen::Index>(shift.size()));
  out.quadratic = dy.dot(fisher * dy);
  return out;
}

/// Density family P(x | theta) on a fixed grid.
struct ParametricFamily {
  std::function<DensityGrid(const std::vector<double>&)> evaluator;
  int n_params = 1;
};

/// I_jk(theta) = (1/2) int (1/P) dP/dtheta_j dP/dtheta_k with central differences
/// of step 1e-5 (1 + |theta_j|).
inline RMatrix fisher_matrix(const ParametricFamily& family, const std::vector<double>& theta,
                             FisherConvention convention = FisherConvention::Halved,
                             double relative_step = 1e-5) {
  require(static_cast<int>(theta.size()) == family.n_params, ErrorKind::DimensionMismatch,
          "theta has the wrong number of parameters");
  const DensityGrid center = family.evaluator(theta);
  const Grid& g = center.grid();
  std::vector<ScalarField> dp;
  for (int j = 0; j < family.n_params; ++j) {
    const double h = relative_step * (1.0 + std::abs(theta[j]));
    std::vector<double> plus(theta), minus(theta);
    plus[j] += h;
    minus[j] -= h;
    const DensityGrid fp = family.evaluator(plus);
    const DensityGrid fm = family.evaluator(minus);
    require(fp.grid().same_geometry(g) && fm.grid().same_geometry(g), ErrorKind::NumericalFailure,
            "family changed grids under a parameter step");
    ScalarField d(g);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = (fp.field()[i] - fm.field()[i]) / (2.0 * h);
    dp.push_back(std::move(d));
  }
  const double floor = detail::positive_floor(center.field(), 1e-300);
  RMatrix out(family.n_params, family.n_params);
  for (int j = 0; j < family.n_params; ++j) {
    for (int k = j; k < family.n_params; ++k) {
      ScalarField integrand(g);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (center.field()[i] > floor) integrand[i] = dp[j][i] * dp[k][i] / center.field()[i];
      }
      const double v = convention_factor(convention) * integrate(integrand);
      require(std::isfinite(v), ErrorKind::NumericalFailure, "Fisher quadrature is not finite");
      out(j, k) = out(k, j) = v;
    }
  }
  return out;
}

struct TranslationFisher {
  double fisher = 0.0;         // F_X = int P ((log P)')^2
  double fisher_length = 0.0;  // delta X = F_X^{-1/2}
};

inline TranslationFisher translation_fisher(const DensityGrid& p) {
  require(p.grid().dims() == 1, ErrorKind::InvalidArgument, "translation Fisher needs a 1-D density");
  TranslationFisher out;
  out.fisher = fisher_integral(p.field(), RMatrix::Identity(1, 1));
  require(out.fisher > 0.0 && std::isfinite(out.fisher), ErrorKind::NumericalFailure,
          "degenerate density: Fisher information is not positive");
  out.fisher_length = 1.0 / std::sqrt(out.fisher);
  return out;
}

struct Moments1D {
  double mean = 0.0;
  double variance = 0.0;
};

inline Moments1D moments(const ScalarField& p) {
  require(p.grid().dims() == 1, ErrorKind::InvalidArgument, "moments need a 1-D density");
  const Grid& g = p.grid();
  const double mass = integrate(p);
  const ScalarField xp = ScalarField::sample(g, [](auto x) { return x[0]; });
  ScalarField t(g);
  for (std::size_t i = 0; i < g.size(); ++i) t[i] = xp[i] * p[i];
  const double mean = integrate(t) / mass;
  for (std::size_t i = 0; i < g.size(); ++i) t[i] = (xp[i] - mean) * (xp[i] - mean) * p[i];
  return {mean, integrate(t) / mass};
}

struct CramerRao {
  double variance = 0.0;
  double fisher = 0.0;
  double product() const { return variance * fisher; }  // >= 1
};

inline CramerRao cramer_rao(const DensityGrid& p) {
  return {moments(p.field()).variance, translation_fisher(p).fisher};
}

struct ExactUncertaintyReport {
  double delta_x = 0.0;        // root mean square deviation of position
  double fisher_length = 0.0;  // delta X
  double delta_p = 0.0;
  double delta_p_classical = 0.0;
  double delta_p_nonclassical = 0.0;
  double mean_p = 0.0;
  double mean_p_classical = 0.0;
  ScalarField p_classical;
  std::size_t masked_nodes = 0;

  double product() const { return fisher_length * delta_p_nonclassical; }
  bool chain_holds(double tol) const {
    return delta_x * delta_p + tol >= fisher_length * delta_p &&
           fisher_length * delta_p + tol >= fisher_length * delta_p_nonclassical;
  }
};

inline constexpr double kPsiMaskThreshold = 1e-10;

/// p_cl = (hbar/2i)(psi'/psi - conj(psi)'/conj(psi)) = hbar Im(psi'/psi), with
/// nodes where |psi| < 1e-10 max|psi| excluded from every quadrature.
inline ExactUncertaintyReport exact_uncertainty(const ComplexField& psi, double hbar = kDefaultHbar) {
  const Grid& g = psi.grid();
  require(g.dims() == 1, ErrorKind::InvalidArgument, "exact_uncertainty needs a 1-D wavefunction");
  require(!g.periodic(), ErrorKind::BoundaryPolicy, "exact_uncertainty needs a decay boundary");
  const ScalarField rho = psi.map([](cplx v) { return std::norm(v); });
  require(std::abs(integrate(rho) - 1.0) <= 1e-8, ErrorKind::NotNormalized,
          "wavefunction must be normalized");
  const std::vector<char> keep = threshold_mask(rho, kPsiMaskThreshold * kPsiMaskThreshold);

  const ComplexField dpsi = derivative(psi, 0);
  ExactUncertaintyReport r;
  r.masked_nodes = g.size() - count_kept(keep);
  r.p_classical = ScalarField(g);
  ScalarField flux(g), pcl2(g), dpsi2(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!keep[i]) continue;
    const double pc = hbar * (dpsi[i] / psi[i]).imag();
    r.p_classical[i] = pc;
    pcl2[i] = rho[i] * pc * pc;
    dpsi2[i] = std::norm(dpsi[i]);
  }
  // <p> from the momentum operator -i hbar d/dx; the imaginary part vanishes.
  ComplexField pop(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (keep[i]) pop[i] = std::conj(psi[i]) * cplx(0.0, -hbar) * dpsi[i];
  }
  ScalarField pcl(g);
  for (std::size_t i = 0; i < g.size(); ++i) pcl[i] = rho[i] * r.p_classical[i];

  r.mean_p = integrate_masked(pop, keep).real();
  r.mean_p_classical = integrate_masked(pcl, keep);
  const double p2 = hbar * hbar * integrate_masked(dpsi2, keep);
  r.delta_p = std::sqrt(std::max(p2 - r.mean_p * r.mean_p, 0.0));
  const double pcl_var = integrate_masked(pcl2, keep) - r.mean_p_classical * r.mean_p_classical;
  r.delta_p_classical = std::sqrt(std::max(pcl_var, 0.0));
  r.delta_p_nonclassical = std::sqrt(std::max(r.delta_p * r.delta_p - pcl_var, 0.0));

  const DensityGrid density(rho);
  r.delta_x = std::sqrt(moments(rho).variance);
  r.fisher_length = translation_fisher(density).fisher_length;
  return r;
}

}  // namespace qgeo
