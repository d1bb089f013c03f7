#pragma once

// Weyl geometry on sampled metrics: connection, covariant derivatives,
// curvature, the scalar decomposition, and the coupling of the gauge field to a
// probability density.
//
// Sign conventions. The connection is Gamma = -{Christoffel} + P(phi), the
// covariant derivative of a contravariant index subtracts Gamma, and the
// curvature tensor is
//   R^i_{mkl} = -d_l Gamma^i_{mk} + d_k Gamma^i_{ml} + Gamma^i_{nl} Gamma^n_{mk} - Gamma^i_{nk} Gamma^n_{ml},
// with Ricci R_ik = R^l_{ilk}. With these choices the commutator of covariant
// derivatives reproduces R and the scalar decomposition holds, but the
// Riemannian scalar carries the opposite sign to the usual one (a round sphere
// gives -2/a^2). `standard_riemannian_scalar` restores the usual sign.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qgeo/grid.hpp"
#include "qgeo/madelung.hpp"

namespace qgeo {

enum class Variance { Upper, Lower };

/// Dense per-node tensor of rank r over an n-dimensional grid. Component
/// (i_1, ..., i_r) is stored at flat index sum i_j n^{r-j}.
class TensorField {
 public:
  TensorField() = default;
  TensorField(Grid grid, std::vector<Variance> variance)
      : grid_(std::move(grid)), variance_(std::move(variance)) {
    n_ = grid_.dims();
    std::size_t count = 1;
    for (std::size_t k = 0; k < variance_.size(); ++k) count *= static_cast<std::size_t>(n_);
    comps_.assign(count, ScalarField(grid_));
  }

  const Grid& grid() const { return grid_; }
  int n() const { return n_; }
  int rank() const { return static_cast<int>(variance_.size()); }
  const std::vector<Variance>& variance() const { return variance_; }
  std::size_t component_count() const { return comps_.size(); }

  std::size_t flat(std::initializer_list<int> idx) const {
    require(static_cast<int>(idx.size()) == rank(), ErrorKind::DimensionMismatch, "wrong number of indices");
    std::size_t f = 0;
    for (int i : idx) f = f * n_ + i;
    return f;
  }

  ScalarField& operator()(std::initializer_list<int> idx) { return comps_[flat(idx)]; }
  const ScalarField& operator()(std::initializer_list<int> idx) const { return comps_[flat(idx)]; }
  ScalarField& component(std::size_t f) { return comps_[f]; }
  const ScalarField& component(std::size_t f) const { return comps_[f]; }

  /// Multi-index of a flat component number.
  std::vector<int> unflatten(std::size_t f) const {
    std::vector<int> idx(rank());
    for (int k = rank() - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(f % n_);
      f /= n_;
    }
    return idx;
  }

  std::size_t flat(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (int i : idx) f = f * n_ + i;
    return f;
  }

 private:
  Grid grid_;
  int n_ = 0;
  std::vector<Variance> variance_;
  std::vector<ScalarField> comps_;
};

/// Metric g_ik and gauge covector phi_k on a grid of dimension n = 2..4.
class WeylManifold {
 public:
  WeylManifold() = default;

  WeylManifold(TensorField metric, TensorField gauge, bool constant_metric = false)
      : metric_(std::move(metric)), gauge_(std::move(gauge)), constant_metric_(constant_metric) {
    const Grid& g = metric_.grid();
    require(g.dims() >= 2 && g.dims() <= 4, ErrorKind::InvalidArgument, "Weyl manifolds need 2 to 4 dimensions");
    require(metric_.rank() == 2 && gauge_.rank() == 1, ErrorKind::InvalidArgument,
            "metric must be rank 2 and gauge rank 1");
    require(gauge_.grid().same_geometry(g), ErrorKind::DimensionMismatch, "gauge on a different grid");
    const int n = g.dims();
    inverse_ = TensorField(g, {Variance::Upper, Variance::Upper});
    sqrt_det_ = ScalarField(g);
    for (std::size_t node = 0; node < g.size(); ++node) {
      const RMatrix m = metric_at(node);
      require(m.allFinite() && (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()),
              ErrorKind::InvalidArgument, "metric must be finite and symmetric");
      Eigen::SelfAdjointEigenSolver<RMatrix> es(m, Eigen::EigenvaluesOnly);
      require(es.eigenvalues().minCoeff() > 0.0, ErrorKind::SingularMetric,
              "metric is not positive definite at node " + std::to_string(node));
      const RMatrix inv = m.inverse();
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) inverse_({i, k})[node] = inv(i, k);
      }
      sqrt_det_[node] = std::sqrt(m.determinant());
      for (int k = 0; k < n; ++k) {
        require(std::isfinite(gauge_({k})[node]), ErrorKind::InvalidArgument, "gauge must be finite");
      }
    }
  }

  /// Constant metric with the given gauge (or zero gauge).
  static WeylManifold flat(const Grid& g, const RMatrix& metric, std::optional<TensorField> gauge = std::nullopt) {
    const int n = g.dims();
    require(metric.rows() == n && metric.cols() == n, ErrorKind::DimensionMismatch, "metric must be n x n");
    TensorField m(g, {Variance::Lower, Variance::Lower});
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) m({i, k}).values().assign(g.size(), metric(i, k));
    }
    TensorField phi = gauge ? std::move(*gauge) : TensorField(g, {Variance::Lower});
    return WeylManifold(std::move(m), std::move(phi), true);
  }

  const Grid& grid() const { return metric_.grid(); }
  int n() const { return metric_.n(); }
  const TensorField& metric() const { return metric_; }
  const TensorField& inverse_metric() const { return inverse_; }
  const TensorField& gauge() const { return gauge_; }
  const ScalarField& sqrt_det() const { return sqrt_det_; }
  bool constant_metric() const { return constant_metric_; }

  RMatrix metric_at(std::size_t node) const {
    const int n = this->n();
    RMatrix m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) m(i, k) = metric_({i, k})[node];
    }
    return m;
  }

  /// Same metric with phi = 0.
  WeylManifold riemannian() const {
    return WeylManifold(metric_, TensorField(grid(), {Variance::Lower}), constant_metric_);
  }

  /// phi^i = g^{ik} phi_k.
  TensorField raised_gauge() const {
    TensorField up(grid(), {Variance::Upper});
    for (int i = 0; i < n(); ++i) {
      for (int k = 0; k < n(); ++k) {
        for (std::size_t node = 0; node < grid().size(); ++node) {
          up({i})[node] += inverse_({i, k})[node] * gauge_({k})[node];
        }
      }
    }
    return up;
  }

 private:
  TensorField metric_;
  TensorField gauge_;
  TensorField inverse_;
  ScalarField sqrt_det_;
  bool constant_metric_ = false;
};

/// gamma = (n - 2) / (6 (n - 1)).
inline double weyl_gamma(int n) {
  require(n >= 3, ErrorKind::InvalidArgument, "gamma vanishes for n < 3");
  return (n - 2.0) / (6.0 * (n - 1.0));
}

/// Christoffel symbols {i, kl} = (1/2) g^{im}(d_k g_ml + d_l g_mk - d_m g_kl).
inline TensorField christoffel(const WeylManifold& M) {
  const Grid& g = M.grid();
  const int n = M.n();
  TensorField out(g, {Variance::Upper, Variance::Lower, Variance::Lower});
  if (M.constant_metric()) return out;
  // dg[m][k][l] = d_m g_kl
  std::vector<ScalarField> dg(static_cast<std::size_t>(n * n * n));
  for (int m = 0; m < n; ++m) {
    for (int k = 0; k < n; ++k) {
      for (int l = 0; l < n; ++l) dg[(m * n + k) * n + l] = derivative(M.metric()({k, l}), m);
    }
  }
  auto D = [&](int m, int k, int l) -> const ScalarField& { return dg[(m * n + k) * n + l]; };
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      for (int l = k; l < n; ++l) {
        ScalarField& c = out({i, k, l});
        for (int m = 0; m < n; ++m) {
          const ScalarField& inv = M.inverse_metric()({i, m});
          for (std::size_t node = 0; node < g.size(); ++node) {
            c[node] += 0.5 * inv[node] * (D(k, m, l)[node] + D(l, m, k)[node] - D(m, k, l)[node]);
          }
        }
        if (l != k) out({i, l, k}) = c;
      }
    }
  }
  return out;
}

/// Gamma^i_{kl} = -{i, kl} + delta^i_k phi_l + delta^i_l phi_k - g_kl phi^i.
inline TensorField weyl_connection(const WeylManifold& M) {
  const Grid& g = M.grid();
  const int n = M.n();
  TensorField gamma = christoffel(M);
  const TensorField phi_up = M.raised_gauge();
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      for (int l = 0; l < n; ++l) {
        ScalarField& c = gamma({i, k, l});
        const ScalarField& gkl = M.metric()({k, l});
        for (std::size_t node = 0; node < g.size(); ++node) {
          double v = -c[node] - gkl[node] * phi_up({i})[node];
          if (i == k) v += M.gauge()({l})[node];
          if (i == l) v += M.gauge()({k})[node];
          c[node] = v;
        }
      }
    }
  }
  return gamma;
}

/// Appends a covariant derivative index. Contravariant slots subtract
/// Gamma^k_{il} A^l; covariant slots add Gamma^l_{ik} A_l.
inline TensorField covariant_derivative(const TensorField& T, const TensorField& gamma) {
  require(T.grid().same_geometry(gamma.grid()), ErrorKind::DimensionMismatch, "field and connection on different grids");
  const Grid& g = T.grid();
  const int n = T.n();
  std::vector<Variance> var = T.variance();
  var.push_back(Variance::Lower);
  TensorField out(g, var);
  for (std::size_t f = 0; f < T.component_count(); ++f) {
    const std::vector<int> idx = T.unflatten(f);
    for (int d = 0; d < n; ++d) {
      std::vector<int> oidx = idx;
      oidx.push_back(d);
      ScalarField& o = out.component(out.flat(oidx));
      o = derivative(T.component(f), d);
      for (int slot = 0; slot < T.rank(); ++slot) {
        for (int l = 0; l < n; ++l) {
          std::vector<int> sidx = idx;
          sidx[slot] = l;
          const ScalarField& a = T.component(T.flat(sidx));
          const ScalarField& G = T.variance()[slot] == Variance::Upper ? gamma({idx[slot], d, l}) : gamma({l, d, idx[slot]});
          const double sign = T.variance()[slot] == Variance::Upper ? -1.0 : 1.0;
          for (std::size_t node = 0; node < g.size(); ++node) o[node] += sign * G[node] * a[node];
        }
      }
    }
  }
  return out;
}

struct CurvatureBundle {
  TensorField riemann;  // R^i_{mkl}
  TensorField ricci;    // R_ik
  ScalarField scalar;   // R
  ScalarField riemannian_scalar;           // same chain with phi = 0
  ScalarField standard_riemannian_scalar;  // usual sign: +2/a^2 on a sphere
  std::vector<char> keep;                  // interior nodes used for assertions
  std::size_t excluded = 0;
};

namespace detail {

inline TensorField riemann_from_connection(const TensorField& G) {
  const Grid& g = G.grid();
  const int n = G.n();
  // dG[d][f] = d_d Gamma component f
  std::vector<std::vector<ScalarField>> dG(n);
  for (int d = 0; d < n; ++d) {
    dG[d].reserve(G.component_count());
    for (std::size_t f = 0; f < G.component_count(); ++f) dG[d].push_back(derivative(G.component(f), d));
  }
  TensorField R(g, {Variance::Upper, Variance::Lower, Variance::Lower, Variance::Lower});
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < n; ++m) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          ScalarField& r = R({i, m, k, l});
          if (k == l) continue;
          const ScalarField& a = dG[l][G.flat({i, m, k})];
          const ScalarField& b = dG[k][G.flat({i, m, l})];
          for (std::size_t node = 0; node < g.size(); ++node) r[node] = -a[node] + b[node];
          for (int q = 0; q < n; ++q) {
            const ScalarField& g1 = G({i, q, l});
            const ScalarField& g2 = G({q, m, k});
            const ScalarField& g3 = G({i, q, k});
            const ScalarField& g4 = G({q, m, l});
            for (std::size_t node = 0; node < g.size(); ++node) r[node] += g1[node] * g2[node] - g3[node] * g4[node];
          }
        }
      }
    }
  }
  return R;
}

inline void contract_curvature(const WeylManifold& M, const TensorField& R, TensorField& ricci, ScalarField& scalar) {
  const Grid& g = M.grid();
  const int n = M.n();
  ricci = TensorField(g, {Variance::Lower, Variance::Lower});
  scalar = ScalarField(g);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      ScalarField& c = ricci({i, k});
      for (int l = 0; l < n; ++l) {
        const ScalarField& r = R({l, i, l, k});
        for (std::size_t node = 0; node < g.size(); ++node) c[node] += r[node];
      }
      const ScalarField& inv = M.inverse_metric()({i, k});
      for (std::size_t node = 0; node < g.size(); ++node) scalar[node] += inv[node] * c[node];
    }
  }
}

}  // namespace detail

/// Two nested derivatives use a stencil of radius 4; nodes nearer a decay edge
/// are excluded from assertions.
inline constexpr int kCurvatureStencilRadius = 4;

inline CurvatureBundle curvature(const WeylManifold& M) {
  const Grid& g = M.grid();
  CurvatureBundle b;
  b.riemann = detail::riemann_from_connection(weyl_connection(M));
  detail::contract_curvature(M, b.riemann, b.ricci, b.scalar);

  const WeylManifold riem = M.riemannian();
  const TensorField R0 = detail::riemann_from_connection(weyl_connection(riem));
  TensorField ric0;
  detail::contract_curvature(riem, R0, ric0, b.riemannian_scalar);
  b.standard_riemannian_scalar = b.riemannian_scalar.map([](double v) { return -v; });

  b.keep.assign(g.size(), 1);
  erode_edges(g, b.keep, kCurvatureStencilRadius);
  b.excluded = g.size() - count_kept(b.keep);
  return b;
}

/// Largest |R^i_{mkl} + R^i_{mlk}| and first-Bianchi cyclic sum over kept nodes.
struct CurvatureSymmetry {
  double antisymmetry = 0.0;
  double bianchi = 0.0;
};

inline CurvatureSymmetry curvature_symmetry(const CurvatureBundle& b) {
  const int n = b.riemann.n();
  CurvatureSymmetry s;
  const std::size_t N = b.scalar.size();
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < n; ++m) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          const ScalarField& a = b.riemann({i, m, k, l});
          const ScalarField& c = b.riemann({i, m, l, k});
          const ScalarField& p = b.riemann({i, k, l, m});
          const ScalarField& q = b.riemann({i, l, m, k});
          for (std::size_t node = 0; node < N; ++node) {
            if (!b.keep[node]) continue;
            s.antisymmetry = std::max(s.antisymmetry, std::abs(a[node] + c[node]));
            s.bianchi = std::max(s.bianchi, std::abs(a[node] + p[node] + q[node]));
          }
        }
      }
    }
  }
  return s;
}

struct ScalarDecomposition {
  ScalarField R;
  ScalarField R_riemannian;
  ScalarField rhs;       // Riemannian part plus (n-1)((n-2) phi.phi - 2 div phi)
  ScalarField residual;  // R - rhs
  std::vector<char> keep;
  double max_residual = 0.0;
};

/// R = R_riem + (n-1)[(n-2) phi_i phi^i - (2/sqrt g) d_i(sqrt g phi^i)].
inline ScalarDecomposition scalar_decomposition_check(const WeylManifold& M) {
  const Grid& g = M.grid();
  const int n = M.n();
  const CurvatureBundle b = curvature(M);
  const TensorField up = M.raised_gauge();
  ScalarDecomposition d;
  d.R = b.scalar;
  d.R_riemannian = b.riemannian_scalar;
  d.keep = b.keep;
  ScalarField phi2(g), div(g);
  for (int i = 0; i < n; ++i) {
    ScalarField weighted(g);
    for (std::size_t node = 0; node < g.size(); ++node) {
      phi2[node] += M.gauge()({i})[node] * up({i})[node];
      weighted[node] = M.sqrt_det()[node] * up({i})[node];
    }
    const ScalarField dw = derivative(weighted, i);
    for (std::size_t node = 0; node < g.size(); ++node) div[node] += dw[node] / M.sqrt_det()[node];
  }
  d.rhs = ScalarField(g);
  d.residual = ScalarField(g);
  for (std::size_t node = 0; node < g.size(); ++node) {
    d.rhs[node] = b.riemannian_scalar[node] + (n - 1.0) * ((n - 2.0) * phi2[node] - 2.0 * div[node]);
    d.residual[node] = d.R[node] - d.rhs[node];
  }
  d.max_residual = max_abs(d.residual, d.keep);
  return d;
}

/// phi_i = -(1/(n-2)) d_i log rho. Nodes below the density mask get phi = 0.
inline TensorField gauge_from_density(const ScalarField& rho_hat, int n) {
  require(n != 2, ErrorKind::InvalidArgument, "the density gauge divides by n - 2 and is undefined for n = 2");
  require(n >= 3 && n <= 4, ErrorKind::InvalidArgument, "the density gauge needs n = 3 or 4");
  const Grid& g = rho_hat.grid();
  require(g.dims() == n, ErrorKind::DimensionMismatch, "density grid dimension must equal n");
  const std::vector<char> keep = threshold_mask(rho_hat, kRhoMaskThreshold);
  double mx = 0.0;
  for (double v : rho_hat.values()) mx = std::max(mx, v);
  // Differentiating log rho directly is exact for Gaussians and avoids
  // dividing small differences in the tails.
  const ScalarField logr = rho_hat.map([&](double v) { return std::log(std::max(v, kRhoMaskThreshold * mx)); });
  TensorField phi(g, {Variance::Lower});
  for (int i = 0; i < n; ++i) {
    const ScalarField d = derivative(logr, i);
    for (std::size_t node = 0; node < g.size(); ++node) {
      if (keep[node]) phi({i})[node] = -d[node] / (n - 2.0);
    }
  }
  return phi;
}

inline TensorField gauge_from_density(const DensityGrid& rho_hat, int n) {
  return gauge_from_density(rho_hat.field(), n);
}

struct WeylScalar {
  ScalarField R;
  std::vector<char> keep;
};

/// R = (1 / (2 gamma sqrt rho)) g^{ik} d_i d_k sqrt rho on a constant metric.
inline WeylScalar weyl_scalar_from_density(const ScalarField& rho_hat, const WeylManifold& M, double gamma) {
  require(M.constant_metric(), ErrorKind::NotFlat, "the closed-form scalar needs a constant metric");
  require(gamma > 0.0, ErrorKind::InvalidArgument, "gamma must be positive");
  const Grid& g = rho_hat.grid();
  require(g.same_geometry(M.grid()), ErrorKind::DimensionMismatch, "density and manifold on different grids");
  const int n = M.n();
  const ScalarField amp = rho_hat.map([](double v) { return std::sqrt(std::max(v, 0.0)); });
  WeylScalar out{ScalarField(g), threshold_mask(rho_hat, kRhoMaskThreshold)};
  ScalarField op(g);
  for (int i = 0; i < n; ++i) {
    for (int k = i; k < n; ++k) {
      const double gik = M.inverse_metric()({i, k})[0];
      if (gik == 0.0) continue;
      const ScalarField d2 = i == k ? second_derivative(amp, i) : mixed_derivative(amp, i, k);
      const double w = i == k ? gik : 2.0 * gik;
      for (std::size_t node = 0; node < g.size(); ++node) op[node] += w * d2[node];
    }
  }
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (out.keep[node]) out.R[node] = op[node] / (2.0 * gamma * amp[node]);
  }
  return out;
}

inline WeylScalar weyl_scalar_from_density(const ScalarField& rho_hat, double gamma) {
  const Grid& g = rho_hat.grid();
  return weyl_scalar_from_density(rho_hat, WeylManifold::flat(g, RMatrix::Identity(g.dims(), g.dims())), gamma);
}

struct QCurvatureIdentity {
  ScalarField lhs;  // Q
  ScalarField rhs;  // -gamma (hbar^2/m) R
  std::vector<char> keep;
  double gamma = 0.0;
  double max_relative_gap = 0.0;    // pointwise |lhs - rhs| / max(|lhs|, |rhs|, floor)
  double normalized_gap = 0.0;      // max |lhs - rhs| / max |lhs|
  double tensor_chain_ratio = 0.0;  // least-squares R_chain / R_closed_form
};

/// Q against -gamma (hbar^2 / m) R with R from the closed form in the density and
/// gamma = (n-2)/(6(n-1)). Also reports how the full tensor-chain scalar with the
/// density gauge compares with the closed form.
inline QCurvatureIdentity q_curvature_identity(const ScalarField& rho_hat, double hbar, double mass,
                                               bool with_tensor_chain = true) {
  const Grid& g = rho_hat.grid();
  const int n = g.dims();
  require(!g.periodic(), ErrorKind::BoundaryPolicy, "the identity is stated for decaying densities");
  QCurvatureIdentity r;
  r.gamma = weyl_gamma(n);
  const QuantumPotential q = quantum_potential(rho_hat, hbar, mass);
  const WeylScalar R = weyl_scalar_from_density(rho_hat, r.gamma);
  r.lhs = q.Q;
  r.rhs = R.R.map([&](double v) { return -r.gamma * hbar * hbar / mass * v; });
  r.keep = q.keep;
  const double scale = max_abs(r.lhs, r.keep);
  const double floor = std::max(1e-12 * scale, 1e-300);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!r.keep[i]) continue;
    const double den = std::max({std::abs(r.lhs[i]), std::abs(r.rhs[i]), floor});
    r.max_relative_gap = std::max(r.max_relative_gap, std::abs(r.lhs[i] - r.rhs[i]) / den);
  }
  r.normalized_gap = scale > 0.0 ? max_abs_diff(r.lhs, r.rhs, r.keep) / scale : max_abs_diff(r.lhs, r.rhs, r.keep);

  if (with_tensor_chain) {
    const WeylManifold M = WeylManifold::flat(g, RMatrix::Identity(n, n), gauge_from_density(rho_hat, n));
    const CurvatureBundle b = curvature(M);
    std::vector<char> keep = erode_mask(g, q.keep, 2 * kCurvatureStencilRadius);
    for (std::size_t i = 0; i < g.size(); ++i) keep[i] = keep[i] && b.keep[i];
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!keep[i]) continue;
      num += b.scalar[i] * R.R[i];
      den += R.R[i] * R.R[i];
    }
    r.tensor_chain_ratio = den > 0.0 ? num / den : 0.0;
  }
  return r;
}

struct WeylHJResidual {
  ResidualField hj;
  ResidualField continuity;
};

/// S_t + (1/2m)|grad S - A|^2 + V - gamma (hbar^2/m) R and
/// rho_t + (1/m) div(rho (grad S - A)) on a flat Euclidean background, with R
/// from the closed form in the density.
inline WeylHJResidual hj_weyl_residual(const MadelungPair& m, const ScalarField& V, const TimeDerivatives& td,
                                       std::optional<TensorField> A = std::nullopt,
                                       std::optional<double> gamma = std::nullopt) {
  detail::check_time_derivatives(m, td);
  const Grid& g = m.rho.grid();
  const int n = g.dims();
  const double gam = gamma.value_or(weyl_gamma(n));
  const WeylScalar R = weyl_scalar_from_density(m.rho, gam);
  WeylHJResidual out{{ScalarField(g), detail::residual_mask(m)}, {td.rho_t, detail::residual_mask(m)}};
  for (int a = 0; a < n; ++a) {
    ScalarField v = derivative(m.S, a);
    if (A) {
      for (std::size_t i = 0; i < g.size(); ++i) v[i] -= (*A)({a})[i];
    }
    ScalarField flux(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (out.hj.keep[i]) out.hj.values[i] += v[i] * v[i] / (2.0 * m.mass);
      flux[i] = m.keep[i] ? m.rho[i] * v[i] / m.mass : 0.0;
    }
    const ScalarField div = derivative(flux, a);
    for (std::size_t i = 0; i < g.size(); ++i) out.continuity.values[i] += div[i];
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (out.hj.keep[i]) {
      out.hj.values[i] += td.S_t[i] + V[i] - gam * m.hbar * m.hbar / m.mass * R.R[i];
    } else {
      out.hj.values[i] = 0.0;
      out.continuity.values[i] = 0.0;
    }
  }
  return out;
}

struct FisherCurvatureReport {
  double int_rho_Q = 0.0;
  double fisher_unhalved = 0.0;
  double fisher_term = 0.0;  // -(hbar^2 / 8m) * fisher_unhalved
  double int_rho_R = 0.0;
  double gamma = 0.0;
  double fitted_constant = 0.0;   // fisher_unhalved / int_rho_R
  double implied_constant = 0.0;  // 8 gamma
  double chain_gap = 0.0;         // |fitted - implied| / |implied|
  double printed_constant = 0.0;  // hbar^4 / (96 m^2)
  double printed_ratio = 0.0;     // fitted / printed
};

inline FisherCurvatureReport fisher_curvature_report(const DensityGrid& rho_hat, double hbar, double mass) {
  const Grid& g = rho_hat.grid();
  const int n = g.dims();
  require(n >= 3, ErrorKind::InvalidArgument, "the curvature chain needs at least three dimensions");
  FisherCurvatureReport r;
  r.gamma = weyl_gamma(n);
  const FisherQIdentity fq = fisher_q_identity(rho_hat, hbar, mass);
  r.int_rho_Q = fq.lhs;
  r.fisher_unhalved = fq.fisher_unhalved;
  r.fisher_term = fq.rhs;
  const WeylScalar R = weyl_scalar_from_density(rho_hat.field(), r.gamma);
  ScalarField t(g);
  for (std::size_t i = 0; i < g.size(); ++i) t[i] = R.keep[i] ? rho_hat.field()[i] * R.R[i] : 0.0;
  r.int_rho_R = integrate(t);
  require(std::isfinite(r.int_rho_R) && std::isfinite(r.fisher_unhalved), ErrorKind::NumericalFailure,
          "density is not integrable on this grid");
  r.fitted_constant = r.int_rho_R != 0.0 ? r.fisher_unhalved / r.int_rho_R : 0.0;
  r.implied_constant = 8.0 * r.gamma;
  r.chain_gap = std::abs(r.fitted_constant - r.implied_constant) / r.implied_constant;
  r.printed_constant = std::pow(hbar, 4) / (96.0 * mass * mass);
  r.printed_ratio = r.fitted_constant / r.printed_constant;
  return r;
}

}  // namespace qgeo
