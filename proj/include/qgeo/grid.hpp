#pragma once

// Uniform structured grids (1-D to 4-D), sampled fields, trapezoid quadrature
// and fourth-order finite differences.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "qgeo/core.hpp"

namespace qgeo {

enum class Boundary { Periodic, Decay };

inline const char* to_string(Boundary b) { return b == Boundary::Periodic ? "periodic" : "decay"; }

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::Periodic;
  if (s == "decay") return Boundary::Decay;
  throw Error(ErrorKind::InvalidArgument, "unknown boundary '" + s + "'");
}

inline constexpr int kMaxGridDims = 4;

/// Node i along axis a sits at origin[a] + i * spacing[a]. Nodes are stored in
/// row-major order (last axis fastest). A periodic axis of n nodes has period
/// n * spacing.
class Grid {
 public:
  Grid() = default;

  Grid(std::vector<int> shape, std::vector<double> spacing, std::vector<double> origin,
       Boundary boundary)
      : shape_(std::move(shape)), spacing_(std::move(spacing)), origin_(std::move(origin)),
        boundary_(boundary) {
    const auto d = shape_.size();
    require(d >= 1 && d <= kMaxGridDims, ErrorKind::InvalidArgument, "grid must have 1 to 4 axes");
    require(spacing_.size() == d && origin_.size() == d, ErrorKind::DimensionMismatch,
            "shape, spacing and origin must have the same length");
    for (std::size_t a = 0; a < d; ++a) {
      require(shape_[a] >= 5, ErrorKind::InvalidArgument, "every axis needs at least 5 nodes");
      require(spacing_[a] > 0.0 && std::isfinite(spacing_[a]), ErrorKind::InvalidArgument,
              "spacing must be positive");
    }
    strides_.assign(d, 1);
    for (int a = static_cast<int>(d) - 2; a >= 0; --a) strides_[a] = strides_[a + 1] * shape_[a + 1];
    size_ = strides_[0] * static_cast<std::size_t>(shape_[0]);
  }

  /// Symmetric box [-half_width, half_width]^dims. Decay grids include both ends;
  /// periodic grids omit the right end.
  static Grid centered(int dims, int nodes, double half_width, Boundary boundary) {
    const double h = boundary == Boundary::Periodic ? 2.0 * half_width / nodes
                                                    : 2.0 * half_width / (nodes - 1);
    return Grid(std::vector<int>(dims, nodes), std::vector<double>(dims, h),
                std::vector<double>(dims, -half_width), boundary);
  }

  int dims() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return size_; }
  const std::vector<int>& shape() const { return shape_; }
  const std::vector<double>& spacing() const { return spacing_; }
  const std::vector<double>& origin() const { return origin_; }
  Boundary boundary() const { return boundary_; }
  bool periodic() const { return boundary_ == Boundary::Periodic; }
  std::size_t stride(int axis) const { return strides_[axis]; }

  double cell_volume() const {
    return std::accumulate(spacing_.begin(), spacing_.end(), 1.0, std::multiplies<>());
  }

  std::array<int, kMaxGridDims> unravel(std::size_t idx) const {
    std::array<int, kMaxGridDims> out{};
    for (int a = 0; a < dims(); ++a) {
      out[a] = static_cast<int>(idx / strides_[a]);
      idx %= strides_[a];
    }
    return out;
  }

  std::size_t ravel(const std::array<int, kMaxGridDims>& ijk) const {
    std::size_t idx = 0;
    for (int a = 0; a < dims(); ++a) idx += static_cast<std::size_t>(ijk[a]) * strides_[a];
    return idx;
  }

  double coord(int axis, int i) const { return origin_[axis] + i * spacing_[axis]; }

  std::array<double, kMaxGridDims> position(std::size_t idx) const {
    const auto ijk = unravel(idx);
    std::array<double, kMaxGridDims> x{};
    for (int a = 0; a < dims(); ++a) x[a] = coord(a, ijk[a]);
    return x;
  }

  /// Distance, in nodes, to the nearest nonperiodic edge (large when periodic).
  int edge_distance(std::size_t idx) const {
    if (periodic()) return 1 << 20;
    const auto ijk = unravel(idx);
    int d = 1 << 20;
    for (int a = 0; a < dims(); ++a) d = std::min({d, ijk[a], shape_[a] - 1 - ijk[a]});
    return d;
  }

  bool same_geometry(const Grid& o) const {
    return shape_ == o.shape_ && spacing_ == o.spacing_ && origin_ == o.origin_ &&
           boundary_ == o.boundary_;
  }

  /// Same nodes with spacing halved and node count doubled (decay: 2n - 1).
  Grid refined() const {
    std::vector<int> s(shape_);
    std::vector<double> h(spacing_);
    for (int a = 0; a < dims(); ++a) {
      s[a] = periodic() ? 2 * shape_[a] : 2 * shape_[a] - 1;
      h[a] = spacing_[a] / 2.0;
    }
    return Grid(s, h, origin_, boundary_);
  }

 private:
  std::vector<int> shape_;
  std::vector<double> spacing_;
  std::vector<double> origin_;
  Boundary boundary_ = Boundary::Decay;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

template <typename T>
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(Grid grid, T fill = T{}) : grid_(std::move(grid)), values_(grid_.size(), fill) {}
  GridFunction(Grid grid, std::vector<T> values) : grid_(std::move(grid)), values_(std::move(values)) {
    require(values_.size() == grid_.size(), ErrorKind::DimensionMismatch,
            "value count does not match grid size");
  }

  template <typename F>
  static GridFunction sample(const Grid& grid, F&& f) {
    GridFunction out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) out.values_[i] = f(grid.position(i));
    return out;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<T>& values() const { return values_; }
  std::vector<T>& values() { return values_; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  template <typename F>
  auto map(F&& f) const {
    using R = decltype(f(values_[0]));
    GridFunction<R> out(grid_);
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = f(values_[i]);
    return out;
  }

 private:
  Grid grid_;
  std::vector<T> values_;
};

using ScalarField = GridFunction<double>;
using ComplexField = GridFunction<cplx>;

template <typename T, typename F>
GridFunction<T> zip_with(const GridFunction<T>& a, const GridFunction<T>& b, F&& f) {
  require(a.grid().same_geometry(b.grid()), ErrorKind::DimensionMismatch, "fields on different grids");
  GridFunction<T> out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

/// Trapezoid weight of a node: half weight on each nonperiodic end per axis.
inline double trapezoid_weight(const Grid& g, std::size_t idx) {
  double w = g.cell_volume();
  if (g.periodic()) return w;
  const auto ijk = g.unravel(idx);
  for (int a = 0; a < g.dims(); ++a) {
    if (ijk[a] == 0 || ijk[a] == g.shape()[a] - 1) w *= 0.5;
  }
  return w;
}

template <typename T>
T integrate(const GridFunction<T>& f) {
  T sum{};
  const Grid& g = f.grid();
  for (std::size_t i = 0; i < f.size(); ++i) sum += trapezoid_weight(g, i) * f[i];
  return sum;
}

/// Integral restricted to nodes where keep[i] is true.
template <typename T>
T integrate_masked(const GridFunction<T>& f, const std::vector<char>& keep) {
  T sum{};
  const Grid& g = f.grid();
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (keep[i]) sum += trapezoid_weight(g, i) * f[i];
  }
  return sum;
}

namespace detail {

// Fourth-order stencils for f' and f''. Near a nonperiodic edge the one-sided
// fourth-order variants are used.
template <typename T>
T first_derivative_1d(const T* f, std::ptrdiff_t stride, int i, int n, bool periodic, double h) {
  auto at = [&](int j) {
    if (periodic) j = ((j % n) + n) % n;
    return f[j * stride];
  };
  if (periodic || (i >= 2 && i <= n - 3)) {
    return (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * h);
  }
  if (i == 0) return (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) / (12.0 * h);
  if (i == 1) return (-3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)) / (12.0 * h);
  if (i == n - 2) {
    return (3.0 * at(n - 1) + 10.0 * at(n - 2) - 18.0 * at(n - 3) + 6.0 * at(n - 4) - at(n - 5)) / (12.0 * h);
  }
  return (25.0 * at(n - 1) - 48.0 * at(n - 2) + 36.0 * at(n - 3) - 16.0 * at(n - 4) + 3.0 * at(n - 5)) /
         (12.0 * h);
}

template <typename T>
T second_derivative_1d(const T* f, std::ptrdiff_t stride, int i, int n, bool periodic, double h) {
  auto at = [&](int j) {
    if (periodic) j = ((j % n) + n) % n;
    return f[j * stride];
  };
  const double h2 = h * h;
  if (periodic || (i >= 2 && i <= n - 3)) {
    return (-at(i + 2) + 16.0 * at(i + 1) - 30.0 * at(i) + 16.0 * at(i - 1) - at(i - 2)) / (12.0 * h2);
  }
  if (i == 0) {
    return (45.0 * at(0) - 154.0 * at(1) + 214.0 * at(2) - 156.0 * at(3) + 61.0 * at(4) - 10.0 * at(5)) /
           (12.0 * h2);
  }
  if (i == 1) {
    return (10.0 * at(0) - 15.0 * at(1) - 4.0 * at(2) + 14.0 * at(3) - 6.0 * at(4) + at(5)) / (12.0 * h2);
  }
  if (i == n - 2) {
    return (10.0 * at(n - 1) - 15.0 * at(n - 2) - 4.0 * at(n - 3) + 14.0 * at(n - 4) - 6.0 * at(n - 5) +
            at(n - 6)) /
           (12.0 * h2);
  }
  return (45.0 * at(n - 1) - 154.0 * at(n - 2) + 214.0 * at(n - 3) - 156.0 * at(n - 4) + 61.0 * at(n - 5) -
          10.0 * at(n - 6)) /
         (12.0 * h2);
}

}  // namespace detail

/// Fourth-order first derivative along one axis.
template <typename T>
GridFunction<T> derivative(const GridFunction<T>& f, int axis) {
  const Grid& g = f.grid();
  require(axis >= 0 && axis < g.dims(), ErrorKind::InvalidArgument, "axis out of range");
  GridFunction<T> out(g);
  const int n = g.shape()[axis];
  const auto stride = static_cast<std::ptrdiff_t>(g.stride(axis));
  const double h = g.spacing()[axis];
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const int i = g.unravel(idx)[axis];
    const T* line = f.values().data() + (idx - static_cast<std::size_t>(i) * g.stride(axis));
    out[idx] = detail::first_derivative_1d(line, stride, i, n, g.periodic(), h);
  }
  return out;
}

/// Fourth-order second derivative along one axis (five-point stencil).
template <typename T>
GridFunction<T> second_derivative(const GridFunction<T>& f, int axis) {
  const Grid& g = f.grid();
  require(axis >= 0 && axis < g.dims(), ErrorKind::InvalidArgument, "axis out of range");
  GridFunction<T> out(g);
  const int n = g.shape()[axis];
  const auto stride = static_cast<std::ptrdiff_t>(g.stride(axis));
  const double h = g.spacing()[axis];
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const int i = g.unravel(idx)[axis];
    const T* line = f.values().data() + (idx - static_cast<std::size_t>(i) * g.stride(axis));
    out[idx] = detail::second_derivative_1d(line, stride, i, n, g.periodic(), h);
  }
  return out;
}

/// Mixed derivative d^2 f / dx_a dx_b; a == b uses the five-point stencil.
template <typename T>
GridFunction<T> mixed_derivative(const GridFunction<T>& f, int a, int b) {
  if (a == b) return second_derivative(f, a);
  return derivative(derivative(f, a), b);
}

template <typename T>
GridFunction<T> laplacian(const GridFunction<T>& f) {
  GridFunction<T> out(f.grid());
  for (int a = 0; a < f.grid().dims(); ++a) {
    const GridFunction<T> d2 = second_derivative(f, a);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] += d2[i];
  }
  return out;
}

template <typename T>
std::vector<GridFunction<T>> gradient(const GridFunction<T>& f) {
  std::vector<GridFunction<T>> out;
  for (int a = 0; a < f.grid().dims(); ++a) out.push_back(derivative(f, a));
  return out;
}

/// Keep-mask of nodes whose value is at least threshold * max.
inline std::vector<char> threshold_mask(const ScalarField& f, double relative_threshold) {
  double mx = 0.0;
  for (double v : f.values()) mx = std::max(mx, v);
  std::vector<char> keep(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) keep[i] = f[i] >= relative_threshold * mx && f[i] > 0.0;
  return keep;
}

/// Removes from keep every node within `width` nodes of a nonperiodic edge.
inline void erode_edges(const Grid& g, std::vector<char>& keep, int width) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.edge_distance(i) < width) keep[i] = 0;
  }
}

/// Removes nodes whose stencil (radius `width` along every axis) touches a dropped node.
inline std::vector<char> erode_mask(const Grid& g, const std::vector<char>& keep, int width) {
  std::vector<char> out(keep);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (!keep[idx]) continue;
    const auto ijk = g.unravel(idx);
    bool ok = true;
    for (int a = 0; a < g.dims() && ok; ++a) {
      for (int s = -width; s <= width && ok; ++s) {
        auto q = ijk;
        q[a] += s;
        const int n = g.shape()[a];
        if (g.periodic()) {
          q[a] = ((q[a] % n) + n) % n;
        } else if (q[a] < 0 || q[a] >= n) {
          continue;
        }
        if (!keep[g.ravel(q)]) ok = false;
      }
    }
    out[idx] = ok;
  }
  return out;
}

inline std::size_t count_kept(const std::vector<char>& keep) {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), 1));
}

/// Max |a - b| over kept nodes.
inline double max_abs_diff(const ScalarField& a, const ScalarField& b, const std::vector<char>& keep) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (keep[i]) worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

inline double max_abs(const ScalarField& a, const std::vector<char>& keep) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (keep[i]) worst = std::max(worst, std::abs(a[i]));
  }
  return worst;
}

}  // namespace qgeo
