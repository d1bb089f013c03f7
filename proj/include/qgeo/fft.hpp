#pragma once

// Thin RAII wrapper over FFTW for complex transforms on a Grid.

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <vector>

#include "qgeo/grid.hpp"

namespace qgeo {

class FftPlan {
 public:
  explicit FftPlan(const Grid& grid) : size_(grid.size()), buffer_(fftw_alloc_complex(grid.size())) {
    require(buffer_ != nullptr, ErrorKind::NumericalFailure, "fftw allocation failed");
    std::vector<int> n(grid.shape());
    forward_ = fftw_plan_dft(grid.dims(), n.data(), buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft(grid.dims(), n.data(), buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
    require(forward_ != nullptr && backward_ != nullptr, ErrorKind::NumericalFailure,
            "fftw planning failed");
  }

  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  ~FftPlan() {
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
    fftw_free(buffer_);
  }

  /// Unnormalized forward transform.
  void forward(std::vector<cplx>& data) { run(forward_, data, 1.0); }

  /// Inverse transform including the 1/N factor.
  void inverse(std::vector<cplx>& data) { run(backward_, data, 1.0 / static_cast<double>(size_)); }

 private:
  void run(fftw_plan plan, std::vector<cplx>& data, double scale) {
    require(data.size() == size_, ErrorKind::DimensionMismatch, "fft size mismatch");
    for (std::size_t i = 0; i < size_; ++i) {
      buffer_[i][0] = data[i].real();
      buffer_[i][1] = data[i].imag();
    }
    fftw_execute(plan);
    for (std::size_t i = 0; i < size_; ++i) data[i] = cplx(buffer_[i][0], buffer_[i][1]) * scale;
  }

  std::size_t size_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Angular wavenumber of FFT bin `i` on an axis of n nodes with spacing h.
inline double wavenumber(int i, int n, double h) {
  const int f = (i <= n / 2) ? i : i - n;
  return 2.0 * kPi * f / (n * h);
}

/// Squared wavenumber |k|^2 for every node of the grid, in FFT order.
inline std::vector<double> wavenumber_squared(const Grid& g) {
  std::vector<double> k2(g.size(), 0.0);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const auto ijk = g.unravel(idx);
    for (int a = 0; a < g.dims(); ++a) {
      const double k = wavenumber(ijk[a], g.shape()[a], g.spacing()[a]);
      k2[idx] += k * k;
    }
  }
  return k2;
}

/// f(x + shift) by Fourier interpolation (exact for band-limited periodic data).
inline ScalarField fourier_shift(const ScalarField& f, const std::vector<double>& shift) {
  const Grid& g = f.grid();
  require(static_cast<int>(shift.size()) == g.dims(), ErrorKind::DimensionMismatch,
          "shift must have one entry per axis");
  std::vector<cplx> data(f.values().begin(), f.values().end());
  FftPlan plan(g);
  plan.forward(data);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const auto ijk = g.unravel(idx);
    double phase = 0.0;
    for (int a = 0; a < g.dims(); ++a) {
      const int n = g.shape()[a];
      // The Nyquist bin of an even axis carries no well-defined phase direction.
      if (n % 2 == 0 && ijk[a] == n / 2) continue;
      phase += wavenumber(ijk[a], n, g.spacing()[a]) * shift[a];
    }
    data[idx] *= std::polar(1.0, phase);
  }
  plan.inverse(data);
  ScalarField out(g);
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = data[i].real();
  return out;
}

}  // namespace qgeo
