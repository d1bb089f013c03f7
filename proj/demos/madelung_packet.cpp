// Free Gaussian packet: width against the closed form and the Madelung
// residuals at the middle of the run.

#include <cmath>
#include <cstdio>

#include "qgeo/experiments.hpp"
#include "qgeo/madelung.hpp"

int main() {
  using namespace qgeo;
  const double hbar = 1.0, mass = 1.0, sigma0 = 1.0;
  const Grid g = Grid::centered(1, 1024, 16.0, Boundary::Periodic);
  const Wavefield w0 = Wavefield::normalized(experiments::gaussian_packet(g, sigma0, 0.0, 1.0), hbar, mass);

  EvolutionOptions opt;
  opt.dt = 0.005;
  opt.steps = 400;
  opt.snapshot_every = 80;
  opt.on_snapshot = [&](const Snapshot& s) {
    ScalarField rho = s.psi.map([](cplx z) { return std::norm(z); });
    const double sigma = std::sqrt(moments(rho).variance);
    const double r = hbar * s.t / (2.0 * mass * sigma0 * sigma0);
    std::printf("t = %4.2f  sigma = %.10f  closed form = %.10f\n", s.t, sigma, sigma0 * std::sqrt(1.0 + r * r));
  };
  evolve_se(w0, opt);

  for (const auto& level : experiments::madelung_sweep(experiments::Problem::FreePacket, 1024, 0.01, 3, hbar, mass).levels) {
    std::printf("nodes %5d dt %.4f  HJ residual %.3e  continuity residual %.3e\n", level.nodes, level.dt, level.hj,
                level.continuity);
  }
}
