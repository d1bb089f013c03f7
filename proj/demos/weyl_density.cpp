// A 3-D Gaussian density read as a Weyl gauge: quantum potential against the
// scalar curvature, and the integrated Fisher-curvature constants.

#include <cstdio>

#include "qgeo/experiments.hpp"
#include "qgeo/weyl.hpp"

int main() {
  using namespace qgeo;
  const double hbar = 1.0, mass = 1.0;
  const Grid g = Grid::centered(3, 33, 7.0, Boundary::Decay);
  const ScalarField rho = experiments::gaussian_density(g, 1.0);

  const QCurvatureIdentity q = q_curvature_identity(rho, hbar, mass);
  std::printf("gamma = %.6f\n", q.gamma);
  std::printf("max pointwise gap between Q and -gamma hbar^2 R / m: %.3e\n", q.max_relative_gap);
  std::printf("tensor-chain R over closed-form R: %.5f\n", q.tensor_chain_ratio);

  const std::size_t centre = g.size() / 2;
  std::printf("at the centre: Q = %.8f, R = %.8f\n", q.lhs[centre], -q.rhs[centre] * mass / (q.gamma * hbar * hbar));

  const FisherCurvatureReport fc = fisher_curvature_report(DensityGrid(rho), hbar, mass);
  std::printf("I / int rho R = %.6f (8 gamma = %.6f)\n", fc.fitted_constant, fc.implied_constant);
}
