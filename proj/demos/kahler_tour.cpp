// Geometry of a random ray in CP^2: metric, symplectic form, brackets and the
// uncertainty relation evaluated on the same point.

#include <cstdio>
#include <random>

#include "qgeo/kahler.hpp"
#include "qgeo/observables.hpp"

int main() {
  using namespace qgeo;
  std::mt19937_64 rng(7);
  const double nu = 1.0;
  const StateVector x = random_state(3, rng);
  const ChartPoint p = to_chart(x);
  const TangentVector v(p, random_complex_vector(2, rng));
  const TangentVector w(p, random_complex_vector(2, rng));

  std::printf("chart %d, z = (%.4f%+.4fi, %.4f%+.4fi)\n", p.chart_index, p.coords(0).real(), p.coords(0).imag(),
              p.coords(1).real(), p.coords(1).imag());
  std::printf("g(v,w)      = % .12f\n", fs_metric(v, w, nu));
  std::printf("omega(v,Jw) = % .12f\n", symplectic_form(v, apply_J(w), nu));
  std::printf("omega(v,w)  = % .12f\n", symplectic_form(v, w, nu));
  std::printf("g(Jv,w)     = % .12f\n", fs_metric(apply_J(v), w, nu));

  const StateVector y = random_state(3, rng);
  std::printf("distance via chart 1: %.15f\n", geodesic_distance(to_chart(x, 1), to_chart(y, 1)));
  std::printf("distance via chart 3: %.15f\n", geodesic_distance(to_chart(x, 3), to_chart(y, 3)));

  const HermitianOperator A = random_hermitian(3, rng);
  const HermitianOperator B = random_hermitian(3, rng);
  std::printf("{A,B} operator  = % .12f\n", poisson_bracket(A, B, x, nu));
  std::printf("{A,B} geometric = % .12f\n", poisson_bracket_geometric(A, B, p, nu));

  const UncertaintyReport u = uncertainty_check(A, B, x, nu);
  std::printf("Var A Var B = %.6f >= %.6f (slack %.3e)\n", u.lhs, u.rhs, u.slack());
}
