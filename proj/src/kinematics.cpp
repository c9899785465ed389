#include "annihilation/kinematics.hpp"

#include "annihilation/quadrature.hpp"

#include <numbers>
#include <string>

namespace annihilation {

namespace {

void check_args(int d, HalfInt k) {
  if (d < 2) throw ValidationError("povzner: dimension must be >= 2, got " + std::to_string(d));
  if (k.twice() < 0) throw ValidationError("povzner: k must be >= 0");
}

}  // namespace

double povzner_coefficient_quadrature(int d, HalfInt k) {
  check_args(d, k);
  if (k.twice() == 0) return 2.0;
  const double kk = k.value();
  // In theta, (1 + cos)/2 = cos^2(theta/2): the integrand stays smooth
  // even for k = 1/2.
  const auto F = [kk](double x) {
    return std::pow(0.5 * (1.0 + x), kk) + std::pow(0.5 * (1.0 - x), kk);
  };
  return quad::sphere_average(F, d, 1e-14);
}

double povzner_coefficient(int d, HalfInt k) {
  check_args(d, k);
  if (k.twice() == 0) return 2.0;
  if (d == 3) return 2.0 / (k.value() + 1.0);
  return povzner_coefficient_quadrature(d, k);
}

PovznerTable povzner_table(int d, HalfInt k_max) {
  PovznerTable t{d, {}};
  for (int tw = 0; tw <= k_max.twice(); ++tw) t.entries[HalfInt(tw)] = povzner_coefficient(d, HalfInt(tw));
  return t;
}

AlphaThresholds alpha_thresholds(int d) {
  if (d < 2) throw ValidationError("alpha_thresholds: dimension must be >= 2");
  const double rho = povzner_coefficient(d, HalfInt(3));
  const double s2 = std::numbers::sqrt2;
  return {(1.0 - rho) / (1.5 - rho), 2.0 * s2 / (4.0 * s2 + d * (s2 - 1.0))};
}

}  // namespace annihilation
