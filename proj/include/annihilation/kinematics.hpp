#pragma once

#include "annihilation/error.hpp"
#include "annihilation/half_int.hpp"

#include <Eigen/Core>

#include <cmath>
#include <map>
#include <utility>

namespace annihilation {

template <class Scalar>
using Velocity = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Pre-collision pair and scattering direction.
template <class Scalar>
struct CollisionFrame {
  Velocity<Scalar> v;
  Velocity<Scalar> v_star;
  Velocity<Scalar> sigma;
};

/// Allowed deviation of |sigma| from 1.
inline constexpr double kSigmaTolerance = 1e-9;

/// Elastic hard-sphere collision in the sigma parametrization:
///   v'  = (v + v*)/2 + |v - v*| sigma / 2
///   v'* = (v + v*)/2 - |v - v*| sigma / 2
/// Works on any Eigen vector expressions of matching size.
template <class DV, class DW, class DS>
auto post_collision(const Eigen::MatrixBase<DV>& v, const Eigen::MatrixBase<DW>& v_star,
                    const Eigen::MatrixBase<DS>& sigma) {
  using Scalar = typename DV::Scalar;
  if (v.size() != v_star.size() || v.size() != sigma.size())
    throw ValidationError("post_collision: dimension mismatch");
  if (std::abs(sigma.norm() - Scalar(1)) > Scalar(kSigmaTolerance))
    throw ValidationError("post_collision: sigma is not a unit vector");
  const Velocity<Scalar> center = (v + v_star) / Scalar(2);
  const Velocity<Scalar> half = sigma * ((v - v_star).norm() / Scalar(2));
  return std::pair<Velocity<Scalar>, Velocity<Scalar>>{center + half, center - half};
}

template <class Scalar>
std::pair<Velocity<Scalar>, Velocity<Scalar>> post_collision(const CollisionFrame<Scalar>& f) {
  return post_collision(f.v, f.v_star, f.sigma);
}

/// rho_k = average over sigma in S^{d-1} of ((1+u.s)/2)^k + ((1-u.s)/2)^k.
///
/// d = 3 uses 2/(k+1); other dimensions integrate in the polar angle.
double povzner_coefficient(int d, HalfInt k);

/// The same average, always by quadrature (used to cross-check d = 3).
double povzner_coefficient_quadrature(int d, HalfInt k);

struct PovznerTable {
  int d = 3;
  std::map<HalfInt, double> entries;
};

/// rho_k for k = 0, 1/2, ..., k_max.
PovznerTable povzner_table(int d, HalfInt k_max);

struct AlphaThresholds {
  double alpha0;  ///< (1 - rho_{3/2}) / (3/2 - rho_{3/2}); moment-bound threshold.
  double alpha2;  ///< 2 sqrt2 / (4 sqrt2 + d (sqrt2 - 1)); L2-bound threshold.
};

/// Both thresholds evaluated from their formulas. For d = 3 this gives
/// alpha0 = 2/7 and alpha2 = 0.40995...
AlphaThresholds alpha_thresholds(int d);

}  // namespace annihilation
