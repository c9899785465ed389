#pragma once

#include "annihilation/random.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace annihilation {

struct EnsembleCounters {
  std::int64_t candidates = 0;
  std::int64_t collisions = 0;
  std::int64_t annihilations = 0;  ///< annihilated pairs
  std::int64_t duplications = 0;   ///< particles copied into freed slots
  std::int64_t rescalings = 0;
  std::int64_t majorant_overflows = 0;
  std::int64_t steps = 0;
};

/// N velocities in R^d (one per column) plus the state needed to continue a
/// run bit-identically: time, random stream, majorant, counters.
struct ParticleEnsemble {
  int d = 3;
  Eigen::MatrixXd velocities;  ///< d x N
  double t = 0.0;
  double v_maj = 0.0;          ///< current majorant relative speed
  double candidate_carry = 0.0;
  Rng rng;
  EnsembleCounters counters;

  Eigen::Index size() const { return velocities.cols(); }
};

/// Shift to zero mean and scale to mean |v|^2 = d/2.
void renormalize(Eigen::MatrixXd& velocities);

}  // namespace annihilation
