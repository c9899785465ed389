#pragma once

#include <stdexcept>
#include <string>

namespace annihilation {

/// Bad input to an operation (non-unit sigma, empty ensemble, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Solver or study parameters that cannot produce a meaningful result.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Eigensolver non-convergence, quadrature breakdown and similar.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint integrity or compatibility failure.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace annihilation
