#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace annihilation {

/// Seeded stream with portable variate generation.
///
/// The standard distributions are implementation-defined and
/// std::normal_distribution caches a second variate, which would have to
/// be checkpointed. Everything here is a pure function of the engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    // Lemire-style rejection keeps the draw unbiased for any n.
    const std::uint64_t range = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % range);
  }

  /// Standard normal (Box-Muller, cosine branch only).
  double normal() {
    const double u1 = uniform_open0();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <class Derived>
  void fill_normal(Eigen::MatrixBase<Derived>& out) {
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = normal();
  }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }
  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
  }

  /// Derived stream for replica `index`; deterministic in (seed, index).
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

/// Uniform point on S^{d-1} by normalizing a Gaussian vector.
template <class Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> random_unit_vector(Rng& rng, int d) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(d);
  Scalar n2 = 0;
  do {
    for (int i = 0; i < d; ++i) v[i] = static_cast<Scalar>(rng.normal());
    n2 = v.squaredNorm();
  } while (n2 < Scalar(1e-24));
  return v / std::sqrt(n2);
}

}  // namespace annihilation
