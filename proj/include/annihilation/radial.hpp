#pragma once

#include "annihilation/error.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>

namespace annihilation {

/// Stretched radial grid r_j = r_max (j/(n-1))^p with weights for
///   \int_{R^d} phi(|xi|) dxi = |S^{d-1}| \int phi(r) r^{d-1} dr.
///
/// Weights come from the trapezoid rule in the stretched coordinate
/// s = (r/r_max)^{1/p}; the integrand vanishes like s^{pd-1} at the origin
/// and is negligible at r_max, so the rule is high order for the smooth
/// isotropic densities handled here.
struct RadialGrid {
  int d = 3;
  double r_max = 6.0;
  double stretch = 1.5;
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  static RadialGrid make(int d, int n, double r_max = 6.0, double stretch = 1.5);

  Eigen::Index size() const { return nodes.size(); }

  /// Index j with r_j^2 <= u < r_{j+1}^2, clamped to [0, n-2].
  Eigen::Index locate_sq(double u) const;

  /// \int phi(|xi|) dxi by the grid rule.
  double integrate(const std::function<double(double)>& phi) const;
};

/// Isotropic density sampled at the grid nodes. Values are >= 0.
struct RadialDistribution {
  RadialGrid grid;
  Eigen::VectorXd values;

  static RadialDistribution from_function(const RadialGrid& grid, const std::function<double(double)>& f);

  /// Rejects negative or non-finite values.
  void validate() const;

  double mass() const { return grid.weights.dot(values); }
};

/// Signed nodal field, e.g. the output of the annihilation operator.
struct RadialField {
  RadialGrid grid;
  Eigen::VectorXd values;
};

/// Monotone piecewise-cubic interpolant of a radial profile in u = r^2.
///
/// Strictly positive profiles are interpolated in log space, which is exact
/// for Gaussians; profiles with zeros fall back to the values themselves.
/// Zero outside [0, r_max].
class RadialInterpolant {
 public:
  explicit RadialInterpolant(const RadialDistribution& f);

  /// f at |xi|^2 = u.
  double at_sq(double u) const;
  double operator()(double r) const { return at_sq(r * r); }

  bool log_space() const { return log_space_; }

 private:
  RadialGrid grid_;
  Eigen::VectorXd u_, y_, slope_;
  bool log_space_ = false;
};

/// pi^{-d/2} exp(-|xi|^2) on the grid; unit mass and energy d/2.
/// Throws ConfigError if the truncated mass deficit exceeds 1e-4.
RadialDistribution maxwellian(const RadialGrid& grid);

/// Sphere average of |xi - xi*| over the relative angle, |xi| = r, |xi*| = rp.
/// Closed forms for d = 2 (complete elliptic integral) and d = 3.
double loss_kernel(int d, double r, double rp);

/// L(f)(r) = \int |xi - xi*| f(xi*) dxi* with |xi| = r.
double loss_intensity(const RadialDistribution& f, double r);

/// L(f) at every node.
Eigen::VectorXd loss_intensity_nodes(const RadialDistribution& f);

/// Tensor Gauss orders for the gain integral in (|v*|, angle(v, v*),
/// angle(V, sigma)). The azimuth of sigma around V integrates out exactly.
struct GainOrders {
  int radial = 32;
  int polar = 16;
  int sigma = 16;
  void validate() const;
};

/// Q+(g, f)(r) = \int |v - v*| g(v') f(v'*) dv* dsigma / |S^{d-1}| at |v| = r.
double gain(const RadialDistribution& g, const RadialDistribution& f, double r,
            const GainOrders& orders = {});

/// Q+(g, f) at every node.
Eigen::VectorXd gain_nodes(const RadialDistribution& g, const RadialDistribution& f,
                           const GainOrders& orders = {});

struct MonteCarloEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
  std::int64_t degenerate_resamples = 0;
};

/// Q+(g, f)(r) from the hyperplane (Carleman) form, hard-sphere kernel
///   B(z, rho) = 2^{d-1} |z|^{3-d} / (rho |S^{d-1}|):
/// w is drawn from a Gaussian proposal fitted to g, z from a Gaussian on
/// (v - w)^perp centred at the projection of v.
MonteCarloEstimate gain_carleman_mc(const RadialDistribution& g, const RadialDistribution& f, double r,
                                    std::int64_t samples, std::uint64_t seed);

/// Gamma_B f(v) = Q+(delta_0, f)(v) for isotropic f, by 1D quadrature over
/// the hyperplane v^perp.
double gamma_b_direct(const RadialDistribution& f, double r);

/// The Carleman sampler specialized to g = delta_0 (w fixed at the origin).
MonteCarloEstimate gamma_b_carleman_mc(const RadialDistribution& f, double r, std::int64_t samples,
                                       std::uint64_t seed);

/// Nodal (1 - alpha) Q+(f, f) - f L(f).
RadialField annihilation_apply(const RadialDistribution& f, double alpha, const GainOrders& orders = {});

/// CSV with header "r,f".
std::string to_csv(const RadialDistribution& f);
RadialDistribution radial_from_csv(const std::string& text, int d, double stretch = 1.5);

/// JSON with grid metadata {d, n, r_max, stretch, r, f}.
std::string to_json(const RadialDistribution& f);
RadialDistribution radial_from_json(const std::string& text);

}  // namespace annihilation
