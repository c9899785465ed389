#pragma once

#include "annihilation/half_int.hpp"
#include "annihilation/particles.hpp"
#include "annihilation/radial.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace annihilation {

/// M_k = \int f |xi|^{2k} dxi for k = 0, 1/2, ..., with standard errors
/// (zero for quadrature inputs).
struct MomentVector {
  std::map<HalfInt, double> entries;
  std::map<HalfInt, double> errors;

  bool has(HalfInt k) const { return entries.count(k) != 0; }
  double at(HalfInt k) const;
  double error(HalfInt k) const;
  HalfInt k_max() const { return entries.empty() ? HalfInt(0) : entries.rbegin()->first; }
};

/// Largest moment order accepted from particle data.
inline constexpr HalfInt kMaxMomentOrder = HalfInt::whole(10);

MomentVector moments_of(const RadialDistribution& f, HalfInt k_max);

/// Empirical moments of the velocity cloud, mass-normalized (M_0 = 1).
MomentVector moments_of(const Eigen::MatrixXd& velocities, HalfInt k_max);
inline MomentVector moments_of(const ParticleEnsemble& e, HalfInt k_max) { return moments_of(e.velocities, k_max); }

/// Collision-frequency functionals and the self-similar drift coefficients
///   a = \int Q^-(f,f),  b = (2/d) \int |xi|^2 Q^-(f,f),
///   A = -(alpha/2)(d+2) a + (alpha/2) d b,  B = (alpha/2)(b - a).
struct CoefficientSet {
  double a = 0.0;
  double b = 0.0;
  double A = 0.0;
  double B = 0.0;
  double alpha = 0.0;
  double a_error = 0.0;
  double b_error = 0.0;

  static CoefficientSet from_ab(double a, double b, double alpha, int d, double a_error = 0.0,
                                double b_error = 0.0);
};

/// Pair budget for particle U-statistics: every pair up to `all_pairs_limit`
/// particles, otherwise `sampled_pairs` random pairs.
struct PairSampling {
  Eigen::Index all_pairs_limit = 4096;
  std::int64_t sampled_pairs = 2'000'000;
  std::uint64_t seed = 0x5eed;
};

CoefficientSet coefficients(const RadialDistribution& f, double alpha);
CoefficientSet coefficients(const Eigen::MatrixXd& velocities, double alpha, const PairSampling& pairs = {});

struct AuditCheck {
  std::string name;
  double lhs = 0.0;  ///< the check reads lhs <= rhs
  double rhs = 0.0;
  double slack = 0.0;  ///< rhs - lhs
  double sigma = 0.0;  ///< statistical error of the slack
  bool pass = false;
};

/// The a priori bounds on a, b and the low moments of a normalized
/// profile (unit mass, energy d/2). A check passes when slack >= -3 sigma
/// (sigma = 0 for quadrature inputs, with a 1e-9 relative rounding margin).
std::vector<AuditCheck> audit_bounds(const MomentVector& ms, const CoefficientSet& cs, int d);
bool all_pass(const std::vector<AuditCheck>& checks);

/// alpha (k-1) a M_k - alpha k b M_k - \int B_alpha(f,f) |xi|^{2k}; zero at
/// a steady profile. Vanishes identically at k = 0 and k = 1 for any
/// normalized f.
double steady_residual(const RadialDistribution& f, double alpha, HalfInt k, const GainOrders& orders = {});

/// Pairwise weak-form pieces of the moment balance for a particle cloud.
///   J_k = \int B_alpha(f,f) |xi|^{2k}
///       = E_pairs |v - v*| [ (1-alpha) <|v'|^{2k}>_sigma - (|v|^{2k} + |v*|^{2k})/2 ].
struct ParticleBalance {
  HalfInt k;
  double moment = 0.0;     ///< M_k
  double collision = 0.0;  ///< J_k
  double residual = 0.0;
  double residual_error = 0.0;  ///< pair-sampling error only
};

/// Sphere average of |v'|^{2k} for the pair (v, v*).
double mean_post_collision_power(int d, double v2, double vs2, double vdot, HalfInt k);

std::vector<ParticleBalance> steady_residuals(const Eigen::MatrixXd& velocities, double alpha,
                                              const std::vector<HalfInt>& ks, const PairSampling& pairs = {});

/// Combines window-averaged pieces into a residual.
double balance_residual(double alpha, HalfInt k, double a, double b, double moment, double collision);

/// Renormalized-moment bound: K_hat = max_k (M_{k/2} / Gamma(k + gamma))^{1/k}
/// over k in [k_lo, k_hi]; A_est = 1 / K_hat estimates the exponential tail rate.
struct TailEstimate {
  double K_hat = 0.0;
  double A_est = 0.0;
  double gamma = 0.5;
  int k_lo = 2;
  int k_hi = 6;
  int k_argmax = 0;
  std::vector<double> roots;  ///< (M_{k/2}/Gamma(k+gamma))^{1/k} per k
  bool growth = false;        ///< maximum at the top of the window: no geometric bound seen
  bool noisy = false;         ///< log-convexity violated inside the window
};

TailEstimate tail_estimate(const MomentVector& ms, int k_lo = 2, int k_hi = 6, double gamma = 0.5);

/// Radial shells [edges_b, edges_{b+1}); the last edge is +inf. `centers`
/// holds a representative radius per shell (Maxwellian conditional mean).
struct RadialBinning {
  int d = 3;
  Eigen::VectorXd edges;
  Eigen::VectorXd centers;

  Eigen::Index size() const { return centers.size(); }
  Eigen::Index bin_of(double r) const;
};

/// n shells of equal Maxwellian mass.
RadialBinning maxwellian_binning(int d, Eigen::Index n_bins);

/// ceil(N^{1/3}).
Eigen::Index default_bin_count(Eigen::Index n_particles);

/// Shell masses; `errors` are standard errors where known.
struct Histogram {
  RadialBinning binning;
  Eigen::VectorXd mass;
  Eigen::VectorXd errors;
};

Histogram histogram(const Eigen::MatrixXd& velocities, const RadialBinning& binning);
Histogram histogram(const RadialDistribution& f, const RadialBinning& binning);

/// Exact Maxwellian shell masses (untruncated).
Histogram maxwellian_histogram(const RadialBinning& binning);

/// Histogram CSV: r_lo,r_hi,mass.
std::string to_csv(const Histogram& h);

struct WeightedDistance {
  double a_weight = 0.0;
  double k_weight = 0.0;
  double value = 0.0;
  double error = 0.0;  ///< L1 aggregate of per-shell standard errors
};

/// \int |f - g| <r>^k e^{a r} dxi on the common grid.
WeightedDistance weighted_distance(const RadialDistribution& f, const RadialDistribution& g, double a_weight,
                                   double k_weight);

/// Shell-mass version, sum_b |m_b(f) - m_b(g)| <c_b>^k e^{a c_b}.
WeightedDistance weighted_distance(const Histogram& f, const Histogram& g, double a_weight, double k_weight);

/// min_r L(f)(r) / <r> over the grid; a lower bound for the concentration constant.
double concentration_lower_bound(const RadialDistribution& f);

}  // namespace annihilation
