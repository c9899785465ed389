#include "annihilation/moments.hpp"

#include "annihilation/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

namespace annihilation {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double MomentVector::at(HalfInt k) const {
  auto it = entries.find(k);
  if (it == entries.end()) throw ValidationError("moment M_" + k.str() + " not available");
  return it->second;
}

double MomentVector::error(HalfInt k) const {
  auto it = errors.find(k);
  return it == errors.end() ? 0.0 : it->second;
}

// ------------------------------------------------------------- moments

MomentVector moments_of(const RadialDistribution& f, HalfInt k_max) {
  if (k_max.twice() < 0) throw ValidationError("moments_of: k_max must be >= 0");
  MomentVector mv;
  const VectorXd r = f.grid.nodes;
  for (int tw = 0; tw <= k_max.twice(); ++tw) {
    const double p = 0.5 * tw;
    double s = 0.0;
    for (Index j = 0; j < r.size(); ++j) s += f.grid.weights[j] * f.values[j] * (tw == 0 ? 1.0 : std::pow(r[j], 2.0 * p));
    mv.entries[HalfInt(tw)] = s;
    mv.errors[HalfInt(tw)] = 0.0;
  }
  return mv;
}

MomentVector moments_of(const MatrixXd& velocities, HalfInt k_max) {
  if (k_max > kMaxMomentOrder) throw ValidationError("moments_of: particle moments limited to k <= 10");
  const Index n = velocities.cols();
  if (n < 2) throw ValidationError("moments_of: need at least two particles");
  const int m = k_max.twice() + 1;
  std::vector<double> sum(m, 0.0), sum2(m, 0.0);
  for (Index i = 0; i < n; ++i) {
    const double r = velocities.col(i).norm();
    double p = 1.0;  // r^tw, built incrementally
    for (int tw = 0; tw < m; ++tw) {
      sum[tw] += p;
      sum2[tw] += p * p;
      p *= r;
    }
  }
  MomentVector mv;
  for (int tw = 0; tw < m; ++tw) {
    const double mean = sum[tw] / n;
    const double var = std::max(sum2[tw] / n - mean * mean, 0.0) * n / (n - 1.0);
    mv.entries[HalfInt(tw)] = mean;
    mv.errors[HalfInt(tw)] = std::sqrt(var / n);
  }
  return mv;
}

// --------------------------------------------------------- coefficients

CoefficientSet CoefficientSet::from_ab(double a, double b, double alpha, int d, double a_error, double b_error) {
  CoefficientSet c;
  c.a = a;
  c.b = b;
  c.alpha = alpha;
  c.A = -0.5 * alpha * (d + 2) * a + 0.5 * alpha * d * b;
  c.B = -0.5 * alpha * a + 0.5 * alpha * b;
  c.a_error = a_error;
  c.b_error = b_error;
  return c;
}

CoefficientSet coefficients(const RadialDistribution& f, double alpha) {
  if (!(f.mass() > 0.0)) throw ValidationError("coefficients: distribution has no mass");
  const VectorXd l = loss_intensity_nodes(f);
  const VectorXd q = f.grid.weights.cwiseProduct(f.values).cwiseProduct(l);
  const double a = q.sum();
  const double b = 2.0 / f.grid.d * q.dot(f.grid.nodes.cwiseAbs2());
  return CoefficientSet::from_ab(a, b, alpha, f.grid.d);
}

namespace {

// Means and standard errors of several pair kernels at once.
//
// All pairs: U-statistic with the Hoeffding error 2 sd(h1) / sqrt(N), where
// h1_i is the average of h(i, .). Sampled: random triplets (i, j, j'); the
// covariance of h(i,j) and h(i,j') estimates Var(h1), so that
// SE^2 = 4 Var(h1) / N + Var(h) / P.
template <std::size_t K, class Kernel>
std::pair<std::array<double, K>, std::array<double, K>> pair_statistics(const MatrixXd& v, const PairSampling& ps,
                                                                        Kernel&& kernel) {
  const Index n = v.cols();
  if (n < 3) throw ValidationError("pair statistics: need at least three particles");
  std::array<double, K> mean{}, se{};
  if (n <= ps.all_pairs_limit) {
    std::vector<std::array<double, K>> h1(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        const auto h = kernel(i, j);
        for (std::size_t c = 0; c < K; ++c) {
          h1[i][c] += h[c];
          h1[j][c] += h[c];
        }
      }
    for (std::size_t c = 0; c < K; ++c) {
      double s = 0.0, s2 = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double x = h1[i][c] / (n - 1);
        s += x;
        s2 += x * x;
      }
      mean[c] = s / n;
      const double var = std::max(s2 / n - mean[c] * mean[c], 0.0) * n / (n - 1.0);
      se[c] = 2.0 * std::sqrt(var / n);
    }
    return {mean, se};
  }
  Rng rng(ps.seed);
  const std::int64_t triplets = std::max<std::int64_t>(ps.sampled_pairs / 2, 1);
  std::array<double, K> sx{}, sy{}, sxy{}, sq{};
  for (std::int64_t t = 0; t < triplets; ++t) {
    const Index i = static_cast<Index>(rng.index(n));
    Index j = static_cast<Index>(rng.index(n - 1));
    if (j >= i) ++j;
    Index k = static_cast<Index>(rng.index(n - 2));
    for (Index lo : {std::min(i, j), std::max(i, j)})
      if (k >= lo) ++k;
    const auto hx = kernel(i, j);
    const auto hy = kernel(i, k);
    for (std::size_t c = 0; c < K; ++c) {
      sx[c] += hx[c];
      sy[c] += hy[c];
      sxy[c] += hx[c] * hy[c];
      sq[c] += hx[c] * hx[c] + hy[c] * hy[c];
    }
  }
  const double p = 2.0 * triplets;
  for (std::size_t c = 0; c < K; ++c) {
    const double mx = sx[c] / triplets, my = sy[c] / triplets;
    mean[c] = (sx[c] + sy[c]) / p;
    const double var = std::max(sq[c] / p - mean[c] * mean[c], 0.0);
    const double cov = std::max(sxy[c] / triplets - mx * my, 0.0);
    se[c] = std::sqrt(4.0 * cov / n + var / p);
  }
  return {mean, se};
}

}  // namespace

CoefficientSet coefficients(const MatrixXd& velocities, double alpha, const PairSampling& pairs) {
  const int d = static_cast<int>(velocities.rows());
  const VectorXd sq = velocities.colwise().squaredNorm().transpose();
  const auto [mean, se] = pair_statistics<2>(velocities, pairs, [&](Index i, Index j) {
    const double u = (velocities.col(i) - velocities.col(j)).norm();
    return std::array<double, 2>{u, u * 0.5 * (sq[i] + sq[j])};
  });
  return CoefficientSet::from_ab(mean[0], 2.0 / d * mean[1], alpha, d, se[0], 2.0 / d * se[1]);
}

// ---------------------------------------------------------------- audit

std::vector<AuditCheck> audit_bounds(const MomentVector& ms, const CoefficientSet& cs, int d) {
  for (HalfInt k : {HalfInt(1), HalfInt(3)})
    if (!ms.has(k)) throw ValidationError("audit_bounds: moment M_" + k.str() + " is required");
  const double mh = ms.at(HalfInt(1)), mhe = ms.error(HalfInt(1));
  const double m3 = ms.at(HalfInt(3)), m3e = ms.error(HalfInt(3));
  const double a = cs.a, ae = cs.a_error, b = cs.b, be = cs.b_error;
  const double dd = d;
  const double low = dd * dd / (4.0 * m3), lowe = low * m3e / m3;

  std::vector<AuditCheck> out;
  const auto add = [&out](std::string name, double lhs, double lhs_e, double rhs, double rhs_e) {
    AuditCheck c{std::move(name), lhs, rhs, rhs - lhs, std::hypot(lhs_e, rhs_e), false};
    const double margin = 3.0 * c.sigma + 1e-9 * std::max(std::abs(lhs), std::abs(rhs));
    c.pass = c.slack >= -margin;
    out.push_back(std::move(c));
  };
  add("M_1/2 <= a", mh, mhe, a, ae);
  add("a <= 2 M_1/2", a, ae, 2.0 * mh, 2.0 * mhe);
  add("a <= sqrt(d)", a, ae, std::sqrt(dd), 0.0);
  add("sqrt(d) <= sqrt(2) b", std::sqrt(dd), 0.0, std::sqrt(2.0) * b, std::sqrt(2.0) * be);
  add("sqrt(d/2) <= b", std::sqrt(dd / 2), 0.0, b, be);
  add("(2/d) M_3/2 <= b", 2.0 / dd * m3, 2.0 / dd * m3e, b, be);
  add("b <= (2/d) M_3/2 + M_1/2", b, be, 2.0 / dd * m3 + mh, std::hypot(2.0 / dd * m3e, mhe));
  add("(d/2)^{3/2} <= M_3/2", std::pow(dd / 2, 1.5), 0.0, m3, m3e);
  add("a <= sqrt(2d)", a, ae, std::sqrt(2.0 * dd), 0.0);
  add("M_1/2 <= sqrt(d/2)", mh, mhe, std::sqrt(dd / 2), 0.0);
  add("d^2/(4 M_3/2) <= a", low, lowe, a, ae);
  add("d^2/(4 M_3/2) <= M_1/2", low, lowe, mh, mhe);
  return out;
}

bool all_pass(const std::vector<AuditCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const AuditCheck& c) { return c.pass; });
}

// ------------------------------------------------------------- balance

double balance_residual(double alpha, HalfInt k, double a, double b, double moment, double collision) {
  const double kk = k.value();
  return alpha * (kk - 1.0) * a * moment - alpha * kk * b * moment - collision;
}

double steady_residual(const RadialDistribution& f, double alpha, HalfInt k, const GainOrders& orders) {
  const RadialField op = annihilation_apply(f, alpha, orders);
  const VectorXd r = f.grid.nodes;
  double collision = 0.0, moment = 0.0;
  for (Index j = 0; j < r.size(); ++j) {
    const double p = k.twice() == 0 ? 1.0 : std::pow(r[j], k.value() * 2.0);
    collision += f.grid.weights[j] * op.values[j] * p;
    moment += f.grid.weights[j] * f.values[j] * p;
  }
  const CoefficientSet cs = coefficients(f, alpha);
  return balance_residual(alpha, k, cs.a, cs.b, moment, collision);
}

double mean_post_collision_power(int d, double v2, double vs2, double vdot, HalfInt k) {
  const double kk = k.value();
  const double A = 0.5 * (v2 + vs2);
  const double u2 = std::max(v2 + vs2 - 2.0 * vdot, 0.0);
  const double V2 = std::max(0.25 * (v2 + vs2 + 2.0 * vdot), 0.0);
  const double B = std::sqrt(u2 * V2);
  if (k.twice() == 0) return 1.0;
  if (d == 3) {
    if (B <= 1e-6 * A) return std::pow(A, kk) * (1.0 + kk * (kk - 1.0) * B * B / (6.0 * A * A));
    return (std::pow(A + B, kk + 1.0) - std::pow(std::max(A - B, 0.0), kk + 1.0)) / (2.0 * B * (kk + 1.0));
  }
  static const quad::Rule rule = quad::gauss_legendre(32, 0.0, std::numbers::pi);
  double s = 0.0;
  for (Index i = 0; i < rule.nodes.size(); ++i) {
    const double th = rule.nodes[i];
    const double w = rule.weights[i] * (d == 2 ? 1.0 : std::pow(std::sin(th), d - 2));
    s += w * std::pow(std::max(A + B * std::cos(th), 0.0), kk);
  }
  return quad::polar_density(d) * s;
}

std::vector<ParticleBalance> steady_residuals(const MatrixXd& velocities, double alpha,
                                              const std::vector<HalfInt>& ks, const PairSampling& pairs) {
  constexpr std::size_t kMaxK = 8;
  if (ks.empty() || ks.size() > kMaxK) throw ValidationError("steady_residuals: between 1 and 8 orders");
  const int d = static_cast<int>(velocities.rows());
  HalfInt top(0);
  for (HalfInt k : ks) top = std::max(top, k);
  const MomentVector ms = moments_of(velocities, top);
  const VectorXd sq = velocities.colwise().squaredNorm().transpose();

  std::array<double, kMaxK> ca{}, cb{};
  for (std::size_t c = 0; c < ks.size(); ++c) {
    ca[c] = alpha * (ks[c].value() - 1.0) * ms.at(ks[c]);
    cb[c] = -alpha * ks[c].value() * ms.at(ks[c]) * 2.0 / d;  // b = (2/d) E[u (|v|^2+|v*|^2)/2]
  }
  // Components: [0, K) residual kernels, [K, 2K) collision integrals.
  const auto [mean, se] = pair_statistics<2 * kMaxK>(velocities, pairs, [&](Index i, Index j) {
    std::array<double, 2 * kMaxK> h{};
    const double u = (velocities.col(i) - velocities.col(j)).norm();
    const double vd = velocities.col(i).dot(velocities.col(j));
    const double hb = u * 0.5 * (sq[i] + sq[j]);
    for (std::size_t c = 0; c < ks.size(); ++c) {
      const double kk = ks[c].value();
      const double post = mean_post_collision_power(d, sq[i], sq[j], vd, ks[c]);
      const double pre = 0.5 * (std::pow(sq[i], kk) + std::pow(sq[j], kk));
      const double coll = u * ((1.0 - alpha) * post - pre);
      h[kMaxK + c] = coll;
      h[c] = ca[c] * u + cb[c] * hb - coll;
    }
    return h;
  });
  std::vector<ParticleBalance> out;
  for (std::size_t c = 0; c < ks.size(); ++c)
    out.push_back({ks[c], ms.at(ks[c]), mean[kMaxK + c], mean[c], se[c]});
  return out;
}

// ------------------------------------------------------------------ tail

TailEstimate tail_estimate(const MomentVector& ms, int k_lo, int k_hi, double gamma) {
  if (k_lo < 1 || k_hi <= k_lo) throw ValidationError("tail_estimate: need 1 <= k_lo < k_hi");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("tail_estimate: gamma must lie in (0, 1)");
  for (int k = std::max(k_lo - 1, 0); k <= k_hi; ++k)
    if (!ms.has(HalfInt(k))) throw ValidationError("tail_estimate: moment M_" + HalfInt(k).str() + " missing");
  TailEstimate t;
  t.gamma = gamma;
  t.k_lo = k_lo;
  t.k_hi = k_hi;
  for (int k = k_lo; k <= k_hi; ++k) {
    const double z = ms.at(HalfInt(k)) / std::tgamma(k + gamma);
    const double root = std::pow(z, 1.0 / k);
    t.roots.push_back(root);
    if (root > t.K_hat) {
      t.K_hat = root;
      t.k_argmax = k;
    }
  }
  t.A_est = t.K_hat > 0.0 ? 1.0 / t.K_hat : std::numeric_limits<double>::infinity();
  t.growth = t.k_argmax == k_hi;
  for (int k = k_lo; k < k_hi; ++k) {
    const double lo = ms.at(HalfInt(k - 1)), mid = ms.at(HalfInt(k)), hi = ms.at(HalfInt(k + 1));
    const double sig = 2.0 * mid * ms.error(HalfInt(k)) + std::hypot(lo * ms.error(HalfInt(k + 1)),
                                                                      hi * ms.error(HalfInt(k - 1)));
    if (mid * mid - lo * hi > 3.0 * sig + 1e-12 * mid * mid) t.noisy = true;
  }
  return t;
}

// --------------------------------------------------------------- binning

Index RadialBinning::bin_of(double r) const {
  const auto* b = edges.data();
  const auto* e = b + edges.size();
  const Index k = static_cast<Index>(std::upper_bound(b, e, r) - b) - 1;
  return std::clamp<Index>(k, 0, size() - 1);
}

RadialBinning maxwellian_binning(int d, Index n_bins) {
  if (n_bins < 2) throw ConfigError("maxwellian_binning: need at least two bins");
  const double c = quad::sphere_area(d) * std::pow(std::numbers::pi, -0.5 * d);
  const auto density = [c, d](double r) { return c * std::pow(r, d - 1) * std::exp(-r * r); };
  const auto cdf = [&](double r) { return quad::integrate(density, 0.0, r, 1e-15); };
  RadialBinning b;
  b.d = d;
  b.edges.resize(n_bins + 1);
  b.centers.resize(n_bins);
  b.edges[0] = 0.0;
  b.edges[n_bins] = std::numeric_limits<double>::infinity();
  for (Index i = 1; i < n_bins; ++i) {
    const double target = static_cast<double>(i) / n_bins;
    double lo = b.edges[i - 1], hi = 12.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < target ? lo : hi) = mid;
    }
    b.edges[i] = 0.5 * (lo + hi);
  }
  for (Index i = 0; i < n_bins; ++i) {
    const double lo = b.edges[i], hi = std::min(b.edges[i + 1], 12.0);
    const double m = quad::integrate(density, lo, hi, 1e-15);
    const double mr = quad::integrate([&](double r) { return r * density(r); }, lo, hi, 1e-15);
    b.centers[i] = mr / m;
  }
  return b;
}

Index default_bin_count(Index n_particles) {
  return static_cast<Index>(std::ceil(std::cbrt(static_cast<double>(n_particles)) - 1e-9));
}

Histogram histogram(const MatrixXd& velocities, const RadialBinning& binning) {
  const Index n = velocities.cols();
  if (n == 0) throw ValidationError("histogram: empty ensemble");
  Histogram h{binning, VectorXd::Zero(binning.size()), VectorXd::Zero(binning.size())};
  for (Index i = 0; i < n; ++i) h.mass[binning.bin_of(velocities.col(i).norm())] += 1.0;
  h.mass /= static_cast<double>(n);
  h.errors = (h.mass.array() * (1.0 - h.mass.array()) / static_cast<double>(n)).sqrt().matrix();
  return h;
}

Histogram histogram(const RadialDistribution& f, const RadialBinning& binning) {
  if (binning.d != f.grid.d) throw ValidationError("histogram: dimension mismatch");
  const RadialInterpolant fi(f);
  const int d = f.grid.d;
  const double area = quad::sphere_area(d);
  std::vector<double> cuts(f.grid.nodes.data(), f.grid.nodes.data() + f.grid.size());
  for (Index i = 1; i < binning.edges.size() - 1; ++i)
    if (binning.edges[i] < f.grid.r_max) cuts.push_back(binning.edges[i]);
  std::sort(cuts.begin(), cuts.end());
  Histogram h{binning, VectorXd::Zero(binning.size()), VectorXd::Zero(binning.size())};
  const quad::Rule& rule = quad::gauss_legendre(8);
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double lo = cuts[c], hi = cuts[c + 1];
    if (hi <= lo) continue;
    double s = 0.0;
    for (Index q = 0; q < rule.nodes.size(); ++q) {
      const double r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[q];
      s += rule.weights[q] * area * std::pow(r, d - 1) * fi(r);
    }
    h.mass[binning.bin_of(0.5 * (lo + hi))] += 0.5 * (hi - lo) * s;
  }
  return h;
}

Histogram maxwellian_histogram(const RadialBinning& binning) {
  const int d = binning.d;
  const double c = quad::sphere_area(d) * std::pow(std::numbers::pi, -0.5 * d);
  const auto density = [c, d](double r) { return c * std::pow(r, d - 1) * std::exp(-r * r); };
  Histogram h{binning, VectorXd::Zero(binning.size()), VectorXd::Zero(binning.size())};
  for (Index b = 0; b < binning.size(); ++b)
    h.mass[b] = quad::integrate(density, binning.edges[b], std::min(binning.edges[b + 1], 12.0), 1e-15);
  return h;
}

std::string to_csv(const Histogram& h) {
  std::ostringstream os;
  os << std::setprecision(17) << "r_lo,r_hi,mass\n";
  for (Index i = 0; i < h.binning.size(); ++i)
    os << h.binning.edges[i] << ',' << h.binning.edges[i + 1] << ',' << h.mass[i] << '\n';
  return os.str();
}

// -------------------------------------------------------------- distance

namespace {

double distance_weight(double r, double a_weight, double k_weight) {
  return std::pow(1.0 + r * r, 0.5 * k_weight) * std::exp(a_weight * r);
}

void check_weights(double a_weight, double k_weight) {
  if (!(a_weight >= 0.0) || !(k_weight >= 0.0)) throw ValidationError("weighted_distance: weights must be >= 0");
}

}  // namespace

WeightedDistance weighted_distance(const RadialDistribution& f, const RadialDistribution& g, double a_weight,
                                   double k_weight) {
  check_weights(a_weight, k_weight);
  if (f.grid.size() != g.grid.size() || f.grid.d != g.grid.d || f.grid.r_max != g.grid.r_max ||
      f.grid.stretch != g.grid.stretch)
    throw ValidationError("weighted_distance: inputs are on different grids");
  const Index n = f.grid.size();
  const double rm = f.grid.r_max;
  const double edge = distance_weight(rm, a_weight, k_weight) * std::max(f.values[n - 1], g.values[n - 1]) *
                      quad::sphere_area(f.grid.d) * std::pow(rm, f.grid.d);
  if (edge > 1e-6)
    throw ConfigError("weighted_distance: exponential weight is not negligible at r_max (" + std::to_string(edge) + ")");
  WeightedDistance out{a_weight, k_weight, 0.0, 0.0};
  for (Index j = 0; j < n; ++j)
    out.value += f.grid.weights[j] * std::abs(f.values[j] - g.values[j]) *
                 distance_weight(f.grid.nodes[j], a_weight, k_weight);
  return out;
}

WeightedDistance weighted_distance(const Histogram& f, const Histogram& g, double a_weight, double k_weight) {
  check_weights(a_weight, k_weight);
  if (f.binning.size() != g.binning.size() || f.binning.d != g.binning.d ||
      !f.binning.edges.head(f.binning.size()).isApprox(g.binning.edges.head(g.binning.size()), 1e-12))
    throw ValidationError("weighted_distance: histograms use different binnings");
  if (a_weight > 1.0)
    throw ConfigError("weighted_distance: exponential weight above 1 is not resolved by the shell binning");
  WeightedDistance out{a_weight, k_weight, 0.0, 0.0};
  for (Index b = 0; b < f.binning.size(); ++b) {
    const double w = distance_weight(f.binning.centers[b], a_weight, k_weight);
    out.value += w * std::abs(f.mass[b] - g.mass[b]);
    out.error += w * std::hypot(f.errors[b], g.errors[b]);
  }
  return out;
}

double concentration_lower_bound(const RadialDistribution& f) {
  const VectorXd l = loss_intensity_nodes(f);
  double best = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < l.size(); ++j) best = std::min(best, l[j] / std::sqrt(1.0 + f.grid.nodes[j] * f.grid.nodes[j]));
  return best;
}

}  // namespace annihilation
