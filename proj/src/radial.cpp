#include "annihilation/radial.hpp"

#include "annihilation/quadrature.hpp"
#include "annihilation/random.hpp"
#include "gain_points.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>

namespace annihilation {

using Eigen::Index;
using Eigen::VectorXd;

// ---------------------------------------------------------------- grid

RadialGrid RadialGrid::make(int d, int n, double r_max, double stretch) {
  if (d < 2) throw ConfigError("radial grid: dimension must be >= 2");
  if (n < 8) throw ConfigError("radial grid: need at least 8 nodes");
  if (!(r_max > 0.0) || !(stretch >= 1.0)) throw ConfigError("radial grid: bad r_max or stretch");
  RadialGrid g;
  g.d = d;
  g.r_max = r_max;
  g.stretch = stretch;
  g.nodes.resize(n);
  g.weights.resize(n);
  const double h = 1.0 / (n - 1);
  const double area = quad::sphere_area(d);
  for (int j = 0; j < n; ++j) {
    const double s = j * h;
    const double r = r_max * std::pow(s, stretch);
    const double dr = stretch * r_max * std::pow(s, stretch - 1.0);
    g.nodes[j] = r;
    g.weights[j] = h * area * std::pow(r, d - 1) * dr * ((j == 0 || j == n - 1) ? 0.5 : 1.0);
  }
  g.nodes[0] = 0.0;
  g.nodes[n - 1] = r_max;
  return g;
}

Index RadialGrid::locate_sq(double u) const {
  const Index n = size();
  if (u <= 0.0) return 0;
  const double x = u / (r_max * r_max);
  const double s = stretch == 1.5 ? std::cbrt(x) : std::pow(x, 0.5 / stretch);
  Index j = std::clamp<Index>(static_cast<Index>(s * (n - 1)), 0, n - 2);
  while (j > 0 && nodes[j] * nodes[j] > u) --j;
  while (j < n - 2 && nodes[j + 1] * nodes[j + 1] <= u) ++j;
  return j;
}

double RadialGrid::integrate(const std::function<double(double)>& phi) const {
  double s = 0.0;
  for (Index j = 0; j < size(); ++j) s += weights[j] * phi(nodes[j]);
  return s;
}

// -------------------------------------------------------- distribution

RadialDistribution RadialDistribution::from_function(const RadialGrid& grid,
                                                     const std::function<double(double)>& f) {
  RadialDistribution out{grid, VectorXd(grid.size())};
  for (Index j = 0; j < grid.size(); ++j) out.values[j] = f(grid.nodes[j]);
  out.validate();
  return out;
}

void RadialDistribution::validate() const {
  if (values.size() != grid.size()) throw ValidationError("radial distribution: size does not match grid");
  for (Index j = 0; j < values.size(); ++j)
    if (!std::isfinite(values[j]) || values[j] < 0.0)
      throw ValidationError("radial distribution: negative or non-finite value at node " + std::to_string(j));
}

// --------------------------------------------------------- interpolant

namespace {

// Fritsch-Butland slopes (the scheme used by PCHIP).
VectorXd monotone_slopes(const VectorXd& x, const VectorXd& y) {
  const Index n = x.size();
  VectorXd h = x.tail(n - 1) - x.head(n - 1);
  VectorXd delta = (y.tail(n - 1) - y.head(n - 1)).cwiseQuotient(h);
  VectorXd m = VectorXd::Zero(n);
  for (Index k = 1; k < n - 1; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) continue;
    const double w1 = 2.0 * h[k] + h[k - 1], w2 = h[k] + 2.0 * h[k - 1];
    m[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  const auto edge = [](double h0, double h1, double d0, double d1) {
    double e = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (e * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(e) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return e;
  };
  if (n == 2) {
    m[0] = m[1] = delta[0];
  } else {
    m[0] = edge(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }
  return m;
}

}  // namespace

RadialInterpolant::RadialInterpolant(const RadialDistribution& f) : grid_(f.grid) {
  u_ = grid_.nodes.cwiseAbs2();
  log_space_ = (f.values.array() > 0.0).all();
  y_ = log_space_ ? VectorXd(f.values.array().log()) : f.values;
  slope_ = monotone_slopes(u_, y_);
}

double RadialInterpolant::at_sq(double u) const {
  if (u > u_[u_.size() - 1] || u < 0.0) return 0.0;
  const Index j = grid_.locate_sq(u);
  const double h = u_[j + 1] - u_[j];
  const double t = (u - u_[j]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double y = (2 * t3 - 3 * t2 + 1) * y_[j] + (t3 - 2 * t2 + t) * h * slope_[j] +
                   (-2 * t3 + 3 * t2) * y_[j + 1] + (t3 - t2) * h * slope_[j + 1];
  // The monotone scheme cannot undershoot nonnegative data; the guard only
  // absorbs rounding.
  return log_space_ ? std::exp(y) : std::max(y, 0.0);
}

// ---------------------------------------------------------- maxwellian

RadialDistribution maxwellian(const RadialGrid& grid) {
  const double c = std::pow(std::numbers::pi, -0.5 * grid.d);
  auto m = RadialDistribution::from_function(grid, [c](double r) { return c * std::exp(-r * r); });
  const double deficit = std::abs(1.0 - m.mass());
  if (deficit > 1e-4)
    throw ConfigError("maxwellian: grid truncation loses mass " + std::to_string(deficit) +
                      " (increase r_max or n)");
  return m;
}

// ---------------------------------------------------------------- loss

double loss_kernel(int d, double r, double rp) {
  if (r <= 0.0) return rp;
  if (rp <= 0.0) return r;
  if (d == 3) {
    const double a = r + rp, b = std::abs(r - rp);
    return (a * a * a - b * b * b) / (6.0 * r * rp);
  }
  if (d == 2) {
    const double s = r + rp;
    return (2.0 / std::numbers::pi) * s * std::comp_ellint_2(2.0 * std::sqrt(r * rp) / s);
  }
  return quad::sphere_average(
      [r, rp](double x) { return std::sqrt(std::max(r * r + rp * rp - 2.0 * r * rp * x, 0.0)); }, d, 1e-12);
}

double loss_intensity(const RadialDistribution& f, double r) {
  double s = 0.0;
  const auto& g = f.grid;
  for (Index j = 0; j < g.size(); ++j)
    if (f.values[j] != 0.0) s += g.weights[j] * f.values[j] * loss_kernel(g.d, r, g.nodes[j]);
  return s;
}

VectorXd loss_intensity_nodes(const RadialDistribution& f) {
  VectorXd out(f.grid.size());
  for (Index i = 0; i < out.size(); ++i) out[i] = loss_intensity(f, f.grid.nodes[i]);
  return out;
}

// ---------------------------------------------------------------- gain

void GainOrders::validate() const {
  if (radial < 8 || polar < 8 || sigma < 8)
    throw ConfigError("gain quadrature: at least 8 points per axis required");
}

namespace {

double gain_with(const RadialInterpolant& gi, const RadialInterpolant& fi, int d, double r_max, double r,
                 const GainOrders& orders) {
  double s = 0.0;
  detail::for_each_gain_point(d, r, r_max, orders, [&](double w, double u1, double u2) {
    const double gv = gi.at_sq(u1);
    if (gv == 0.0) return;
    s += w * gv * fi.at_sq(u2);
  });
  return s;
}

void check_same_grid(const RadialGrid& a, const RadialGrid& b) {
  if (a.d != b.d || a.size() != b.size() || a.r_max != b.r_max || a.stretch != b.stretch)
    throw ValidationError("radial operands live on different grids");
}

}  // namespace

double gain(const RadialDistribution& g, const RadialDistribution& f, double r, const GainOrders& orders) {
  orders.validate();
  check_same_grid(g.grid, f.grid);
  return gain_with(RadialInterpolant(g), RadialInterpolant(f), f.grid.d, f.grid.r_max, r, orders);
}

VectorXd gain_nodes(const RadialDistribution& g, const RadialDistribution& f, const GainOrders& orders) {
  orders.validate();
  check_same_grid(g.grid, f.grid);
  const RadialInterpolant gi(g), fi(f);
  VectorXd out(f.grid.size());
  for (Index i = 0; i < out.size(); ++i)
    out[i] = gain_with(gi, fi, f.grid.d, f.grid.r_max, f.grid.nodes[i], orders);
  return out;
}

RadialField annihilation_apply(const RadialDistribution& f, double alpha, const GainOrders& orders) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("annihilation_apply: alpha must lie in [0, 1]");
  const VectorXd loss = f.values.cwiseProduct(loss_intensity_nodes(f));
  if (alpha == 1.0) return {f.grid, -loss};
  return {f.grid, (1.0 - alpha) * gain_nodes(f, f, orders) - loss};
}

// ------------------------------------------------------------ carleman

namespace {

// Per-coordinate standard deviation of a Gaussian with the same energy.
double proposal_width(const RadialDistribution& f) {
  const double m0 = f.mass();
  const double m1 = f.grid.weights.dot(f.values.cwiseProduct(f.grid.nodes.cwiseAbs2()));
  return 1.2 * std::sqrt(m1 / (f.grid.d * m0));
}

double hard_sphere_carleman_kernel(int d, double z_norm, double rho) {
  const double big = std::sqrt(z_norm * z_norm + rho * rho);
  return std::pow(2.0, d - 1) * std::pow(big, 3 - d) / (rho * quad::sphere_area(d));
}

double gaussian_log_density(double sq, double sigma, int dim) {
  return -0.5 * sq / (sigma * sigma) - dim * std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
}

// Shared sampler; `fixed_w` selects the delta_0 specialization.
MonteCarloEstimate carleman_sampler(const RadialDistribution* g, const RadialDistribution& f, double r,
                                    std::int64_t samples, std::uint64_t seed) {
  if (samples < 10000) throw ConfigError("carleman sampler: at least 1e4 samples required");
  MonteCarloEstimate est;
  est.samples = samples;
  const int d = f.grid.d;
  if (f.mass() <= 0.0 || (g && g->mass() <= 0.0)) return est;

  const RadialInterpolant fi(f);
  std::optional<RadialInterpolant> gi;
  double sg = 0.0;
  if (g) {
    check_same_grid(g->grid, f.grid);
    gi.emplace(*g);
    sg = proposal_width(*g);
  }
  const double sz = proposal_width(f);

  Rng rng(seed);
  VectorXd v = VectorXd::Zero(d);
  v[0] = r;
  VectorXd w(d), n(d), pv(d), z(d), e(d);
  double sum = 0.0, sum2 = 0.0;
  for (std::int64_t s = 0; s < samples; ++s) {
    double weight = 1.0;
    for (;;) {
      if (g) {
        rng.fill_normal(w);
        w *= sg;
        const double gw = gi->at_sq(w.squaredNorm());
        weight = gw == 0.0 ? 0.0 : gw / std::exp(gaussian_log_density(w.squaredNorm(), sg, d));
      } else {
        w.setZero();
      }
      n = v - w;
      if (n.norm() >= 1e-12) break;
      ++est.degenerate_resamples;
    }
    double term = 0.0;
    if (weight != 0.0) {
      const double rho = n.norm();
      n /= rho;
      pv = v - v.dot(n) * n;  // projection of v on the plane n^perp
      // Gaussian step inside n^perp: project an ambient Gaussian.
      rng.fill_normal(e);
      e -= e.dot(n) * n;
      e *= sz;
      z = pv + e;
      const double fz = fi.at_sq((v - z).squaredNorm());
      if (fz != 0.0) {
        const double q = std::exp(gaussian_log_density(e.squaredNorm(), sz, d - 1));
        term = weight * hard_sphere_carleman_kernel(d, z.norm(), rho) * fz / q;
      }
    }
    sum += term;
    sum2 += term * term;
  }
  const double mean = sum / samples;
  est.value = mean;
  est.std_error = std::sqrt(std::max(sum2 / samples - mean * mean, 0.0) / (samples - 1));
  return est;
}

}  // namespace

MonteCarloEstimate gain_carleman_mc(const RadialDistribution& g, const RadialDistribution& f, double r,
                                    std::int64_t samples, std::uint64_t seed) {
  return carleman_sampler(&g, f, r, samples, seed);
}

MonteCarloEstimate gamma_b_carleman_mc(const RadialDistribution& f, double r, std::int64_t samples,
                                       std::uint64_t seed) {
  return carleman_sampler(nullptr, f, r, samples, seed);
}

double gamma_b_direct(const RadialDistribution& f, double r) {
  const int d = f.grid.d;
  if (r <= 0.0) throw ValidationError("gamma_b_direct: r must be positive");
  const double top = f.grid.r_max * f.grid.r_max - r * r;
  if (top <= 0.0) return 0.0;
  const RadialInterpolant fi(f);
  const double area = quad::sphere_area(d - 1);
  const auto integrand = [&](double p) {
    return area * std::pow(p, d - 2) * hard_sphere_carleman_kernel(d, p, r) * fi.at_sq(r * r + p * p);
  };
  // Split at the grid nodes: the interpolant is only piecewise smooth.
  double s = 0.0, lo = 0.0;
  for (Index j = 1; j < f.grid.size(); ++j) {
    const double rj = f.grid.nodes[j];
    if (rj <= r) continue;
    const double hi = std::sqrt(std::min(rj * rj - r * r, top));
    if (hi > lo) s += quad::integrate(integrand, lo, hi, 1e-14, 10, 20);
    lo = hi;
  }
  return s;
}

// ------------------------------------------------------------------ io

std::string to_csv(const RadialDistribution& f) {
  std::ostringstream os;
  os << std::setprecision(17) << "r,f\n";
  for (Index j = 0; j < f.grid.size(); ++j) os << f.grid.nodes[j] << ',' << f.values[j] << '\n';
  return os.str();
}

RadialDistribution radial_from_csv(const std::string& text, int d, double stretch) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "r,f") throw ValidationError("radial csv: expected header r,f");
  std::vector<double> r, v;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError("radial csv: malformed row: " + line);
    r.push_back(std::stod(line.substr(0, comma)));
    v.push_back(std::stod(line.substr(comma + 1)));
  }
  if (r.size() < 8) throw ValidationError("radial csv: too few rows");
  RadialGrid grid = RadialGrid::make(d, static_cast<int>(r.size()), r.back(), stretch);
  for (std::size_t j = 0; j < r.size(); ++j)
    if (std::abs(grid.nodes[static_cast<Index>(j)] - r[j]) > 1e-9 * (1.0 + r[j]))
      throw ValidationError("radial csv: nodes do not match a stretched grid");
  RadialDistribution out{grid, Eigen::Map<VectorXd>(v.data(), static_cast<Index>(v.size()))};
  out.validate();
  return out;
}

std::string to_json(const RadialDistribution& f) {
  nlohmann::json j;
  j["d"] = f.grid.d;
  j["n"] = f.grid.size();
  j["r_max"] = f.grid.r_max;
  j["stretch"] = f.grid.stretch;
  j["r"] = std::vector<double>(f.grid.nodes.data(), f.grid.nodes.data() + f.grid.size());
  j["f"] = std::vector<double>(f.values.data(), f.values.data() + f.values.size());
  return j.dump(2);
}

RadialDistribution radial_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RadialGrid grid = RadialGrid::make(j.at("d").get<int>(), j.at("n").get<int>(), j.at("r_max").get<double>(),
                                     j.at("stretch").get<double>());
  auto v = j.at("f").get<std::vector<double>>();
  if (static_cast<Index>(v.size()) != grid.size()) throw ValidationError("radial json: value count mismatch");
  RadialDistribution out{grid, Eigen::Map<VectorXd>(v.data(), grid.size())};
  out.validate();
  return out;
}

}  // namespace annihilation
