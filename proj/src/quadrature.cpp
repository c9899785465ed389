#include "annihilation/quadrature.hpp"

#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace annihilation::quad {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

Rule compute_gauss_legendre(int n) {
  Rule r{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

}  // namespace

const Rule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

Rule gauss_legendre(int n, double a, double b) {
  const Rule& ref = gauss_legendre(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  return {(mid + half * ref.nodes.array()).matrix(), half * ref.weights};
}

double sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

double polar_density(int d) { return sphere_area(d - 1) / sphere_area(d); }

namespace {

double panel(const std::function<double(double)>& f, double a, double b, const Rule& r) {
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(mid + half * r.nodes[i]);
  return half * s;
}

double adapt(const std::function<double(double)>& f, double a, double b, double whole, double tol,
             const Rule& r, int depth) {
  const double m = 0.5 * (a + b);
  const double left = panel(f, a, m, r), right = panel(f, m, b, r);
  if (depth <= 0 || std::abs(left + right - whole) <= tol) return left + right;
  return adapt(f, a, m, left, 0.5 * tol, r, depth - 1) + adapt(f, m, b, right, 0.5 * tol, r, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol, int order,
                 int max_depth) {
  const Rule& r = gauss_legendre(order);
  return adapt(f, a, b, panel(f, a, b, r), tol, r, max_depth);
}

double sphere_average(const std::function<double(double)>& F, int d, double tol) {
  const auto integrand = [&](double theta) {
    const double s = std::sin(theta);
    return F(std::cos(theta)) * (d == 2 ? 1.0 : std::pow(s, d - 2));
  };
  return polar_density(d) * integrate(integrand, 0.0, std::numbers::pi, tol);
}

}  // namespace annihilation::quad
