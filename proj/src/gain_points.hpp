#pragma once

#include "annihilation/quadrature.hpp"
#include "annihilation/radial.hpp"

#include <cmath>
#include <numbers>

namespace annihilation::detail {

/// Visits the tensor quadrature points of the gain integral at |v| = r.
/// Each call receives (weight, |v'|^2, |v'*|^2); Q+(g, f)(r) is then the sum
/// of weight * g(v') f(v'*). Points with |v'| or |v'*| beyond r_max cannot
/// contribute for densities supported on the grid and are skipped by the
/// choice of the |v*| range, r^2 + |v*|^2 <= 2 r_max^2.
template <class Visit>
void for_each_gain_point(int d, double r, double r_max, const GainOrders& orders, Visit&& visit) {
  const double rs_max = std::sqrt(std::max(2.0 * r_max * r_max - r * r, 0.0));
  if (rs_max <= 0.0) return;
  const quad::Rule rr = quad::gauss_legendre(orders.radial, 0.0, rs_max);
  const quad::Rule th = quad::gauss_legendre(orders.polar, 0.0, std::numbers::pi);
  const quad::Rule ph = quad::gauss_legendre(orders.sigma, 0.0, std::numbers::pi);
  const double outer = quad::sphere_area(d - 1);
  const double inner = quad::polar_density(d);
  const auto sin_pow = [d](double a) { return d == 2 ? 1.0 : std::pow(std::sin(a), d - 2); };

  Eigen::VectorXd ph_w(ph.nodes.size()), ph_c(ph.nodes.size());
  for (Eigen::Index k = 0; k < ph.nodes.size(); ++k) {
    ph_w[k] = ph.weights[k] * sin_pow(ph.nodes[k]) * inner;
    ph_c[k] = std::cos(ph.nodes[k]);
  }
  for (Eigen::Index i = 0; i < rr.nodes.size(); ++i) {
    const double rs = rr.nodes[i];
    const double wr = rr.weights[i] * outer * std::pow(rs, d - 1);
    const double half_sum = 0.5 * (r * r + rs * rs);
    for (Eigen::Index j = 0; j < th.nodes.size(); ++j) {
      const double c = std::cos(th.nodes[j]);
      const double u = std::sqrt(std::max(r * r + rs * rs - 2.0 * r * rs * c, 0.0));
      const double V = 0.5 * std::sqrt(std::max(r * r + rs * rs + 2.0 * r * rs * c, 0.0));
      const double w = wr * th.weights[j] * sin_pow(th.nodes[j]) * u;
      if (w == 0.0) continue;
      for (Eigen::Index k = 0; k < ph.nodes.size(); ++k) {
        const double cross = u * V * ph_c[k];
        visit(w * ph_w[k], std::max(half_sum + cross, 0.0), std::max(half_sum - cross, 0.0));
      }
    }
  }
}

}  // namespace annihilation::detail
