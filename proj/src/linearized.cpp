#include "annihilation/linearized.hpp"

#include "gain_points.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numbers>
#include <string>

namespace annihilation {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

LinearizedMatrix assemble_linearized(const RadialGrid& grid, const GainOrders& orders) {
  if (grid.size() > kMaxLinearizedNodes)
    throw ConfigError("assemble_linearized: " + std::to_string(grid.size()) + " nodes exceeds the dense budget of " +
                      std::to_string(kMaxLinearizedNodes));
  orders.validate();
  const Index n = grid.size();
  const int d = grid.d;
  const RadialDistribution m = maxwellian(grid);
  const VectorXd lm = loss_intensity_nodes(m);
  const VectorXd u = grid.nodes.cwiseAbs2();
  const double umax = u[n - 1];
  const double norm = std::pow(std::numbers::pi, -0.5 * d);

  MatrixXd a = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const double ri = grid.nodes[i];
    a(i, i) -= lm[i];
    for (Index j = 0; j < n; ++j) a(i, j) -= m.values[i] * grid.weights[j] * loss_kernel(d, ri, grid.nodes[j]);

    // Gain: Q+(phi_j, M) + Q+(M, phi_j). With phi_j = M hat_j / M_j the
    // product of the two Maxwellian factors is M(v') M(v'*) = M(v) M(v*).
    const auto spread = [&](double uu, double w) {
      if (uu > umax) return;
      const Index k = grid.locate_sq(uu);
      const double t = (uu - u[k]) / (u[k + 1] - u[k]);
      a(i, k) += w * (1.0 - t) / m.values[k];
      a(i, k + 1) += w * t / m.values[k + 1];
    };
    detail::for_each_gain_point(d, ri, grid.r_max, orders, [&](double w, double u1, double u2) {
      if (u1 > umax || u2 > umax) return;
      const double mm = w * norm * norm * std::exp(-(u1 + u2));
      spread(u1, mm);
      spread(u2, mm);
    });
  }
  return {grid, a};
}

std::vector<std::complex<double>> spectrum(const LinearizedMatrix& mat) {
  if (!mat.matrix.allFinite()) throw NumericalError("spectrum: matrix has non-finite entries");
  Eigen::EigenSolver<MatrixXd> solver(mat.matrix, false);
  if (solver.info() != Eigen::Success)
    throw NumericalError("spectrum: eigensolver did not converge (n = " + std::to_string(mat.matrix.rows()) + ")");
  const auto ev = solver.eigenvalues();
  std::vector<std::complex<double>> out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end(), [](auto x, auto y) {
    return x.real() != y.real() ? x.real() > y.real() : x.imag() > y.imag();
  });
  return out;
}

double relative_asymmetry(const LinearizedMatrix& mat) {
  const Index n = mat.grid.size();
  const RadialDistribution m = maxwellian(mat.grid);
  VectorXd s = (mat.grid.weights.array() / m.values.array()).sqrt();
  const MatrixXd core = mat.matrix.bottomRightCorner(n - 1, n - 1);
  const VectorXd sc = s.tail(n - 1);
  const MatrixXd c = sc.asDiagonal() * core * sc.cwiseInverse().asDiagonal();
  return (c - c.transpose()).norm() / c.norm();
}

}  // namespace annihilation
