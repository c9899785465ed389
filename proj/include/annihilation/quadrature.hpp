#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>

namespace annihilation::quad {

struct Rule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// n-point Gauss-Legendre rule on [-1, 1]. Rules are cached per n.
const Rule& gauss_legendre(int n);

/// The same rule mapped affinely onto [a, b].
Rule gauss_legendre(int n, double a, double b);

/// |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2).
double sphere_area(int d);

/// Ratio |S^{d-2}| / |S^{d-1}|, the density of cos(theta) under the uniform
/// law on S^{d-1} after integrating over theta with weight sin^{d-2}(theta).
double polar_density(int d);

/// Adaptive Gauss-Legendre: compare the n-point rule on a panel with the
/// sum over its two halves and bisect until they agree to `tol`.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12, int order = 10, int max_depth = 40);

/// Average of F(u . sigma) over sigma uniform on S^{d-1}, computed in the
/// polar angle so that d = 2 has no endpoint singularity.
double sphere_average(const std::function<double(double)>& F, int d, double tol = 1e-12);

}  // namespace annihilation::quad
