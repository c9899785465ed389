#pragma once

#include "annihilation/radial.hpp"

#include <Eigen/Core>

#include <complex>
#include <vector>

namespace annihilation {

/// Collocation matrix of L(h) = Q(h, M) + Q(M, h) on the isotropic sector.
///
/// Column j is L applied to the basis function
///   phi_j(r) = M(r) hat_j(r^2) / M(r_j),
/// a hat function in the energy variable u = r^2 weighted by the Maxwellian,
/// so nodal vectors interpolate h/M piecewise linearly in u. Both M and
/// |xi|^2 M are reproduced exactly by this basis, which keeps the two
/// collision invariants of the isotropic sector in the discrete kernel.
struct LinearizedMatrix {
  RadialGrid grid;
  Eigen::MatrixXd matrix;
};

/// Largest grid accepted by the dense assembly.
inline constexpr Eigen::Index kMaxLinearizedNodes = 128;

LinearizedMatrix assemble_linearized(const RadialGrid& grid, const GainOrders& orders = {});

/// All eigenvalues, sorted by real part in descending order.
std::vector<std::complex<double>> spectrum(const LinearizedMatrix& mat);

/// ||S - S^T||_F / ||S||_F for S = D^{1/2} A D^{-1/2}, D = diag(w_j / M_j),
/// the discrete form of L^2(M^{-1}) self-adjointness. The origin node has
/// zero quadrature weight and is left out.
double relative_asymmetry(const LinearizedMatrix& mat);

}  // namespace annihilation
