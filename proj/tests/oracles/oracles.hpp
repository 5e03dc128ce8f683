#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls the library's metric, spectral or solver code.

#include <Eigen/Dense>

#include <vector>

namespace oracle {

using Vec3 = Eigen::Vector3d;

// Displaced-ellipse tori in closed form:
//   r - r0 = t cos(nu), z = t sin(nu),
//   t^2 [cos^2 nu + E sin^2 nu (1 - eps sin(m mu))^2] = 2 Psi.
struct DisplacedEllipse {
  double r0 = 1.0, E = 1.0, eps = 0.0;
  int m = 1;
  Vec3 point(double mu, double nu, double psi) const;
};

// a_mm = J g_nunu, a_mn = J g_munu, a_nn = J g_mumu from Richardson
// differences of the parametrization.
struct NodeCoeffs {
  double mm, mn, nn, jac;
};
NodeCoeffs coefficients(const DisplacedEllipse& s, double mu, double nu, double psi);

// Dense mode-space Galerkin system on an n x n grid: coefficients sampled on
// the 3/2 grid and transformed by a direct DFT, the matrix
//   L_kq = -[k_mu (a_mm q_mu - a_mn q_nu) + k_nu (a_nn q_nu - a_mn q_mu)]^_{k-q}
// over non-Nyquist modes with the zero mode removed, LU-solved. Returns nodal
// rho in row-major order (nu fastest).
std::vector<double> dense_galerkin_solve(const DisplacedEllipse& s, double psi, int n, int M,
                                         int N);

// Second-order periodic finite differences (nine-point mixed term, half-node
// averages), mean fixed by a bordering row, sparse LU. Nodal rho, nu fastest.
std::vector<double> fd_periodic_solve(const DisplacedEllipse& s, double psi, int n, int M, int N);

// Exact axisymmetric field for Theta = mu on circular tori about r0:
// w = grad(Psi) x grad(phi) and its curl -(1/r + r0/r^2) e_phi.
Vec3 axisym_w(double r0, const Vec3& p);
Vec3 axisym_curl_w(double r0, const Vec3& p);

}  // namespace oracle
