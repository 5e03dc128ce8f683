#pragma once

// Per-surface periodic elliptic problem
//
//   L rho = d_mu[a_mm rho_mu - a_mn rho_nu] + d_nu[a_nn rho_nu - a_mn rho_mu] = S_{M,N},
//   a_mm = J g_nunu, a_mn = J g_munu, a_nn = J g_mumu,
//
// for Theta = M mu + N nu + rho with <rho> = 0, plus the Dirichlet variant.
//
// The periodic path is a Galerkin-spectral discretization: gradients are
// formed spectrally, multiplied by coefficients sampled on the 3/2-rule grid,
// and the flux divergence is truncated back to the base grid. The resulting
// operator is symmetric, and negative definite on zero-mean fields without
// Nyquist content.

#include <string>
#include <vector>

#include "clebsch/exec.hpp"
#include "clebsch/geometry.hpp"
#include "clebsch/grid.hpp"
#include "clebsch/spectral.hpp"

namespace clebsch {

struct EllipticCoefficients {
  double psi_level = 0.0;
  PeriodicGrid grid;
  Field2D a_mm, a_mn, a_nn;  // at base-grid nodes
  Field2D jacobian;
  Field2D jg_mu_psi, jg_nu_psi;  // J g_{mu Psi}, J g_{nu Psi}; only the field stack needs these
  PeriodicGrid fine;  // dealiasing grid
  std::vector<double> fine_mm, fine_mn, fine_nn;

  // Certificates over base and fine nodes.
  double min_lambda = 0.0;  // smallest eigenvalue of A = [[g_nunu, -g_munu], [-g_munu, g_mumu]]
  double min_det = 0.0;     // det A = |e_mu x e_nu|^2
  double min_jacobian = 0.0;
  double max_jacobian = 0.0;
  // Node-averaged coefficients; define the preconditioner.
  double mean_mm = 0.0, mean_mn = 0.0, mean_nn = 0.0;
};

// Throws AssemblyError (with node location) if J <= kJacobianMin or
// lambda_- <= 0 at any node; DegenerateCoordinatesError/InversionError from
// geometry propagate.
EllipticCoefficients assemble_coefficients(const SurfaceFamily& family, double psi_level,
                                           const PeriodicGrid& grid, Exec exec = Exec::serial);

inline constexpr double kCompatibilityTol = 1e-10;

// S_{M,N} = -{d_mu[a_mm M - a_mn N] + d_nu[a_nn N - a_mn M]}, i.e. -L applied
// to M mu + N nu. Throws CompatibilityError if |<S>| > compat_tol.
Field2D assemble_source(const EllipticCoefficients& coeffs, int M, int N,
                        double compat_tol = kCompatibilityTol);

// Discrete L on a base-grid field (Nyquist content of rho is ignored).
Field2D apply_operator(const EllipticCoefficients& coeffs, const Field2D& rho);

enum class BoundaryMode { periodic, dirichlet };

struct SolveOptions {
  double tol = 1e-8;  // relative to ||S||_inf
  int max_iter = 5000;
};

struct SurfaceSolution {
  double psi_level = 0.0;
  int M = 1, N = 0;
  BoundaryMode bc = BoundaryMode::periodic;
  Field2D rho;
  double residual_linf = 0.0;  // ||L rho - S||_inf
  double source_linf = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;  // relative, one per iteration
};

// Preconditioned CG on -L restricted to zero-mean fields; the iterate and
// residual are projected to zero mean every iteration. Stops once
// ||L rho - S||_inf <= tol ||S||_inf. A source at round-off level
// (||S||_inf <= 1e-13 max(n_mu, n_nu) max|a|) counts as S == 0 and gives rho = 0.
// Throws SolverError with the residual history on non-convergence.
// Round-off level of a vanishing source, 1e-13 max(n_mu, n_nu) max|a|.
double source_floor(const EllipticCoefficients& coeffs);

SurfaceSolution solve_periodic(const EllipticCoefficients& coeffs, const Field2D& source, int M,
                               int N, const SolveOptions& opt = {});

// Second-order finite differences on the closed square [0, 2pi]^2 with rho = 0
// on the boundary. Half-node coefficients are averages of nodal ones, the
// mixed term uses the symmetric nine-point stencil, and the sparse system is
// solved by CG (BiCGSTAB if CG stalls). The returned rho lives on the same
// periodic grid: its row i = 0 stands for both mu = 0 and mu = 2pi, which is
// consistent since both are zero.
SurfaceSolution solve_dirichlet(const EllipticCoefficients& coeffs, const Field2D& source, int M,
                                int N, const SolveOptions& opt = {});

// Residual of the Dirichlet system, ||L_fd rho - S||_inf over interior nodes.
double dirichlet_residual(const EllipticCoefficients& coeffs, const Field2D& rho,
                          const Field2D& source);

// One-sided boundary derivatives: d_mu at mu = 0 and mu = 2pi for each nu
// node, d_nu at nu = 0 and nu = 2pi for each mu node.
struct BoundaryDerivatives {
  std::vector<double> dmu_left, dmu_right;
  std::vector<double> dnu_bottom, dnu_top;
};

// Spectral derivative of the Fourier interpolant evaluated at both ends.
BoundaryDerivatives boundary_derivatives_spectral(const Field2D& rho);
// Second-order one-sided differences, treating row/column 0 as the value at
// both ends of the closed interval.
BoundaryDerivatives boundary_derivatives_fd(const Field2D& rho);

struct PeriodicityDefect {
  double d_mu = 0.0;  // max_nu |rho_mu(0, nu) - rho_mu(2pi, nu)|
  double d_nu = 0.0;  // max_mu |rho_nu(mu, 0) - rho_nu(mu, 2pi)|
};

PeriodicityDefect periodicity_defect(const BoundaryDerivatives& b);

// E_D = 1/2 int [grad rho^T a grad rho + 2 rho S + m^T a m], m = (M, N),
// a = [[a_mm, -a_mn], [-a_mn, a_nn]]. Quadratic terms use the dealiasing grid,
// so the discrete gradient with respect to nodal rho is h^2 (S - L rho).
double surface_energy(const EllipticCoefficients& coeffs, const Field2D& rho, int M, int N);
// Same functional before integration by parts: 1/2 int grad Theta^T a grad Theta.
double surface_energy_direct(const EllipticCoefficients& coeffs, const Field2D& rho, int M,
                             int N);

}  // namespace clebsch
