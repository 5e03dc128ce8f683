#pragma once

// Three-dimensional reconstruction of w = grad Psi x grad Theta and curl w from
// a ladder of solved surfaces, plus finite-difference vector calculus used to
// check it.
//
// On each level the covariant components
//   w_mu  = J (g_munu Theta_mu - g_mumu Theta_nu)
//   w_nu  = J (g_nunu Theta_mu - g_munu Theta_nu)
//   w_Psi = J (g_nuPsi Theta_mu - g_muPsi Theta_nu)
// are sampled at the nodes. In-surface derivatives are spectral; Psi
// derivatives are centred differences across levels (one-sided second order
// at the ends). The normal component d_mu w_nu - d_nu w_mu equals L Theta and
// is taken from the same dealiased operator used by the solver. Values between
// levels come from Lagrange interpolation in Psi through the four nearest
// levels (three if the stack has only three).

#include <functional>
#include <string>
#include <vector>

#include "clebsch/exec.hpp"
#include "clebsch/geometry.hpp"
#include "clebsch/pde.hpp"
#include "clebsch/profile.hpp"
#include "clebsch/spectral.hpp"

namespace clebsch {

struct StackLevel {
  double psi = 0.0;
  EllipticCoefficients coeffs;
  SurfaceSolution solution;
  Field2D w_mu, w_nu, w_psi;  // nodal covariant components
  Spectrum rho, rho_mu, rho_nu;
  Spectrum dmu_w_psi, dnu_w_psi, normal_curl;
  Spectrum dpsi_w_mu, dpsi_w_nu;
};

struct StackOptions {
  int M = 1, N = 0;
  SolveOptions solve;
};

class FieldStack {
 public:
  SurfaceFamily family;
  PeriodicGrid grid;
  int M = 1, N = 0;
  std::vector<StackLevel> levels;

  explicit FieldStack(SurfaceFamily f) : family(std::move(f)) {}

  double psi_min() const { return levels.front().psi; }
  double psi_max() const { return levels.back().psi; }
  // Range where the curl is available with centred Psi differences.
  double curl_psi_min() const { return levels[1].psi; }
  double curl_psi_max() const { return levels[levels.size() - 2].psi; }
};

// Solves every level (concurrently on the parallel path) and precomputes the
// spectra above. Levels must be strictly increasing, at least three.
FieldStack build_stack(const SurfaceFamily& family, const std::vector<double>& psi_levels,
                       const PeriodicGrid& grid, const StackOptions& opt = {},
                       Exec exec = Exec::serial);

// Assembles a stack from already solved surfaces (e.g. re-imported ones).
FieldStack stack_from_solutions(const SurfaceFamily& family, std::vector<SurfaceSolution> sols,
                                Exec exec = Exec::serial);

// Everything known about the field at one curvilinear point.
struct StackSample {
  ToroidalCoords coords;
  Vec3 point;
  double theta_mu = 0.0, theta_nu = 0.0;
  Vec3 w;
  Vec3 w_clebsch;  // grad Psi x (Theta_mu grad mu + Theta_nu grad nu)
  Vec3 grad_psi;
  bool has_curl = false;
  Vec3 curl_w;
};

// w = J (Theta_mu e_nu - Theta_nu e_mu). Throws ExtrapolationError if psi is
// outside [psi_min, psi_max]; the curl additionally needs
// [curl_psi_min, curl_psi_max] and is skipped (has_curl = false) otherwise
// unless want_curl is set, in which case it throws.
StackSample sample_stack(const FieldStack& stack, const ToroidalCoords& c, bool want_curl);
Vec3 reconstruct_w(const FieldStack& stack, const ToroidalCoords& c);
Vec3 reconstruct_curl_w(const FieldStack& stack, const ToroidalCoords& c);

// Batch evaluation at Cartesian points.
std::vector<StackSample> sample_stack_points(const FieldStack& stack, const std::vector<Vec3>& pts,
                                             bool want_curl, Exec exec = Exec::serial);

// <Theta_mu> over D from the zero mode of the spectrum: 4 pi^2 (M + c_0(rho_mu)).
double theta_mu_integral(const SurfaceSolution& sol);
// Same integral by the trapezoid rule on the nodal values of Theta_mu.
double theta_mu_integral_nodal(const SurfaceSolution& sol);

struct CartesianVectorField {
  std::function<Vec3(const Vec3&)> eval;
  std::string provenance;  // "stack" or "analytic"
  Vec3 operator()(const Vec3& p) const { return eval(p); }
};

using ScalarField = std::function<double(const Vec3&)>;

// The returned evaluators refer to the stack, which must outlive them.
CartesianVectorField stack_w_field(const FieldStack& stack);
CartesianVectorField stack_curl_field(const FieldStack& stack);

// Central differences (second order). Exceptions from the evaluator (stencil
// outside the domain) propagate.
double divergence_fd(const CartesianVectorField& f, const Vec3& p, double h);
Vec3 curl_fd(const CartesianVectorField& f, const Vec3& p, double h);
Vec3 gradient_fd(const ScalarField& f, const Vec3& p, double h);
// d f_i / d x_j.
Mat3 jacobian_fd(const CartesianVectorField& f, const Vec3& p, double h);
// Richardson combination (4 D(h/2) - D(h)) / 3, fourth order.
Mat3 jacobian_fd_richardson(const CartesianVectorField& f, const Vec3& p, double h);
double divergence_fd_richardson(const CartesianVectorField& f, const Vec3& p, double h);
Vec3 curl_fd_richardson(const CartesianVectorField& f, const Vec3& p, double h);

// (curl w) x w.
Vec3 force_term(const CartesianVectorField& w, const CartesianVectorField& curl, const Vec3& p);
// |(curl w) x w - grad Psi|.
double mhd_residual(const CartesianVectorField& w, const CartesianVectorField& curl,
                    const SurfaceFamily& family, const Vec3& p);
// |(curl w) x w| / (|curl w| |w|); near zero for Beltrami or curl-free fields.
double beltrami_ratio(const CartesianVectorField& w, const CartesianVectorField& curl,
                      const Vec3& p);

// w' = f(Psi) w and its curl f curl w + f'(Psi) grad Psi x w. Throws
// std::domain_error when f is not differentiable on [psi_lo, psi_hi].
CartesianVectorField wrap_with_f(const CartesianVectorField& w, const SurfaceFamily& family,
                                 const ScalarProfile& f, double psi_lo, double psi_hi);
CartesianVectorField wrap_curl_with_f(const CartesianVectorField& w,
                                      const CartesianVectorField& curl,
                                      const SurfaceFamily& family, const ScalarProfile& f,
                                      double psi_lo, double psi_hi);

// 1/2 int |w|^2 dV = sum over levels of the direct surface energy, integrated
// in Psi by Simpson's rule (odd level count, uniform spacing) or trapezoids.
// delta, if given, perturbs rho on every level by t * delta[k].
double volume_energy(const FieldStack& stack, const std::vector<Field2D>* delta = nullptr,
                     double t = 0.0);

// Independent estimate: quasi-Monte Carlo over a Cartesian box enclosing the
// stack, integrand 1/2 |w|^2 on points with psi_min <= Psi <= psi_max.
double volume_energy_qmc(const FieldStack& stack, int n_points, Exec exec = Exec::serial);

}  // namespace clebsch
