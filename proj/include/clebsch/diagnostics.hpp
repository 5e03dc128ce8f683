#pragma once

// Symmetry diagnostics: continuous Euclidean isometries x -> x + s (a + b x x),
// reflections, and the quasisymmetry test for w = f(Psi) xi.

#include <array>
#include <functional>
#include <vector>

#include "clebsch/analytic.hpp"
#include "clebsch/exec.hpp"
#include "clebsch/field.hpp"
#include "clebsch/geometry.hpp"

namespace clebsch {

struct IsometryGenerator {
  Vec3 a = Vec3::Zero();  // translation
  Vec3 b = Vec3::Zero();  // rotation
  Vec3 at(const Vec3& p) const { return a + b.cross(p); }
  // Six-vector (a, b).
  Eigen::Matrix<double, 6, 1> stacked() const;
};

using GradientField = std::function<Vec3(const Vec3&)>;

// (a + b x p) . grad Psi(p).
double lie_scalar(const GradientField& grad, const IsometryGenerator& gen, const Vec3& p);
double lie_scalar(const SurfaceFamily& family, const IsometryGenerator& gen, const Vec3& p);

inline constexpr double kNullspaceTau = 1e-6;

struct SymmetryReport {
  std::array<double, 6> singular_values{};  // descending
  std::array<double, 6> normalized{};       // sigma_i / sigma_1
  int nullspace_dim = 0;
  std::vector<IsometryGenerator> generators;  // unit right singular vectors of near-null sigma
  int samples = 0;
  double tau = kNullspaceTau;
  bool degenerate_samples = false;  // fewer than 6 points or a coplanar cloud
};

// Rows [grad Psi, p x grad Psi] (so that row . (a, b) = lie_scalar), SVD,
// nullspace_dim = #{sigma_i < tau sigma_1}.
SymmetryReport isometry_nullspace(const GradientField& grad, const std::vector<Vec3>& pts,
                                  double tau = kNullspaceTau, Exec exec = Exec::serial);

// |cos| between a generator and a reference six-vector.
double generator_similarity(const IsometryGenerator& g, const IsometryGenerator& ref);

// (a + b x p) . grad(w^2) for w = f(Psi) xi, through
// w^2 [gen . grad log f^2 + gen . grad log |xi|^2] with analytic gradients
// (grad |xi|^2 = 2 H xi, H the Hessian of the potential of xi).
// Throws DomainError if w = 0 at p.
double lie_modulus_w2(const AnalyticSolution& s, const IsometryGenerator& gen, const Vec3& p);
// Central difference of |w|^2 along the generator: [w^2(p + t v) - w^2(p - t v)] / 2t.
double lie_modulus_w2_fd(const CartesianVectorField& w, const IsometryGenerator& gen,
                         const Vec3& p, double t = 1e-4);
// (4 D(t/2) - D(t)) / 3 with D the central difference above.
double lie_modulus_w2_fd_richardson(const CartesianVectorField& w, const IsometryGenerator& gen,
                                    const Vec3& p, double t = 1e-3);
// grad |xi|^2 for the two harmonic kinds.
Vec3 grad_xi2(const AnalyticSolution& s, const Vec3& p);
Vec3 analytic_xi(const AnalyticSolution& s, const Vec3& p);

// max over samples of |Psi(x) - Psi(R x)|, R the reflection in n . x = c.
// Throws std::invalid_argument unless |n| = 1.
double reflection_defect(const std::function<double(const Vec3&)>& psi, const Vec3& n, double c,
                         const std::vector<Vec3>& samples);

struct QuasisymmetryReport {
  double max_div_u = 0.0;           // u = xi x grad Psi, central differences
  double max_u_grad_w2 = 0.0;       // |u . grad w^2|
  double surface_const_defect = 0.0;  // max over surfaces of spread of (u x w) . grad Psi / |grad Psi|^2
  double max_tangential = 0.0;      // |(u x w) x grad Psi|
  double max_tangency = 0.0;        // |xi . grad Psi| / (|xi| |grad Psi|)
  int surfaces = 0;
  int points_per_surface = 0;
  bool quasisymmetric(double tol) const {
    return max_u_grad_w2 <= tol && surface_const_defect <= tol && max_tangential <= tol;
  }
};

// Samples each level on an n x n (mu, nu) lattice.
QuasisymmetryReport quasisymmetry_check(const CartesianVectorField& xi,
                                        const CartesianVectorField& w, const SurfaceFamily& family,
                                        const std::vector<double>& psi_levels, int n,
                                        double h = 1e-4, Exec exec = Exec::serial);

}  // namespace clebsch
