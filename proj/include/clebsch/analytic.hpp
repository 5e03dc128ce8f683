#pragma once

// Closed-form fields used as exact references.
//
//   non_solenoidal    w = f(Psi) grad(alpha), alpha = atan2(z, r - r0), Psi phase-perturbed
//   harmonic_product  w = f(Psi) xi, xi = grad(phi + eps x), Psi exp-sheared
//   conjugate_family  w = f(Psi) xi, xi = grad(phi + eps P), P = exp(m x) cos(m y)
//   equilibrium_nodiv w = sqrt(C - 2 Psi^2) grad(theta) + g(phi) grad(phi), Psi axisymmetric
//
// All gradients and curls below are analytic; the *_fd helpers in field.hpp
// provide the independent finite-difference side of every check.

#include <string>

#include "clebsch/field.hpp"
#include "clebsch/geometry.hpp"
#include "clebsch/profile.hpp"

namespace clebsch {

enum class AnalyticKind { non_solenoidal, harmonic_product, conjugate_family, equilibrium_nodiv };

std::string to_string(AnalyticKind k);
// Throws std::invalid_argument for unknown names.
AnalyticKind analytic_kind_from_string(const std::string& s);

struct AnalyticSolution {
  AnalyticKind kind = AnalyticKind::harmonic_product;
  double r0 = 1.0;
  double eps = 0.18;
  int m = 1;
  double C = 1.0;
  ScalarProfile f;  // f(Psi)
  ScalarProfile g;  // g(phi), equilibrium_nodiv only

  SurfaceFamily family() const;
  Vec3 w(const Vec3& p) const;
  Vec3 curl_w(const Vec3& p) const;
  // Closed-form divergence (zero for the solenoidal kinds).
  double div_w(const Vec3& p) const;

  CartesianVectorField w_field() const;
  CartesianVectorField curl_field() const;
};

struct NonSolenoidalSample {
  Vec3 w, curl_w, force;
  double div_w = 0.0;
  double lambda = 0.0;  // force = lambda grad Psi
};

// Throws DomainError on the z-axis and where r = r0, z = 0.
NonSolenoidalSample eval_nonsolenoidal(const AnalyticSolution& s, const Vec3& p);

// grad(phi) + eps grad(x) = (-y / r^2 + eps, x / r^2, 0).
Vec3 eval_harmonic_xi(double eps, const Vec3& p);

struct HarmonicSample {
  Vec3 w, curl_w, force;
  double xi2 = 0.0;  // |xi|^2 = (1 - 2 eps y + eps^2 r^2) / r^2
};

// force = -1/2 (f^2)' |xi|^2 grad Psi.
HarmonicSample eval_harmonic_solution(const AnalyticSolution& s, const Vec3& p);

struct ConjugateSample {
  Vec3 xi;
  double psi = 0.0;
  double P = 0.0, Q = 0.0;
};

// xi = grad(phi + eps P) and Psi of the conjugate-harmonic family.
ConjugateSample eval_conjugate_family(double r0, double eps, int m, const Vec3& p);
// P = exp(m x) cos(m y) and its harmonic conjugate Q = exp(m x) sin(m y).
double conjugate_P(int m, const Vec3& p);
double conjugate_Q(int m, const Vec3& p);

struct EquilibriumSample {
  Vec3 w, curl_w;
  double residual = 0.0;  // |(curl w) x w - grad Psi| with the closed-form curl
  double residual_fd = 0.0;  // same with a Richardson finite-difference curl
};

// Throws DomainError where C - 2 Psi^2 <= 0.
EquilibriumSample eval_equilibrium_nodiv(const AnalyticSolution& s, const Vec3& p,
                                         double h = 1e-3);

struct PressureBalance {
  Vec3 div_pi;      // finite-difference divergence of Pi
  Vec3 force;       // (curl w) x w
  double mismatch = 0.0;   // |div Pi - force|
  double form_defect = 0.0;  // |(1 - gamma) force - [-1/2 w^2 grad gamma + (w . grad gamma) w]|
  double gamma = 0.0;
};

// Pi^{ij} = (P - 1/2 gamma w^2) delta^{ij} + gamma w^i w^j with P = 0 and
// gamma = 1 - 1/f(Psi)^2; div Pi by central differences of step h.
// Throws DomainError if f vanishes at p.
PressureBalance pressure_divergence(const ScalarProfile& f, const SurfaceFamily& family,
                                    const CartesianVectorField& w,
                                    const CartesianVectorField& curl, const Vec3& p,
                                    double h = 1e-4);

}  // namespace clebsch
