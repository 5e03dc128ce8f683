#include <gtest/gtest.h>

#include <cmath>

#include "clebsch/analytic.hpp"
#include "clebsch/errors.hpp"

using namespace clebsch;

namespace {

AnalyticSolution make(AnalyticKind kind, double eps, int m, ScalarProfile f) {
  AnalyticSolution s;
  s.kind = kind;
  s.eps = eps;
  s.m = m;
  s.f = std::move(f);
  return s;
}

AnalyticSolution fig1() { return make(AnalyticKind::non_solenoidal, 0.1, 4, ScalarProfile::parse("poly:0,1")); }
AnalyticSolution fig4() { return make(AnalyticKind::harmonic_product, 0.18, 1, ScalarProfile::parse("exp:1,0.5")); }

std::vector<Vec3> level_points(const SurfaceFamily& fam, double psi, int n) {
  std::vector<Vec3> out;
  for (int k = 0; k < n; ++k) out.push_back(to_cartesian(fam, {0.37 + 0.61 * k, 0.21 + 0.83 * k, psi}));
  return out;
}

}  // namespace

TEST(Analytic, KindNames) {
  for (auto k : {AnalyticKind::non_solenoidal, AnalyticKind::harmonic_product,
                 AnalyticKind::conjugate_family, AnalyticKind::equilibrium_nodiv})
    EXPECT_EQ(analytic_kind_from_string(to_string(k)), k);
  EXPECT_THROW(analytic_kind_from_string("beltrami"), std::invalid_argument);
}

TEST(Analytic, NonSolenoidalForceIsNormal) {
  AnalyticSolution s = fig1();
  SurfaceFamily fam = s.family();
  CartesianVectorField w = s.w_field();
  for (const auto& p : level_points(fam, 0.1, 12)) {
    NonSolenoidalSample e = eval_nonsolenoidal(s, p);
    Vec3 g = grad_psi(fam, p);
    EXPECT_LT((e.force - e.lambda * g).norm(), 1e-12 * e.force.norm());
    EXPECT_NEAR(e.div_w, divergence_fd_richardson(w, p, 1e-3), 1e-9);
    EXPECT_LT((curl_fd_richardson(w, p, 1e-3) - e.curl_w).norm(), 1e-8);
  }
  // Divergence is generically nonzero but vanishes on the midplane.
  Vec3 mid = to_cartesian(fam, {0.4, 0.0, 0.1});
  EXPECT_NEAR(mid.z(), 0.0, 1e-14);
  EXPECT_LT(std::abs(eval_nonsolenoidal(s, mid).div_w), 1e-12);
  double max_div = 0.0;
  for (const auto& p : level_points(fam, 0.1, 40)) max_div = std::max(max_div, std::abs(s.div_w(p)));
  EXPECT_GT(max_div, 1e-2);
  EXPECT_THROW(eval_nonsolenoidal(s, Vec3(1.0, 0.0, 0.0)), DomainError);
}

TEST(Analytic, HarmonicProductSolvesForceBalance) {
  AnalyticSolution s = fig4();
  SurfaceFamily fam = s.family();
  CartesianVectorField w = s.w_field();
  for (const auto& p : level_points(fam, 0.08, 12)) {
    HarmonicSample h = eval_harmonic_solution(s, p);
    Vec3 xi = eval_harmonic_xi(0.18, p);
    Vec3 g = grad_psi(fam, p);
    EXPECT_LT(std::abs(xi.dot(g)) / (xi.norm() * g.norm()), 1e-12);
    double r2 = p.x() * p.x() + p.y() * p.y();
    EXPECT_NEAR(h.xi2, (1 - 2 * 0.18 * p.y() + 0.18 * 0.18 * r2) / r2, 1e-13);
    // -1/2 (f^2)' |xi|^2 grad Psi with f = exp(Psi / 2): (f^2)' = f^2.
    double f2 = std::exp(psi_value(fam, p));
    EXPECT_LT((h.force + 0.5 * f2 * h.xi2 * g).norm(), 1e-12 * h.force.norm());
    Vec3 fd_force = curl_fd_richardson(w, p, 1e-3).cross(h.w);
    EXPECT_LT((fd_force - h.force).norm(), 1e-7);
    EXPECT_LT(std::abs(divergence_fd_richardson(w, p, 1e-3)), 1e-9);
  }
  AnalyticSolution flat = make(AnalyticKind::harmonic_product, 0.18, 1, ScalarProfile::constant(2.0));
  EXPECT_LT(eval_harmonic_solution(flat, Vec3(1.2, 0.1, 0.2)).force.norm(), 1e-15);
}

TEST(Analytic, ConjugatePairAndPotential) {
  const int m = 1;
  const double eps = 0.05, h = 1e-5;
  Vec3 p(1.05, 0.3, 0.12);
  auto d = [&](double (*fn)(int, const Vec3&), int axis) {
    Vec3 e = Vec3::Zero();
    e[axis] = h;
    return (fn(m, p + e) - fn(m, p - e)) / (2 * h);
  };
  EXPECT_NEAR(d(conjugate_P, 0), d(conjugate_Q, 1), 1e-9);
  EXPECT_NEAR(d(conjugate_P, 1), -d(conjugate_Q, 0), 1e-9);
  ConjugateSample c = eval_conjugate_family(1.0, eps, m, p);
  ScalarField potential = [&](const Vec3& x) { return std::atan2(x.y(), x.x()) + eps * conjugate_P(m, x); };
  EXPECT_LT((gradient_fd(potential, p, 1e-5) - c.xi).norm(), 1e-9);
  EXPECT_NEAR(c.psi, psi_value(surface::ConjugateHarmonic{1.0, eps, m}, p), 1e-15);
}

TEST(Analytic, EquilibriumWithoutDivergenceConstraint) {
  AnalyticSolution s;
  s.kind = AnalyticKind::equilibrium_nodiv;
  s.C = 1.0;
  s.g = ScalarProfile::parse("trig:0,0,1");
  SurfaceFamily fam = s.family();
  double max_div = 0.0;
  for (const auto& p : level_points(fam, 0.1, 20)) {
    EquilibriumSample e = eval_equilibrium_nodiv(s, p);
    EXPECT_LT(e.residual, 1e-12);
    EXPECT_LT(e.residual_fd, 1e-7);
    EXPECT_NEAR(s.div_w(p), divergence_fd_richardson(s.w_field(), p, 1e-3), 1e-8);
    max_div = std::max(max_div, std::abs(s.div_w(p)));
  }
  EXPECT_GT(max_div, 1e-2);
  s.C = 1e-3;
  EXPECT_THROW(eval_equilibrium_nodiv(s, to_cartesian(fam, {0.0, 1.0, 0.1})), DomainError);
}

TEST(Analytic, AnisotropicPressureBalance) {
  AnalyticSolution s = fig4();
  SurfaceFamily fam = s.family();
  for (const auto& p : level_points(fam, 0.08, 6)) {
    PressureBalance b = pressure_divergence(s.f, fam, s.w_field(), s.curl_field(), p);
    EXPECT_LT(b.mismatch, 1e-6);
    EXPECT_LT(b.form_defect, 1e-12 * std::max(1.0, b.force.norm()));
    EXPECT_NEAR(b.gamma, 1 - std::exp(-psi_value(fam, p)), 1e-15);
  }
  // f == 1 is isotropic with zero pressure: the divergence vanishes and the
  // whole force is unbalanced.
  AnalyticSolution flat = make(AnalyticKind::harmonic_product, 0.18, 1, ScalarProfile());
  Vec3 p = to_cartesian(fam, {1.0, 1.0, 0.08});
  PressureBalance b = pressure_divergence(flat.f, fam, flat.w_field(), flat.curl_field(), p);
  EXPECT_EQ(b.gamma, 0.0);
  EXPECT_NEAR(b.mismatch, b.force.norm(), 1e-12);
  EXPECT_THROW(pressure_divergence(ScalarProfile::parse("poly:0,1"), fam, s.w_field(), s.curl_field(),
                                   Vec3(1.0, 0.0, 0.0)),
               DomainError);
}
