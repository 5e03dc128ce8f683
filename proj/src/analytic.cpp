#include "clebsch/analytic.hpp"

#include <cmath>
#include <stdexcept>

#include "clebsch/errors.hpp"

namespace clebsch {

namespace {

const Vec3 kZhat(0.0, 0.0, 1.0);

double radius(const Vec3& p) {
  const double r = std::hypot(p.x(), p.y());
  if (!(r > 0.0)) throw DomainError("point on the z-axis");
  return r;
}

Vec3 grad_r(const Vec3& p, double r) { return {p.x() / r, p.y() / r, 0.0}; }
Vec3 grad_phi(const Vec3& p, double r) { return {-p.y() / (r * r), p.x() / (r * r), 0.0}; }

// grad of the meridional angle atan2(z, r - r0).
Vec3 grad_angle(const Vec3& p, double r0) {
  const double r = radius(p);
  const double a = r - r0;
  const double d2 = a * a + p.z() * p.z();
  if (!(d2 > 0.0)) throw DomainError("poloidal angle undefined on the circle r = r0, z = 0");
  return (a * kZhat - p.z() * grad_r(p, r)) / d2;
}

Vec3 xi_conjugate(double eps, int m, const Vec3& p) {
  const double r = radius(p);
  const double e = std::exp(m * p.x());
  return grad_phi(p, r) + eps * m * e * Vec3(std::cos(m * p.y()), -std::sin(m * p.y()), 0.0);
}

// Tangent field xi for the two harmonic kinds.
Vec3 xi_of(const AnalyticSolution& s, const Vec3& p) {
  return s.kind == AnalyticKind::harmonic_product ? eval_harmonic_xi(s.eps, p)
                                                  : xi_conjugate(s.eps, s.m, p);
}

double sqrt_term(const AnalyticSolution& s, double psi) {
  const double q = s.C - 2.0 * psi * psi;
  if (!(q > 0.0)) throw DomainError("C - 2 Psi^2 must be positive");
  return std::sqrt(q);
}

}  // namespace

std::string to_string(AnalyticKind k) {
  switch (k) {
    case AnalyticKind::non_solenoidal:
      return "non_solenoidal";
    case AnalyticKind::harmonic_product:
      return "harmonic_product";
    case AnalyticKind::conjugate_family:
      return "conjugate_family";
    case AnalyticKind::equilibrium_nodiv:
      return "equilibrium_nodiv";
  }
  return "?";
}

AnalyticKind analytic_kind_from_string(const std::string& s) {
  for (auto k : {AnalyticKind::non_solenoidal, AnalyticKind::harmonic_product,
                 AnalyticKind::conjugate_family, AnalyticKind::equilibrium_nodiv})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown analytic kind '" + s + "'");
}

SurfaceFamily AnalyticSolution::family() const {
  switch (kind) {
    case AnalyticKind::non_solenoidal:
      return surface::PhasePerturbed{r0, eps, m};
    case AnalyticKind::harmonic_product:
      return surface::ExpSheared{r0, eps};
    case AnalyticKind::conjugate_family:
      return surface::ConjugateHarmonic{r0, eps, m};
    case AnalyticKind::equilibrium_nodiv:
      break;
  }
  return surface::Axisym{r0};
}

Vec3 AnalyticSolution::w(const Vec3& p) const {
  const SurfaceFamily fam = family();
  const double psi = psi_value(fam, p);
  switch (kind) {
    case AnalyticKind::non_solenoidal:
      return f.value(psi) * grad_angle(p, r0);
    case AnalyticKind::harmonic_product:
    case AnalyticKind::conjugate_family:
      return f.value(psi) * xi_of(*this, p);
    case AnalyticKind::equilibrium_nodiv: {
      const double r = radius(p);
      const double phi = std::atan2(p.y(), p.x());
      return sqrt_term(*this, psi) * grad_angle(p, r0) + g.value(phi) * grad_phi(p, r);
    }
  }
  return Vec3::Zero();
}

Vec3 AnalyticSolution::curl_w(const Vec3& p) const {
  const SurfaceFamily fam = family();
  const double psi = psi_value(fam, p);
  const Vec3 gp = grad_psi(fam, p);
  switch (kind) {
    case AnalyticKind::non_solenoidal:
      return f.derivative(psi) * gp.cross(grad_angle(p, r0));
    case AnalyticKind::harmonic_product:
    case AnalyticKind::conjugate_family:
      return f.derivative(psi) * gp.cross(xi_of(*this, p));
    case AnalyticKind::equilibrium_nodiv:
      // grad(g(phi)) x grad(phi) = 0
      return -2.0 * psi / sqrt_term(*this, psi) * gp.cross(grad_angle(p, r0));
  }
  return Vec3::Zero();
}

double AnalyticSolution::div_w(const Vec3& p) const {
  const SurfaceFamily fam = family();
  const double psi = psi_value(fam, p);
  const double r = radius(p);
  const double a = r - r0;
  const double d2 = a * a + p.z() * p.z();
  switch (kind) {
    case AnalyticKind::non_solenoidal:
      // f' grad Psi . grad alpha vanishes; Laplacian of alpha is alpha_r / r.
      return -p.z() * f.value(psi) / (r * d2);
    case AnalyticKind::harmonic_product:
    case AnalyticKind::conjugate_family:
      return f.derivative(psi) * grad_psi(fam, p).dot(xi_of(*this, p));
    case AnalyticKind::equilibrium_nodiv: {
      const double phi = std::atan2(p.y(), p.x());
      return -sqrt_term(*this, psi) * p.z() / (r * d2) + g.derivative(phi) / (r * r);
    }
  }
  return 0.0;
}

CartesianVectorField AnalyticSolution::w_field() const {
  return {[s = *this](const Vec3& p) { return s.w(p); }, "analytic"};
}

CartesianVectorField AnalyticSolution::curl_field() const {
  return {[s = *this](const Vec3& p) { return s.curl_w(p); }, "analytic"};
}

NonSolenoidalSample eval_nonsolenoidal(const AnalyticSolution& s, const Vec3& p) {
  if (s.kind != AnalyticKind::non_solenoidal)
    throw std::invalid_argument("eval_nonsolenoidal needs a non_solenoidal solution");
  NonSolenoidalSample out;
  out.w = s.w(p);
  out.curl_w = s.curl_w(p);
  out.force = out.curl_w.cross(out.w);
  out.div_w = s.div_w(p);
  const double psi = psi_value(s.family(), p);
  const double r = radius(p);
  const double a = r - s.r0;
  const double d2 = a * a + p.z() * p.z();  // = 2 Psi - eps sin(m phi)
  out.lambda = -s.f.value(psi) * s.f.derivative(psi) / d2;
  return out;
}

Vec3 eval_harmonic_xi(double eps, const Vec3& p) {
  const double r = radius(p);
  return {-p.y() / (r * r) + eps, p.x() / (r * r), 0.0};
}

HarmonicSample eval_harmonic_solution(const AnalyticSolution& s, const Vec3& p) {
  if (s.kind != AnalyticKind::harmonic_product)
    throw std::invalid_argument("eval_harmonic_solution needs a harmonic_product solution");
  const SurfaceFamily fam = s.family();
  const double psi = psi_value(fam, p);
  const double r = radius(p);
  HarmonicSample out;
  out.w = s.w(p);
  out.curl_w = s.curl_w(p);
  out.xi2 = (1.0 - 2.0 * s.eps * p.y() + s.eps * s.eps * r * r) / (r * r);
  out.force = -s.f.value(psi) * s.f.derivative(psi) * out.xi2 * grad_psi(fam, p);
  return out;
}

double conjugate_P(int m, const Vec3& p) { return std::exp(m * p.x()) * std::cos(m * p.y()); }
double conjugate_Q(int m, const Vec3& p) { return std::exp(m * p.x()) * std::sin(m * p.y()); }

ConjugateSample eval_conjugate_family(double r0, double eps, int m, const Vec3& p) {
  ConjugateSample out;
  out.xi = xi_conjugate(eps, m, p);
  out.psi = psi_value(surface::ConjugateHarmonic{r0, eps, m}, p);
  out.P = conjugate_P(m, p);
  out.Q = conjugate_Q(m, p);
  return out;
}

EquilibriumSample eval_equilibrium_nodiv(const AnalyticSolution& s, const Vec3& p, double h) {
  if (s.kind != AnalyticKind::equilibrium_nodiv)
    throw std::invalid_argument("eval_equilibrium_nodiv needs an equilibrium_nodiv solution");
  EquilibriumSample out;
  out.w = s.w(p);
  out.curl_w = s.curl_w(p);
  const Vec3 gp = grad_psi(s.family(), p);
  out.residual = (out.curl_w.cross(out.w) - gp).norm();
  const Vec3 curl = curl_fd_richardson(s.w_field(), p, h);
  out.residual_fd = (curl.cross(out.w) - gp).norm();
  return out;
}

PressureBalance pressure_divergence(const ScalarProfile& f, const SurfaceFamily& family,
                                    const CartesianVectorField& w,
                                    const CartesianVectorField& curl, const Vec3& p, double h) {
  auto gamma_at = [&](const Vec3& x) {
    const double fv = f.value(psi_value(family, x));
    if (fv == 0.0) throw DomainError("f vanishes, anisotropy gamma = 1 - 1/f^2 is singular");
    return 1.0 - 1.0 / (fv * fv);
  };
  auto pi_at = [&](const Vec3& x) -> Mat3 {
    const Vec3 wx = w(x);
    const double g = gamma_at(x);
    return -0.5 * g * wx.squaredNorm() * Mat3::Identity() + g * wx * wx.transpose();
  };
  PressureBalance out;
  out.div_pi.setZero();
  for (int i = 0; i < 3; ++i) {
    Vec3 e = Vec3::Zero();
    e[i] = h;
    out.div_pi += ((pi_at(p + e) - pi_at(p - e)).row(i) / (2.0 * h)).transpose();
  }
  const Vec3 wp = w(p);
  out.force = curl(p).cross(wp);
  out.mismatch = (out.div_pi - out.force).norm();
  const double psi = psi_value(family, p);
  const double fv = f.value(psi);
  out.gamma = gamma_at(p);
  const Vec3 grad_gamma = 2.0 * f.derivative(psi) / (fv * fv * fv) * grad_psi(family, p);
  const Vec3 rhs = -0.5 * wp.squaredNorm() * grad_gamma + wp.dot(grad_gamma) * wp;
  out.form_defect = ((1.0 - out.gamma) * out.force - rhs).norm();
  return out;
}

}  // namespace clebsch
