#include "clebsch/diagnostics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "clebsch/errors.hpp"

namespace clebsch {

Eigen::Matrix<double, 6, 1> IsometryGenerator::stacked() const {
  Eigen::Matrix<double, 6, 1> v;
  v << a, b;
  return v;
}

double lie_scalar(const GradientField& grad, const IsometryGenerator& gen, const Vec3& p) {
  return gen.at(p).dot(grad(p));
}

double lie_scalar(const SurfaceFamily& family, const IsometryGenerator& gen, const Vec3& p) {
  return gen.at(p).dot(grad_psi(family, p));
}

SymmetryReport isometry_nullspace(const GradientField& grad, const std::vector<Vec3>& pts,
                                  double tau, Exec exec) {
  SymmetryReport rep;
  rep.samples = static_cast<int>(pts.size());
  rep.tau = tau;
  const long n = static_cast<long>(pts.size());
  Eigen::MatrixXd A(n, 6);
  for_each_index(exec, n, [&](long k) {
    const Vec3& p = pts[static_cast<std::size_t>(k)];
    const Vec3 g = grad(p);
    A.block<1, 3>(k, 0) = g.transpose();
    A.block<1, 3>(k, 3) = p.cross(g).transpose();
  });
  rep.degenerate_samples = n < 6;
  if (n >= 3) {
    Eigen::MatrixXd P(n, 3);
    for (long k = 0; k < n; ++k) P.row(k) = pts[static_cast<std::size_t>(k)].transpose();
    P.rowwise() -= P.colwise().mean();
    const Eigen::Vector3d s = Eigen::JacobiSVD<Eigen::MatrixXd>(P).singularValues();
    if (!(s[2] > 1e-9 * s[0])) rep.degenerate_samples = true;
  }
  if (n == 0) return rep;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double s1 = sv.size() > 0 ? sv[0] : 0.0;
  for (int i = 0; i < 6; ++i) {
    rep.singular_values[i] = i < sv.size() ? sv[i] : 0.0;
    rep.normalized[i] = s1 > 0.0 ? rep.singular_values[i] / s1 : 0.0;
    if (rep.singular_values[i] < tau * s1 || s1 == 0.0) {
      ++rep.nullspace_dim;
      IsometryGenerator g;
      const Eigen::VectorXd v = svd.matrixV().col(i);
      g.a = v.head<3>();
      g.b = v.tail<3>();
      rep.generators.push_back(g);
    }
  }
  return rep;
}

double generator_similarity(const IsometryGenerator& g, const IsometryGenerator& ref) {
  const auto u = g.stacked(), v = ref.stacked();
  const double d = u.norm() * v.norm();
  return d > 0.0 ? std::abs(u.dot(v)) / d : 0.0;
}

Vec3 analytic_xi(const AnalyticSolution& s, const Vec3& p) {
  if (s.kind == AnalyticKind::harmonic_product) return eval_harmonic_xi(s.eps, p);
  if (s.kind == AnalyticKind::conjugate_family) return eval_conjugate_family(s.r0, s.eps, s.m, p).xi;
  throw std::invalid_argument("xi is defined for the harmonic kinds only");
}

Vec3 grad_xi2(const AnalyticSolution& s, const Vec3& p) {
  const Vec3 xi = analytic_xi(s, p);
  const double x = p.x(), y = p.y();
  const double r2 = x * x + y * y, r4 = r2 * r2;
  Eigen::Matrix2d H;
  H << 2 * x * y / r4, (y * y - x * x) / r4, (y * y - x * x) / r4, -2 * x * y / r4;
  if (s.kind == AnalyticKind::conjugate_family) {
    const double P = conjugate_P(s.m, p), Q = conjugate_Q(s.m, p);
    const double m2 = static_cast<double>(s.m) * s.m;
    Eigen::Matrix2d HP;
    HP << P, -Q, -Q, -P;
    H += s.eps * m2 * HP;
  }
  const Eigen::Vector2d g = 2.0 * H * xi.head<2>();
  return {g.x(), g.y(), 0.0};
}

double lie_modulus_w2(const AnalyticSolution& s, const IsometryGenerator& gen, const Vec3& p) {
  const SurfaceFamily fam = s.family();
  const double psi = psi_value(fam, p);
  const double f = s.f.value(psi);
  const Vec3 xi = analytic_xi(s, p);
  const double xi2 = xi.squaredNorm();
  const double w2 = f * f * xi2;
  if (!(w2 > 0.0)) throw DomainError("w vanishes, log-decomposition undefined");
  const Vec3 v = gen.at(p);
  const Vec3 grad_log_f2 = 2.0 * s.f.derivative(psi) / f * grad_psi(fam, p);
  return w2 * (v.dot(grad_log_f2) + v.dot(grad_xi2(s, p)) / xi2);
}

double lie_modulus_w2_fd(const CartesianVectorField& w, const IsometryGenerator& gen,
                         const Vec3& p, double t) {
  const Vec3 v = gen.at(p);
  return (w(p + t * v).squaredNorm() - w(p - t * v).squaredNorm()) / (2.0 * t);
}

double lie_modulus_w2_fd_richardson(const CartesianVectorField& w, const IsometryGenerator& gen,
                                    const Vec3& p, double t) {
  return (4.0 * lie_modulus_w2_fd(w, gen, p, 0.5 * t) - lie_modulus_w2_fd(w, gen, p, t)) / 3.0;
}

double reflection_defect(const std::function<double(const Vec3&)>& psi, const Vec3& n, double c,
                         const std::vector<Vec3>& samples) {
  if (std::abs(n.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("reflection plane normal must be a unit vector");
  double d = 0.0;
  for (const Vec3& x : samples) {
    const Vec3 rx = x - 2.0 * (n.dot(x) - c) * n;
    d = std::max(d, std::abs(psi(x) - psi(rx)));
  }
  return d;
}

QuasisymmetryReport quasisymmetry_check(const CartesianVectorField& xi,
                                        const CartesianVectorField& w, const SurfaceFamily& family,
                                        const std::vector<double>& psi_levels, int n, double h,
                                        Exec exec) {
  QuasisymmetryReport rep;
  rep.surfaces = static_cast<int>(psi_levels.size());
  rep.points_per_surface = n * n;
  const CartesianVectorField u{[&](const Vec3& x) { return xi(x).cross(grad_psi(family, x)); },
                               "analytic"};
  auto w2 = [&](const Vec3& x) { return w(x).squaredNorm(); };

  struct PointResult {
    double div_u, u_grad_w2, normal, tangential, tangency;
  };
  const long per = static_cast<long>(n) * n;
  const long total = per * static_cast<long>(psi_levels.size());
  std::vector<PointResult> res(static_cast<std::size_t>(total));
  for_each_index(exec, total, [&](long k) {
    const double psi = psi_levels[static_cast<std::size_t>(k / per)];
    const long q = k % per;
    const Vec3 p =
        to_cartesian(family, {kTwoPi * static_cast<double>(q / n) / n,
                              kTwoPi * static_cast<double>(q % n) / n, psi});
    const Vec3 gp = grad_psi(family, p);
    const Vec3 xp = xi(p);
    const Vec3 up = xp.cross(gp);
    const Vec3 uw = up.cross(w(p));
    PointResult& r = res[static_cast<std::size_t>(k)];
    r.div_u = std::abs(divergence_fd(u, p, h));
    r.u_grad_w2 = std::abs(up.dot(gradient_fd(w2, p, h)));
    r.normal = uw.dot(gp) / gp.squaredNorm();
    r.tangential = uw.cross(gp).norm();
    r.tangency = std::abs(xp.dot(gp)) / (xp.norm() * gp.norm());
  });
  for (std::size_t s = 0; s < psi_levels.size(); ++s) {
    double mean = 0.0;
    for (long q = 0; q < per; ++q) mean += res[s * per + q].normal;
    mean /= static_cast<double>(per);
    for (long q = 0; q < per; ++q) {
      const PointResult& r = res[s * per + q];
      rep.max_div_u = std::max(rep.max_div_u, r.div_u);
      rep.max_u_grad_w2 = std::max(rep.max_u_grad_w2, r.u_grad_w2);
      rep.surface_const_defect = std::max(rep.surface_const_defect, std::abs(r.normal - mean));
      rep.max_tangential = std::max(rep.max_tangential, r.tangential);
      rep.max_tangency = std::max(rep.max_tangency, r.tangency);
    }
  }
  return rep;
}

}  // namespace clebsch
