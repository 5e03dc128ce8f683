#include "clebsch/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "clebsch/errors.hpp"

namespace clebsch {

namespace {

// Covariant components and their in-surface spectra on one solved level.
void finish_level(StackLevel& lv, int M, int N) {
  const EllipticCoefficients& c = lv.coeffs;
  lv.rho = forward(lv.solution.rho);
  lv.rho_mu = d_mu(lv.rho);
  lv.rho_nu = d_nu(lv.rho);
  const Field2D rm = inverse(lv.rho_mu), rn = inverse(lv.rho_nu);
  lv.w_mu = Field2D(c.grid);
  lv.w_nu = Field2D(c.grid);
  lv.w_psi = Field2D(c.grid);
  for (std::size_t k = 0; k < rm.values.size(); ++k) {
    const double tm = M + rm.values[k], tn = N + rn.values[k];
    lv.w_mu.values[k] = c.a_mn.values[k] * tm - c.a_nn.values[k] * tn;
    lv.w_nu.values[k] = c.a_mm.values[k] * tm - c.a_mn.values[k] * tn;
    lv.w_psi.values[k] = c.jg_nu_psi.values[k] * tm - c.jg_mu_psi.values[k] * tn;
  }
  const Spectrum wp = forward(lv.w_psi);
  lv.dmu_w_psi = d_mu(wp);
  lv.dnu_w_psi = d_nu(wp);
  // d_mu w_nu - d_nu w_mu = L Theta = L rho - S.
  Field2D normal = apply_operator(c, lv.solution.rho);
  const Field2D S = assemble_source(c, M, N, std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < normal.values.size(); ++k) normal.values[k] -= S.values[k];
  lv.normal_curl = forward(normal);
}

// Weights of the three-point derivative at node `at` of (x0, x1, x2).
std::array<double, 3> three_point_derivative(double x0, double x1, double x2, int at) {
  const double h1 = x1 - x0, h2 = x2 - x1, s = h1 + h2;
  switch (at) {
    case 0:
      return {-(2 * h1 + h2) / (h1 * s), s / (h1 * h2), -h1 / (h2 * s)};
    case 1:
      return {-h2 / (h1 * s), (h2 - h1) / (h1 * h2), h1 / (h2 * s)};
    default:
      return {h2 / (h1 * s), -s / (h1 * h2), (2 * h2 + h1) / (h2 * s)};
  }
}

void psi_derivatives(FieldStack& st) {
  const int K = static_cast<int>(st.levels.size());
  std::vector<Spectrum> wm(K), wn(K);
  for (int k = 0; k < K; ++k) {
    wm[k] = forward(st.levels[k].w_mu);
    wn[k] = forward(st.levels[k].w_nu);
  }
  for (int k = 0; k < K; ++k) {
    const int first = std::clamp(k - 1, 0, K - 3);
    const auto w = three_point_derivative(st.levels[first].psi, st.levels[first + 1].psi,
                                          st.levels[first + 2].psi, k - first);
    Spectrum dm(st.grid), dn(st.grid);
    for (int a = 0; a < 3; ++a)
      for (std::size_t q = 0; q < dm.c.size(); ++q) {
        dm.c[q] += w[a] * wm[first + a].c[q];
        dn.c[q] += w[a] * wn[first + a].c[q];
      }
    st.levels[k].dpsi_w_mu = std::move(dm);
    st.levels[k].dpsi_w_nu = std::move(dn);
  }
}

void check_levels(const std::vector<double>& psi) {
  if (psi.size() < 3) throw std::invalid_argument("a field stack needs at least three levels");
  for (std::size_t k = 1; k < psi.size(); ++k)
    if (!(psi[k] > psi[k - 1]))
      throw std::invalid_argument("stack levels must be strictly increasing");
}

struct PsiStencil {
  int first = 0;
  int count = 0;
  double w[4] = {};
};

PsiStencil psi_stencil(const FieldStack& st, double psi, double lo, double hi) {
  const double slack = 1e-12 * std::max(1.0, std::abs(hi));
  if (psi < lo - slack || psi > hi + slack) {
    std::ostringstream os;
    os << "Psi = " << psi << " outside the stack range [" << lo << ", " << hi << "]";
    throw ExtrapolationError(os.str());
  }
  const int K = static_cast<int>(st.levels.size());
  int k = 0;
  while (k < K - 2 && psi > st.levels[k + 1].psi) ++k;
  PsiStencil s;
  s.count = std::min(K, 4);
  s.first = std::clamp(k - 1, 0, K - s.count);
  for (int a = 0; a < s.count; ++a) {
    double l = 1.0;
    const double xa = st.levels[s.first + a].psi;
    for (int b = 0; b < s.count; ++b)
      if (b != a) l *= (psi - st.levels[s.first + b].psi) / (xa - st.levels[s.first + b].psi);
    s.w[a] = l;
  }
  return s;
}

double interpolate(const FieldStack& st, const PsiStencil& s, const PointBasis& pb,
                   Spectrum StackLevel::*member) {
  double v = 0.0;
  for (int a = 0; a < s.count; ++a) v += s.w[a] * pb.evaluate(st.levels[s.first + a].*member);
  return v;
}

StackSample sample_at(const FieldStack& st, const ToroidalCoords& c, const Vec3& p,
                      bool want_curl) {
  const PsiStencil s = psi_stencil(st, c.psi, st.psi_min(), st.psi_max());
  const PointBasis pb(st.grid, c.mu, c.nu);
  StackSample out;
  out.coords = c;
  out.point = p;
  out.theta_mu = st.M + interpolate(st, s, pb, &StackLevel::rho_mu);
  out.theta_nu = st.N + interpolate(st, s, pb, &StackLevel::rho_nu);
  const CoordinateFrame f = coordinate_frame(st.family, p);
  out.grad_psi = f.grad_psi;
  out.w = f.jacobian * (out.theta_mu * f.e_nu() - out.theta_nu * f.e_mu());
  out.w_clebsch = f.grad_psi.cross(out.theta_mu * f.grad_mu + out.theta_nu * f.grad_nu);

  const double slack = 1e-12 * std::max(1.0, std::abs(st.curl_psi_max()));
  const bool curl_ok = c.psi >= st.curl_psi_min() - slack && c.psi <= st.curl_psi_max() + slack;
  if (!curl_ok && want_curl) psi_stencil(st, c.psi, st.curl_psi_min(), st.curl_psi_max());
  if (curl_ok) {
    const double dnu_wpsi = interpolate(st, s, pb, &StackLevel::dnu_w_psi);
    const double dmu_wpsi = interpolate(st, s, pb, &StackLevel::dmu_w_psi);
    const double dpsi_wmu = interpolate(st, s, pb, &StackLevel::dpsi_w_mu);
    const double dpsi_wnu = interpolate(st, s, pb, &StackLevel::dpsi_w_nu);
    const double normal = interpolate(st, s, pb, &StackLevel::normal_curl);
    out.curl_w = f.jacobian * ((dnu_wpsi - dpsi_wnu) * f.e_mu() + (dpsi_wmu - dmu_wpsi) * f.e_nu() +
                               normal * f.e_psi());
    out.has_curl = true;
  }
  return out;
}

}  // namespace

FieldStack stack_from_solutions(const SurfaceFamily& family, std::vector<SurfaceSolution> sols,
                                Exec exec) {
  std::vector<double> psi;
  for (const auto& s : sols) psi.push_back(s.psi_level);
  check_levels(psi);
  FieldStack st(family);
  st.grid = sols.front().rho.grid;
  st.M = sols.front().M;
  st.N = sols.front().N;
  for (const auto& s : sols) {
    if (!(s.rho.grid == st.grid)) throw std::invalid_argument("stack levels use different grids");
    if (s.M != st.M || s.N != st.N)
      throw std::invalid_argument("stack levels use different harmonic numbers");
  }
  st.levels.resize(sols.size());
  for_each_index(exec, static_cast<long>(sols.size()), [&](long k) {
    StackLevel& lv = st.levels[static_cast<std::size_t>(k)];
    lv.psi = psi[static_cast<std::size_t>(k)];
    lv.coeffs = assemble_coefficients(family, lv.psi, st.grid);
    lv.solution = std::move(sols[static_cast<std::size_t>(k)]);
    finish_level(lv, st.M, st.N);
  });
  psi_derivatives(st);
  return st;
}

FieldStack build_stack(const SurfaceFamily& family, const std::vector<double>& psi_levels,
                       const PeriodicGrid& grid, const StackOptions& opt, Exec exec) {
  check_levels(psi_levels);
  FieldStack st(family);
  st.grid = grid;
  st.M = opt.M;
  st.N = opt.N;
  st.levels.resize(psi_levels.size());
  for_each_index(exec, static_cast<long>(psi_levels.size()), [&](long k) {
    StackLevel& lv = st.levels[static_cast<std::size_t>(k)];
    lv.psi = psi_levels[static_cast<std::size_t>(k)];
    lv.coeffs = assemble_coefficients(family, lv.psi, grid);
    const Field2D S = assemble_source(lv.coeffs, opt.M, opt.N);
    lv.solution = solve_periodic(lv.coeffs, S, opt.M, opt.N, opt.solve);
    finish_level(lv, opt.M, opt.N);
  });
  psi_derivatives(st);
  return st;
}

StackSample sample_stack(const FieldStack& stack, const ToroidalCoords& c, bool want_curl) {
  return sample_at(stack, c, to_cartesian(stack.family, c), want_curl);
}

Vec3 reconstruct_w(const FieldStack& stack, const ToroidalCoords& c) {
  return sample_stack(stack, c, false).w;
}

Vec3 reconstruct_curl_w(const FieldStack& stack, const ToroidalCoords& c) {
  return sample_stack(stack, c, true).curl_w;
}

std::vector<StackSample> sample_stack_points(const FieldStack& stack, const std::vector<Vec3>& pts,
                                             bool want_curl, Exec exec) {
  std::vector<StackSample> out(pts.size());
  for_each_index(exec, static_cast<long>(pts.size()), [&](long k) {
    const Vec3& p = pts[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(k)] = sample_at(stack, to_toroidal(stack.family, p), p, want_curl);
  });
  return out;
}

double theta_mu_integral(const SurfaceSolution& sol) {
  const Spectrum rm = d_mu(forward(sol.rho));
  return kTwoPi * kTwoPi * (sol.M + rm.at(0, 0).real());
}

double theta_mu_integral_nodal(const SurfaceSolution& sol) {
  const Field2D rm = inverse(d_mu(forward(sol.rho)));
  double s = 0.0;
  for (double v : rm.values) s += sol.M + v;
  return s * sol.rho.grid.h_mu() * sol.rho.grid.h_nu();
}

CartesianVectorField stack_w_field(const FieldStack& stack) {
  return {[&stack](const Vec3& p) {
            return sample_at(stack, to_toroidal(stack.family, p), p, false).w;
          },
          "stack"};
}

CartesianVectorField stack_curl_field(const FieldStack& stack) {
  return {[&stack](const Vec3& p) {
            return sample_at(stack, to_toroidal(stack.family, p), p, true).curl_w;
          },
          "stack"};
}

Mat3 jacobian_fd(const CartesianVectorField& f, const Vec3& p, double h) {
  Mat3 J;
  for (int j = 0; j < 3; ++j) {
    Vec3 e = Vec3::Zero();
    e[j] = h;
    J.col(j) = (f(p + e) - f(p - e)) / (2.0 * h);
  }
  return J;
}

Mat3 jacobian_fd_richardson(const CartesianVectorField& f, const Vec3& p, double h) {
  return (4.0 * jacobian_fd(f, p, 0.5 * h) - jacobian_fd(f, p, h)) / 3.0;
}

namespace {

Vec3 curl_of(const Mat3& J) { return {J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1)}; }

}  // namespace

double divergence_fd_richardson(const CartesianVectorField& f, const Vec3& p, double h) {
  return jacobian_fd_richardson(f, p, h).trace();
}

Vec3 curl_fd_richardson(const CartesianVectorField& f, const Vec3& p, double h) {
  return curl_of(jacobian_fd_richardson(f, p, h));
}

double divergence_fd(const CartesianVectorField& f, const Vec3& p, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("divergence_fd: step must be positive");
  return jacobian_fd(f, p, h).trace();
}

Vec3 curl_fd(const CartesianVectorField& f, const Vec3& p, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("curl_fd: step must be positive");
  return curl_of(jacobian_fd(f, p, h));
}

Vec3 gradient_fd(const ScalarField& f, const Vec3& p, double h) {
  Vec3 g;
  for (int j = 0; j < 3; ++j) {
    Vec3 e = Vec3::Zero();
    e[j] = h;
    g[j] = (f(p + e) - f(p - e)) / (2.0 * h);
  }
  return g;
}

Vec3 force_term(const CartesianVectorField& w, const CartesianVectorField& curl, const Vec3& p) {
  return curl(p).cross(w(p));
}

double mhd_residual(const CartesianVectorField& w, const CartesianVectorField& curl,
                    const SurfaceFamily& family, const Vec3& p) {
  return (force_term(w, curl, p) - grad_psi(family, p)).norm();
}

double beltrami_ratio(const CartesianVectorField& w, const CartesianVectorField& curl,
                      const Vec3& p) {
  const Vec3 a = w(p), b = curl(p);
  const double denom = a.norm() * b.norm();
  return denom > 0.0 ? b.cross(a).norm() / denom : 0.0;
}

namespace {

void require_differentiable(const ScalarProfile& f, double lo, double hi) {
  if (!f.differentiable_on(lo, hi)) {
    std::ostringstream os;
    os << "profile " << f.to_string() << " is not differentiable on [" << lo << ", " << hi << "]";
    throw std::domain_error(os.str());
  }
}

}  // namespace

CartesianVectorField wrap_with_f(const CartesianVectorField& w, const SurfaceFamily& family,
                                 const ScalarProfile& f, double psi_lo, double psi_hi) {
  require_differentiable(f, psi_lo, psi_hi);
  return {[w, family, f](const Vec3& p) { return f.value(psi_value(family, p)) * w(p); },
          w.provenance};
}

CartesianVectorField wrap_curl_with_f(const CartesianVectorField& w,
                                      const CartesianVectorField& curl,
                                      const SurfaceFamily& family, const ScalarProfile& f,
                                      double psi_lo, double psi_hi) {
  require_differentiable(f, psi_lo, psi_hi);
  return {[w, curl, family, f](const Vec3& p) {
            const double psi = psi_value(family, p);
            return Vec3(f.value(psi) * curl(p) +
                        f.derivative(psi) * grad_psi(family, p).cross(w(p)));
          },
          w.provenance};
}

double volume_energy(const FieldStack& st, const std::vector<Field2D>* delta, double t) {
  const std::size_t K = st.levels.size();
  if (delta && delta->size() != K)
    throw std::invalid_argument("volume_energy: one perturbation per level required");
  std::vector<double> e(K);
  for (std::size_t k = 0; k < K; ++k) {
    const StackLevel& lv = st.levels[k];
    Field2D rho = lv.solution.rho;
    if (delta)
      for (std::size_t q = 0; q < rho.values.size(); ++q) rho.values[q] += t * (*delta)[k].values[q];
    e[k] = surface_energy_direct(lv.coeffs, rho, st.M, st.N);
  }
  bool uniform = K % 2 == 1;
  const double h = st.levels[1].psi - st.levels[0].psi;
  for (std::size_t k = 1; k < K && uniform; ++k)
    uniform = std::abs(st.levels[k].psi - st.levels[k - 1].psi - h) <= 1e-9 * h;
  double sum = 0.0;
  if (uniform) {
    for (std::size_t k = 0; k < K; ++k)
      sum += e[k] * (k == 0 || k + 1 == K ? 1.0 : (k % 2 ? 4.0 : 2.0));
    return sum * h / 3.0;
  }
  for (std::size_t k = 1; k < K; ++k)
    sum += 0.5 * (e[k] + e[k - 1]) * (st.levels[k].psi - st.levels[k - 1].psi);
  return sum;
}

double volume_energy_qmc(const FieldStack& st, int n_points, Exec exec) {
  // Bounding box of the outermost level, padded slightly.
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  const int nb = 96;
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) {
      const Vec3 p = to_cartesian(st.family, {kTwoPi * i / nb, kTwoPi * j / nb, st.psi_max()});
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  const Vec3 pad = 0.02 * (hi - lo);
  lo -= pad;
  hi += pad;
  const Vec3 span = hi - lo;

  const auto unit = sobol_unit_cube(n_points);
  std::vector<double> val(unit.size(), 0.0);
  for_each_index(exec, static_cast<long>(unit.size()), [&](long k) {
    const auto& u = unit[static_cast<std::size_t>(k)];
    const Vec3 p = lo + Vec3(u[0] * span.x(), u[1] * span.y(), u[2] * span.z());
    const double psi = psi_value(st.family, p);
    if (psi < st.psi_min() || psi > st.psi_max()) return;
    const Vec3 w = sample_at(st, to_toroidal(st.family, p), p, false).w;
    val[static_cast<std::size_t>(k)] = 0.5 * w.squaredNorm();
  });
  double sum = 0.0;
  for (double v : val) sum += v;
  return sum / static_cast<double>(unit.size()) * span.x() * span.y() * span.z();
}

}  // namespace clebsch
