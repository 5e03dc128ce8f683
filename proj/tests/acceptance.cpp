// Acceptance run: ten property checks on the fixture parameters, one
// PASS/FAIL line each. Exit status is nonzero if any check fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "clebsch/analytic.hpp"
#include "clebsch/config.hpp"
#include "clebsch/diagnostics.hpp"
#include "clebsch/field.hpp"
#include "clebsch/pde.hpp"
#include "oracles.hpp"

using namespace clebsch;

namespace {

constexpr Exec kExec = Exec::parallel;
const double kFourPi2 = kTwoPi * kTwoPi;

// Collects the measured quantities of one criterion.
class Criterion {
 public:
  void require(const std::string& what, double value, const char* rel, double threshold) {
    const bool ok = std::string(rel) == "<"    ? value < threshold
                    : std::string(rel) == "<=" ? value <= threshold
                    : std::string(rel) == ">"  ? value > threshold
                                               : value >= threshold;
    std::printf("    %-4s %-44s %.4g %s %.3g\n", ok ? "ok" : "FAIL", what.c_str(), value, rel, threshold);
    pass_ = pass_ && ok;
  }
  void require_eq(const std::string& what, int value, int expected) {
    const bool ok = value == expected;
    std::printf("    %-4s %-44s %d == %d\n", ok ? "ok" : "FAIL", what.c_str(), value, expected);
    pass_ = pass_ && ok;
  }
  void info(const std::string& what, double value) {
    std::printf("    info %-44s %.4g\n", what.c_str(), value);
  }
  bool pass() const { return pass_; }

 private:
  bool pass_ = true;
};

const SurfaceFamily kAxisym = surface::Axisym{1.0};
const SurfaceFamily kFig3b = surface::DisplacedEllipse{1.0, 1.6, 0.3, 2};
const SurfaceFamily kFig3a = surface::DisplacedEllipse{1.0, 1.6, 0.03, 1};
const oracle::DisplacedEllipse kFig3bOracle{1.0, 1.6, 0.3, 2};

std::vector<double> uniform(double lo, double hi, int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(lo + (hi - lo) * k / (n - 1));
  return v;
}

std::vector<Vec3> level_points(const SurfaceFamily& fam, double psi, int n) {
  std::vector<Vec3> pts;
  for (const auto& q : sobol_unit_cube(n)) pts.push_back(to_cartesian(fam, {kTwoPi * q[0], kTwoPi * q[1], psi}));
  return pts;
}

template <class F>
double max_over(const std::vector<Vec3>& pts, F&& f) {
  std::vector<double> v(pts.size());
  for_each_index(kExec, static_cast<long>(pts.size()), [&](long k) { v[k] = f(pts[k]); });
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

SurfaceSolution solve(const EllipticCoefficients& c, int M, int N, double tol) {
  return solve_periodic(c, assemble_source(c, M, N), M, N, {tol, 10000});
}

// Max difference at the nodes shared by a grid and its refinement.
double coarse_fine_diff(const Field2D& coarse, const Field2D& fine) {
  const int s = fine.grid.n_mu / coarse.grid.n_mu;
  double d = 0.0;
  for (int i = 0; i < coarse.grid.n_mu; ++i)
    for (int j = 0; j < coarse.grid.n_nu; ++j) d = std::max(d, std::abs(coarse(i, j) - fine(i * s, j * s)));
  return d;
}

void axisym_exactness(Criterion& c) {
  double s_max = 0.0, rho_max = 0.0, jac = 0.0;
  for (double psi : uniform(0.06, 0.1, 5)) {
    auto co = assemble_coefficients(kAxisym, psi, PeriodicGrid::square(32), kExec);
    Field2D S = assemble_source(co, 1, 0);
    s_max = std::max(s_max, S.max_abs());
    rho_max = std::max(rho_max, solve_periodic(co, S, 1, 0).rho.max_abs());
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) {
        Vec3 p = to_cartesian(kAxisym, {co.grid.mu(i), co.grid.nu(j), psi});
        jac = std::max(jac, std::abs(co.jacobian(i, j) - 1.0 / std::hypot(p.x(), p.y())));
      }
  }
  c.require("max |S|", s_max, "<", 1e-12);
  c.require("max |rho|", rho_max, "<", 1e-10);
  c.require("max |J - 1/r|", jac, "<", 1e-12);
}

void perturbed_solve(Criterion& c) {
  auto co = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(64), kExec);
  auto sol = solve(co, 1, 0, 1e-8);
  c.require("relative residual (64^2)", sol.residual_linf / sol.source_linf, "<=", 1e-8);
  c.require("|rho|_inf (64^2)", sol.rho.max_abs(), ">", 1e-3);
  auto fd = oracle::fd_periodic_solve(kFig3bOracle, 0.08, 64, 1, 0);
  double fd_max = 0.0;
  for (double v : fd) fd_max = std::max(fd_max, std::abs(v));
  c.require("FD oracle |rho|_inf (64^2)", fd_max, ">", 1e-3);
  c.require("relative gap of |rho|_inf, FD oracle", std::abs(fd_max - sol.rho.max_abs()) / fd_max, "<", 1e-2);

  auto co32 = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(32), kExec);
  auto s32 = solve(co32, 1, 0, 1e-11);
  auto dense = oracle::dense_galerkin_solve(kFig3bOracle, 0.08, 32, 1, 0);
  double d = 0.0;
  for (std::size_t k = 0; k < dense.size(); ++k) d = std::max(d, std::abs(dense[k] - s32.rho.values[k]));
  c.require("PCG vs dense direct solve (32^2)", d, "<", 1e-6);
  auto fd32 = oracle::fd_periodic_solve(kFig3bOracle, 0.08, 32, 1, 0);
  double dfd = 0.0;
  for (std::size_t k = 0; k < fd32.size(); ++k) dfd = std::max(dfd, std::abs(fd32[k] - s32.rho.values[k]));
  c.info("spectral vs second-order FD (32^2)", dfd);
}

void double_tangency(Criterion& c) {
  RunConfig cfg = parse_config(fixture("fig3b").ini);
  FieldStack st = build_stack(kFig3b, cfg.psi_levels, cfg.grid, {1, 0, cfg.solve}, kExec);
  auto pts = sample_interior(kFig3b, st.curl_psi_min(), st.curl_psi_max(), 1000, kExec);
  auto samples = sample_stack_points(st, pts, true, kExec);
  double tw = 0.0, tc = 0.0;
  for (const auto& s : samples) {
    tw = std::max(tw, std::abs(s.w.dot(s.grad_psi)) / (s.w.norm() * s.grad_psi.norm()));
    tc = std::max(tc, std::abs(s.curl_w.dot(s.grad_psi)));
  }
  CartesianVectorField w = stack_w_field(st);
  const double div = max_over(pts, [&](const Vec3& p) { return std::abs(divergence_fd(w, p, 1e-3)); });
  const double div_r = max_over(pts, [&](const Vec3& p) { return std::abs(divergence_fd_richardson(w, p, 1e-3)); });
  c.require("max |w.grad Psi| / |w||grad Psi|", tw, "<", 1e-8);
  c.require("max |curl w . grad Psi|", tc, "<", 1e-6);
  c.require("max |div w|, central FD h = 1e-3", div, "<", 1e-5);
  c.info("max |div w|, Richardson FD h = 1e-3", div_r);
}

void dirichlet_demo(Criterion& c) {
  RunConfig cfg = parse_config(fixture("fig3a").ini);
  auto co = assemble_coefficients(kFig3a, 0.16, cfg.grid, kExec);
  Field2D S = assemble_source(co, 1, 0);
  auto dir = solve_dirichlet(co, S, 1, 0, cfg.solve);
  auto per = solve_periodic(co, S, 1, 0, cfg.solve);
  const double d_dir = periodicity_defect(boundary_derivatives_fd(dir.rho)).d_mu;
  const double d_per = periodicity_defect(boundary_derivatives_fd(per.rho)).d_mu;
  c.info("Dirichlet rho_mu jump across mu = 0", d_dir);
  c.info("periodic rho_mu jump across mu = 0", d_per);
  c.require("ratio", d_dir / d_per, ">", 10.0);
}

void harmonic_solution(Criterion& c) {
  RunConfig cfg = parse_config(fixture("fig4").ini);
  const AnalyticSolution& a = cfg.analytic;
  const SurfaceFamily fam = a.family();
  auto pts = level_points(fam, 0.08, 1000);
  CartesianVectorField wf = a.w_field();
  const double par = max_over(pts, [&](const Vec3& p) {
    const Vec3 F = eval_harmonic_solution(a, p).force;
    const Vec3 n = grad_psi(fam, p).normalized();
    return (F - F.dot(n) * n).norm() / F.norm();
  });
  const double div_r = max_over(pts, [&](const Vec3& p) { return std::abs(divergence_fd_richardson(wf, p, 1e-4)); });
  const double div_c = max_over(pts, [&](const Vec3& p) { return std::abs(divergence_fd(wf, p, 1e-4)); });
  const double force = max_over(pts, [&](const Vec3& p) {
    const HarmonicSample s = eval_harmonic_solution(a, p);
    return (curl_fd(wf, p, 1e-4).cross(s.w) - s.force).norm();
  });
  const double aniso = max_over(pts, [&](const Vec3& p) {
    return pressure_divergence(a.f, fam, wf, a.curl_field(), p, 1e-4).mismatch;
  });
  c.require("force parallelism defect", par, "<", 1e-8);
  c.require("max |div w|, Richardson FD h = 1e-4", div_r, "<", 1e-7);
  c.info("max |div w|, central FD h = 1e-4", div_c);
  c.require("closed-form vs FD-curl force", force, "<", 1e-6);
  c.require("|div Pi - (curl w) x w|", aniso, "<", 1e-6);
}

void equilibrium_nodiv(Criterion& c) {
  AnalyticSolution a;
  a.kind = AnalyticKind::equilibrium_nodiv;
  a.C = 1.0;
  a.g = ScalarProfile::parse("trig:0,0,1");
  auto pts = level_points(a.family(), 0.1, 500);
  std::vector<EquilibriumSample> es(pts.size());
  for_each_index(kExec, static_cast<long>(pts.size()), [&](long k) { es[k] = eval_equilibrium_nodiv(a, pts[k]); });
  double res = 0.0, res_fd = 0.0;
  for (const auto& e : es) {
    res = std::max(res, e.residual);
    res_fd = std::max(res_fd, e.residual_fd);
  }
  c.require("|(curl w) x w - grad Psi|, closed-form curl", res, "<", 1e-7);
  c.require("|(curl w) x w - grad Psi|, FD curl", res_fd, "<", 1e-7);
  c.require("max |div w|", max_over(pts, [&](const Vec3& p) { return std::abs(a.div_w(p)); }), ">", 1e-2);
}

void symmetry_detection(Criterion& c) {
  auto report = [&](const SurfaceFamily& fam) {
    GradientField g = [fam](const Vec3& p) { return grad_psi(fam, p); };
    return isometry_nullspace(g, sample_interior(fam, 0.06, 0.1, 500, kExec), kNullspaceTau, kExec);
  };
  SymmetryReport ax = report(kAxisym);
  c.require_eq("axisym nullspace_dim", ax.nullspace_dim, 1);
  if (!ax.generators.empty())
    c.require("axisym 1 - |cos| to z-rotation",
              1.0 - generator_similarity(ax.generators[0], {Vec3::Zero(), Vec3::UnitZ()}), "<", 1e-4);
  c.info("axisym sigma6/sigma1", ax.normalized[5]);
  // Separation threshold between the observed ratios (0.0963 and above for the
  // perturbed families, 4e-17 for axisym).
  const double separation = 1e-3;
  for (auto [name, fam] : {std::pair<const char*, SurfaceFamily>{"phase-perturbed", surface::PhasePerturbed{1.0, 0.1, 4}},
                           std::pair<const char*, SurfaceFamily>{"exp-sheared", surface::ExpSheared{1.0, 0.18}}}) {
    SymmetryReport r = report(fam);
    c.require_eq(std::string(name) + " nullspace_dim", r.nullspace_dim, 0);
    c.require(std::string(name) + " sigma6/sigma1", r.normalized[5], ">", separation);
  }
  SurfaceFamily cj = surface::ConjugateHarmonic{1.0, 0.05, 1};
  auto psi = [&](const Vec3& p) { return psi_value(cj, p); };
  c.require("conjugate family z-reflection defect",
            reflection_defect(psi, Vec3::UnitZ(), 0.0, sample_interior(cj, 0.06, 0.1, 500, kExec)), ">", 0.0);
}

void energy_stationarity(Criterion& c) {
  auto co = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(64), kExec);
  auto sol = solve(co, 1, 0, 1e-10);
  const double e0 = surface_energy(co, sol.rho, 1, 0);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  const std::vector<double> ts = {1e-3, -1e-3, 2e-3, -2e-3, 4e-3, -4e-3};
  std::vector<double> lin(50), rise(50);
  std::vector<Field2D> deltas;
  for (int q = 0; q < 50; ++q) {
    Field2D d(co.grid);
    for (double& v : d.values) v = normal(rng);
    d.project_zero_mean();
    const double a = d.max_abs();
    for (double& v : d.values) v /= a;
    deltas.push_back(std::move(d));
  }
  for_each_index(kExec, 50, [&](long q) {
    auto shifted = [&](double t) {
      Field2D x = sol.rho;
      for (std::size_t i = 0; i < x.values.size(); ++i) x.values[i] += t * deltas[q].values[i];
      return surface_energy(co, x, 1, 0) - e0;
    };
    // Least squares for y = b t + c t^2.
    double s2 = 0, s3 = 0, s4 = 0, y1 = 0, y2 = 0;
    for (double t : ts) {
      const double y = shifted(t);
      s2 += t * t;
      s3 += t * t * t;
      s4 += t * t * t * t;
      y1 += y * t;
      y2 += y * t * t;
    }
    lin[q] = std::abs((y1 * s4 - y2 * s3) / (s2 * s4 - s3 * s3));
    rise[q] = std::min(shifted(1.0), shifted(-1.0));
  });
  double max_lin = 0.0, min_rise = INFINITY;
  for (int q = 0; q < 50; ++q) {
    max_lin = std::max(max_lin, lin[q]);
    min_rise = std::min(min_rise, rise[q]);
  }
  c.require("max fitted linear coefficient", max_lin, "<", 1e-7);
  c.require("min E(rho + delta) - E(rho)", min_rise, ">=", 0.0);
}

void convergence(Criterion& c) {
  std::vector<Field2D> rho;
  for (int n : {32, 64, 128}) {
    auto co = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(n), kExec);
    rho.push_back(solve(co, 1, 0, 1e-11).rho);
  }
  const double e1 = coarse_fine_diff(rho[0], rho[1]), e2 = coarse_fine_diff(rho[1], rho[2]);
  c.info("|rho_32 - rho_64|", e1);
  c.info("|rho_64 - rho_128|", e2);
  c.require("self-convergence ratio", e1 / e2, ">", 4.0);

  std::vector<double> err;
  for (double d : {0.01, 0.005, 0.0025}) {
    FieldStack st = build_stack(kAxisym, uniform(0.08 - 2 * d, 0.08 + 2 * d, 5), PeriodicGrid::square(16), {}, kExec);
    auto pts = sample_interior(kAxisym, st.curl_psi_min(), st.curl_psi_max(), 200, kExec);
    double e = 0.0;
    for (const auto& s : sample_stack_points(st, pts, true, kExec))
      e = std::max(e, (s.curl_w - oracle::axisym_curl_w(1.0, s.point)).norm());
    c.info("axisym curl error, dPsi = " + std::to_string(d), e);
    err.push_back(e);
  }
  c.require("curl error ratio, dPsi 0.01 -> 0.005", err[0] / err[1], ">=", 3.5);
  c.require("curl error ratio, dPsi 0.005 -> 0.0025", err[1] / err[2], ">=", 3.5);
}

void nontriviality(Criterion& c) {
  auto co = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(64), kExec);
  for (auto [M, N] : {std::pair{1, 0}, std::pair{2, 1}}) {
    auto sol = solve(co, M, N, 1e-8);
    const std::string tag = "(" + std::to_string(M) + "," + std::to_string(N) + ") ";
    c.require(tag + "|<Theta_mu> - 4 pi^2 M|, spectral", std::abs(theta_mu_integral(sol) - kFourPi2 * M), "<=",
              1e-12 * kFourPi2 * M);
    c.require(tag + "|<Theta_mu> - 4 pi^2 M|, nodal", std::abs(theta_mu_integral_nodal(sol) - kFourPi2 * M), "<=",
              1e-12 * kFourPi2 * M);
    c.info(tag + "|rho|_inf", sol.rho.max_abs());
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Criterion&)>>> criteria = {
      {"axisymmetric exactness", axisym_exactness},
      {"perturbed-surface solve and oracle equivalence", perturbed_solve},
      {"double tangency of the reconstructed field", double_tangency},
      {"Dirichlet periodicity defect", dirichlet_demo},
      {"harmonic-product analytic solution", harmonic_solution},
      {"equilibrium without divergence constraint", equilibrium_nodiv},
      {"symmetry detection", symmetry_detection},
      {"energy stationarity", energy_stationarity},
      {"convergence", convergence},
      {"nontriviality of <Theta_mu>", nontriviality},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    std::printf("criterion %zu: %s\n", k + 1, criteria[k].first);
    Criterion c;
    bool ok = true;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[k].second(c);
      ok = c.pass();
    } catch (const std::exception& e) {
      std::printf("    exception: %s\n", e.what());
      ok = false;
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2zu %s (%.1f s)\n", ok ? "PASS" : "FAIL", k + 1, criteria[k].first, dt);
    std::fflush(stdout);
    failed += ok ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
