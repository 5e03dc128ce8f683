#include "clebsch/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "clebsch/analytic.hpp"
#include "clebsch/diagnostics.hpp"
#include "clebsch/errors.hpp"

namespace clebsch {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

constexpr const char* kManifest = "surfaces.json";
constexpr int kSymmetrySamples = 500;
constexpr int kValiditySamples = 2000;
constexpr int kEnergyProbes = 8;
constexpr int kQuasisymmetryLattice = 16;
constexpr double kFdStep = 1e-4;  // plain central differences

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string surface_file(int k) { return "surface_" + std::to_string(k) + ".csv"; }

fs::path out_path(const RunConfig& cfg, const std::string& name) {
  return fs::path(cfg.out_dir) / name;
}

void ensure_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

bool unit_profile(const ScalarProfile& f) { return f.to_string() == ScalarProfile().to_string(); }

// Pass/fail bookkeeping. Report-only entries carry a null threshold and never
// fail the run.
class Checks {
 public:
  void add(const std::string& name, double value, const std::string& rel, double threshold) {
    bool pass = false;
    if (rel == "<") pass = value < threshold;
    else if (rel == "<=") pass = value <= threshold;
    else if (rel == ">") pass = value > threshold;
    else if (rel == ">=") pass = value >= threshold;
    if (!pass) ok_ = false;
    list_.push_back({{"name", name}, {"value", value}, {"relation", rel},
                     {"threshold", threshold}, {"asserted", true}, {"passed", pass}});
  }
  void report(const std::string& name, double value) {
    list_.push_back({{"name", name}, {"value", value}, {"relation", nullptr},
                     {"threshold", nullptr}, {"asserted", false}, {"passed", nullptr}});
  }
  bool ok() const { return ok_; }
  const json& list() const { return list_; }

 private:
  json list_ = json::array();
  bool ok_ = true;
};

// Everything the reports say about one solved surface.
struct SurfaceRun {
  SurfaceSolution sol;
  EllipticCoefficients coeffs;
  double source_mean = 0.0;
  PeriodicityDefect defect_fd;
  std::optional<PeriodicityDefect> defect_spectral;  // periodic only
  std::optional<PeriodicityDefect> reference_fd;     // dirichlet only: periodic solve, same surface
  double energy = 0.0;
};

void finish_surface(SurfaceRun& r) {
  r.defect_fd = periodicity_defect(boundary_derivatives_fd(r.sol.rho));
  if (r.sol.bc == BoundaryMode::periodic) {
    r.defect_spectral = periodicity_defect(boundary_derivatives_spectral(r.sol.rho));
    r.energy = surface_energy(r.coeffs, r.sol.rho, r.sol.M, r.sol.N);
  }
}

void attach_reference(SurfaceRun& r, const Field2D& S, const RunConfig& cfg) {
  if (r.sol.bc != BoundaryMode::dirichlet) return;
  const SurfaceSolution p = solve_periodic(r.coeffs, S, cfg.M, cfg.N, cfg.solve);
  r.reference_fd = periodicity_defect(boundary_derivatives_fd(p.rho));
}

SurfaceRun run_surface(const RunConfig& cfg, double psi) {
  SurfaceRun r;
  r.coeffs = assemble_coefficients(cfg.family, psi, cfg.grid);
  const Field2D S = assemble_source(r.coeffs, cfg.M, cfg.N);
  r.source_mean = S.mean();
  r.sol = cfg.bc == BoundaryMode::periodic ? solve_periodic(r.coeffs, S, cfg.M, cfg.N, cfg.solve)
                                           : solve_dirichlet(r.coeffs, S, cfg.M, cfg.N, cfg.solve);
  attach_reference(r, S, cfg);
  finish_surface(r);
  return r;
}

SurfaceRun rebuild_surface(const RunConfig& cfg, double psi, Field2D rho, int iterations) {
  SurfaceRun r;
  r.coeffs = assemble_coefficients(cfg.family, psi, cfg.grid);
  const Field2D S = assemble_source(r.coeffs, cfg.M, cfg.N);
  r.source_mean = S.mean();
  r.sol.psi_level = psi;
  r.sol.M = cfg.M;
  r.sol.N = cfg.N;
  r.sol.bc = cfg.bc;
  r.sol.rho = std::move(rho);
  r.sol.iterations = iterations;
  r.sol.source_linf = S.max_abs();
  if (cfg.bc == BoundaryMode::periodic) {
    Field2D res = apply_operator(r.coeffs, r.sol.rho);
    for (std::size_t i = 0; i < res.values.size(); ++i) res.values[i] -= S.values[i];
    r.sol.residual_linf = res.max_abs();
  } else {
    r.sol.residual_linf = dirichlet_residual(r.coeffs, r.sol.rho, S);
  }
  attach_reference(r, S, cfg);
  finish_surface(r);
  return r;
}

template <class F>
std::vector<SurfaceRun> for_levels(const RunConfig& cfg, Exec exec, F&& make) {
  std::vector<SurfaceRun> runs(cfg.psi_levels.size());
  for_each_index(exec, static_cast<long>(runs.size()), [&](long k) {
    const double psi = cfg.psi_levels[static_cast<std::size_t>(k)];
    try {
      runs[static_cast<std::size_t>(k)] = make(static_cast<int>(k), psi);
    } catch (const ArtifactError&) {
      throw;
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "surface " << k << " (psi = " << psi << "): " << e.what();
      throw SurfaceSolveError(os.str(), static_cast<int>(k), psi);
    }
  });
  return runs;
}

std::vector<SurfaceRun> solve_runs(const RunConfig& cfg, Exec exec) {
  return for_levels(cfg, exec, [&](int, double psi) { return run_surface(cfg, psi); });
}

json manifest_json(const RunConfig& cfg, const std::vector<SurfaceRun>& runs) {
  json s = json::array();
  for (std::size_t k = 0; k < runs.size(); ++k)
    s.push_back({{"index", k}, {"psi", runs[k].sol.psi_level},
                 {"file", surface_file(static_cast<int>(k))},
                 {"iterations", runs[k].sol.iterations}});
  return {{"schema", "clebsch-surfaces/1"}, {"family", cfg.family.describe()},
          {"grid", {cfg.grid.n_mu, cfg.grid.n_nu}}, {"M", cfg.M}, {"N", cfg.N},
          {"bc", to_string(cfg.bc)}, {"levels", cfg.psi_levels}, {"surfaces", s}};
}

std::vector<SurfaceRun> load_runs(const RunConfig& cfg, Exec exec) {
  if (cfg.field != FieldKind::stack)
    throw ConfigError("analytic configurations have no surface artifacts");
  const fs::path mpath = out_path(cfg, kManifest);
  std::ifstream in(mpath);
  if (!in)
    throw ArtifactError("no solve artifacts in '" + cfg.out_dir + "' (missing " + kManifest +
                        "); run solve first");
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw ArtifactError(mpath.string() + ": " + e.what());
  }
  const json expect = manifest_json(cfg, {});
  for (const char* key : {"family", "grid", "M", "N", "bc", "levels"})
    if (m.value(key, json()) != expect[key])
      throw ArtifactError(std::string("artifacts in '") + cfg.out_dir +
                          "' were written for a different configuration (" + key + " differs)");
  const json& surfaces = m.at("surfaces");
  if (surfaces.size() != cfg.psi_levels.size())
    throw ArtifactError("manifest lists " + std::to_string(surfaces.size()) + " surfaces");
  return for_levels(cfg, exec, [&](int k, double psi) {
    const json& e = surfaces.at(static_cast<std::size_t>(k));
    const Table t = read_csv(out_path(cfg, e.at("file").get<std::string>()).string());
    return rebuild_surface(cfg, psi, rho_from_table(t, cfg.grid), e.at("iterations").get<int>());
  });
}

json defect_json(const std::optional<PeriodicityDefect>& d) {
  if (!d) return nullptr;
  return {{"d_mu", d->d_mu}, {"d_nu", d->d_nu}};
}

json surface_json(const RunConfig& cfg, int k, const SurfaceRun& r) {
  const SurfaceSolution& s = r.sol;
  const bool periodic = s.bc == BoundaryMode::periodic;
  const double rel = s.source_linf > 0.0 ? s.residual_linf / s.source_linf : 0.0;
  return {{"index", k},
          {"psi", s.psi_level},
          {"file", surface_file(k)},
          {"bc", to_string(s.bc)},
          {"iterations", s.iterations},
          {"residual_linf", s.residual_linf},
          {"relative_residual", rel},
          {"source_linf", s.source_linf},
          {"source_mean", r.source_mean},
          {"rho_linf", s.rho.max_abs()},
          {"certificates",
           {{"min_lambda", r.coeffs.min_lambda},
            {"min_det", r.coeffs.min_det},
            {"min_jacobian", r.coeffs.min_jacobian},
            {"max_jacobian", r.coeffs.max_jacobian}}},
          {"periodicity_defect_fd", defect_json(r.defect_fd)},
          {"periodicity_defect_spectral", defect_json(r.defect_spectral)},
          {"periodic_reference_defect_fd", defect_json(r.reference_fd)},
          {"energy", periodic ? json(r.energy) : json(nullptr)},
          {"theta_mu_integral", periodic ? json(theta_mu_integral(s)) : json(nullptr)},
          {"tol", cfg.solve.tol}};
}

void surface_checks(const RunConfig& cfg, int k, const SurfaceRun& r, Checks& c) {
  const std::string p = "surface[" + std::to_string(k) + "].";
  const SurfaceSolution& s = r.sol;
  const double rel = s.source_linf > 0.0 ? s.residual_linf / s.source_linf : 0.0;
  // A round-off source has the exact solution rho = 0 and a residual equal to S.
  if (s.source_linf <= source_floor(r.coeffs))
    c.add(p + "residual_at_roundoff", s.residual_linf, "<=", source_floor(r.coeffs));
  else
    c.add(p + "relative_residual", rel, "<=", cfg.solve.tol);
  c.add(p + "compatibility", std::abs(r.source_mean), "<=", kCompatibilityTol);
  c.add(p + "min_lambda", r.coeffs.min_lambda, ">", 0.0);
  c.add(p + "min_det", r.coeffs.min_det, ">", 0.0);
  c.add(p + "min_jacobian", r.coeffs.min_jacobian, ">", kJacobianMin);
}

// E_D(rho + t delta) - E_D(rho) = b t + C t^2 fitted over t = +-1e-3, +-2e-3,
// +-4e-3 for random zero-mean delta with max |delta| = 1. Returns the largest
// |b| and the smallest E_D(rho + delta) - E_D(rho).
std::pair<double, double> energy_probe(const SurfaceRun& r, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const SurfaceSolution& s = r.sol;
  const double E0 = r.energy;
  auto shifted = [&](const Field2D& d, double t) {
    Field2D x = s.rho;
    for (std::size_t i = 0; i < x.values.size(); ++i) x.values[i] += t * d.values[i];
    return surface_energy(r.coeffs, x, s.M, s.N) - E0;
  };
  double max_lin = 0.0, min_rise = std::numeric_limits<double>::infinity();
  for (int q = 0; q < kEnergyProbes; ++q) {
    Field2D d(s.rho.grid);
    for (double& v : d.values) v = normal(rng);
    d.project_zero_mean();
    const double a = d.max_abs();
    for (double& v : d.values) v /= a;
    double s2 = 0, s3 = 0, s4 = 0, y1 = 0, y2 = 0;
    for (double t : {1e-3, -1e-3, 2e-3, -2e-3, 4e-3, -4e-3}) {
      const double y = shifted(d, t);
      s2 += t * t;
      s3 += t * t * t;
      s4 += t * t * t * t;
      y1 += y * t;
      y2 += y * t * t;
    }
    const double b = (y1 * s4 - y2 * s3) / (s2 * s4 - s3 * s3);
    max_lin = std::max(max_lin, std::abs(b));
    min_rise = std::min(min_rise, shifted(d, 1.0));
  }
  return {max_lin, min_rise};
}

// w' = f(Psi) w and curl w' = f curl w + f' grad Psi x w on a stack sample.
void apply_profile(StackSample& s, const ScalarProfile& f) {
  const double psi = s.coords.psi;
  const double fv = f.value(psi), df = f.derivative(psi);
  if (s.has_curl) s.curl_w = fv * s.curl_w + df * s.grad_psi.cross(s.w);
  s.w *= fv;
  s.w_clebsch *= fv;
}

void require_profile(const RunConfig& cfg, double lo, double hi) {
  if (!cfg.analytic.f.differentiable_on(lo, hi))
    throw ConfigError("[field] f = " + cfg.analytic.f.to_string() +
                      " is not differentiable on the level range");
}

std::vector<Vec3> level_points(const SurfaceFamily& fam, double psi, int n, Exec exec) {
  const auto u = sobol_unit_cube(n);
  std::vector<Vec3> pts(u.size());
  for_each_index(exec, static_cast<long>(u.size()), [&](long k) {
    const auto& q = u[static_cast<std::size_t>(k)];
    pts[static_cast<std::size_t>(k)] = to_cartesian(fam, {kTwoPi * q[0], kTwoPi * q[1], psi});
  });
  return pts;
}

json validity_json(const RunConfig& cfg) {
  const double lo = cfg.psi_levels.front(), hi = cfg.psi_levels.back();
  const ValidityReport v = validity_scan(cfg.family, lo, hi, kValiditySamples);
  return {{"psi_range", {lo, hi}},
          {"samples", v.samples},
          {"inversion_failures", v.inversion_failures},
          {"min_grad_psi", v.min_grad_psi},
          {"min_jacobian", v.min_jacobian},
          {"max_jacobian", v.max_jacobian},
          {"violation", v.violation},
          {"reason", v.reason}};
}

json symmetry_json(const RunConfig& cfg, Exec exec) {
  const double lo = cfg.psi_levels.front(), hi = cfg.psi_levels.back();
  const SurfaceFamily& fam = cfg.family;
  const std::vector<Vec3> pts = sample_interior(fam, lo, hi, kSymmetrySamples, exec);
  const SymmetryReport rep =
      isometry_nullspace([&](const Vec3& p) { return grad_psi(fam, p); }, pts, kNullspaceTau, exec);
  json gens = json::array();
  for (const auto& g : rep.generators) gens.push_back({g.a.x(), g.a.y(), g.a.z(), g.b.x(), g.b.y(), g.b.z()});
  auto psi = [&](const Vec3& p) { return psi_value(fam, p); };
  return {{"psi_range", {lo, hi}},
          {"samples", rep.samples},
          {"tau", rep.tau},
          {"singular_values", rep.singular_values},
          {"normalized", rep.normalized},
          {"nullspace_dim", rep.nullspace_dim},
          {"generators", gens},
          {"degenerate_samples", rep.degenerate_samples},
          {"reflection_defect",
           {{"z", reflection_defect(psi, Vec3::UnitZ(), 0.0, pts)},
            {"x", reflection_defect(psi, Vec3::UnitX(), 0.0, pts)},
            {"y", reflection_defect(psi, Vec3::UnitY(), 0.0, pts)}}}};
}

json quasisymmetry_null() {
  return {{"applicable", false},  {"surfaces", nullptr},       {"points_per_surface", nullptr},
          {"max_div_u", nullptr}, {"max_u_grad_w2", nullptr},  {"surface_const_defect", nullptr},
          {"max_tangential", nullptr}, {"max_tangency", nullptr}, {"quasisymmetric", nullptr}};
}

json stack_null(bool available) {
  return {{"available", available},     {"levels", nullptr},         {"curl_psi_range", nullptr},
          {"profile", nullptr},         {"volume_energy", nullptr},  {"test_points", nullptr},
          {"max_w_tangency", nullptr},  {"max_curl_tangency", nullptr},
          {"max_curl_dot_grad_psi", nullptr}, {"max_divergence_fd", nullptr},
          {"max_divergence_fd_central", nullptr},
          {"fd_step", nullptr},         {"max_clebsch_mismatch", nullptr},
          {"min_beltrami_ratio", nullptr}, {"max_beltrami_ratio", nullptr}};
}

json base_report(const std::string& command, const RunConfig& cfg) {
  return {{"schema", kReportSchema},
          {"command", command},
          {"name", cfg.name},
          {"config", to_ini(cfg)},
          {"family", cfg.family.describe()},
          {"field_kind",
           cfg.field == FieldKind::stack ? std::string("stack") : to_string(cfg.analytic.kind)},
          {"bc", to_string(cfg.bc)},
          {"grid", {cfg.grid.n_mu, cfg.grid.n_nu}},
          {"M", cfg.M},
          {"N", cfg.N},
          {"levels", cfg.psi_levels},
          {"surfaces", json::array()},
          {"stack", stack_null(stack_available(cfg))},
          {"analytic", nullptr},
          {"symmetry", nullptr},
          {"quasisymmetry", quasisymmetry_null()},
          {"validity", nullptr},
          {"export", nullptr},
          {"checks", json::array()},
          {"files", json::array()},
          {"timings", json::object()},
          {"status", "pass"},
          {"exit_code", kExitPass}};
}

void finish_report(RunResult& r, const Checks& c, const fs::path& path) {
  r.report["checks"] = c.list();
  r.exit_code = c.ok() ? kExitPass : kExitCheckFailure;
  r.report["status"] = c.ok() ? "pass" : "fail";
  r.report["exit_code"] = r.exit_code;
  r.files.push_back(path.string());
  r.report["files"] = r.files;
  write_json(path, r.report);
}

std::vector<SurfaceSolution> solutions_of(std::vector<SurfaceRun>& runs) {
  std::vector<SurfaceSolution> sols;
  for (auto& r : runs) sols.push_back(r.sol);
  return sols;
}

// ---- VTK lattices ----

VtkGrid stack_vtk(const RunConfig& cfg, const FieldStack& st, Exec exec) {
  const PeriodicGrid& g = st.grid;
  const int K = static_cast<int>(st.levels.size());
  VtkGrid v;
  v.nx = g.n_mu;
  v.ny = g.n_nu;
  v.nz = K - 2;
  const std::size_t n = static_cast<std::size_t>(g.size()) * v.nz;
  v.points.resize(n);
  std::vector<double> rho(n), psi(n);
  std::vector<Vec3> w(n), curl(n);
  const bool wrap = !unit_profile(cfg.analytic.f);
  for_each_index(exec, static_cast<long>(n), [&](long q) {
    const int k = 1 + static_cast<int>(q / g.size());
    const int j = static_cast<int>((q % g.size()) / g.n_mu);
    const int i = static_cast<int>(q % g.n_mu);
    StackSample s = sample_stack(st, {g.mu(i), g.nu(j), st.levels[k].psi}, true);
    if (wrap) apply_profile(s, cfg.analytic.f);
    const auto u = static_cast<std::size_t>(q);
    v.points[u] = s.point;
    rho[u] = st.levels[k].solution.rho(i, j);
    psi[u] = st.levels[k].psi;
    w[u] = s.w;
    curl[u] = s.curl_w;
  });
  v.scalars = {{"rho", rho}, {"psi", psi}};
  v.vectors = {{"w", w}, {"curl_w", curl}};
  return v;
}

VtkGrid analytic_vtk(const RunConfig& cfg, Exec exec) {
  const PeriodicGrid& g = cfg.grid;
  const AnalyticSolution& a = cfg.analytic;
  VtkGrid v;
  v.nx = g.n_mu;
  v.ny = g.n_nu;
  v.nz = static_cast<int>(cfg.psi_levels.size());
  const std::size_t n = static_cast<std::size_t>(g.size()) * v.nz;
  v.points.resize(n);
  std::vector<double> psi(n);
  std::vector<Vec3> w(n), curl(n);
  for_each_index(exec, static_cast<long>(n), [&](long q) {
    const auto k = static_cast<std::size_t>(q / g.size());
    const int j = static_cast<int>((q % g.size()) / g.n_mu);
    const int i = static_cast<int>(q % g.n_mu);
    const auto u = static_cast<std::size_t>(q);
    v.points[u] = to_cartesian(cfg.family, {g.mu(i), g.nu(j), cfg.psi_levels[k]});
    psi[u] = cfg.psi_levels[k];
    w[u] = a.w(v.points[u]);
    curl[u] = a.curl_w(v.points[u]);
  });
  v.scalars = {{"psi", psi}};
  v.vectors = {{"w", w}, {"curl_w", curl}};
  return v;
}

// ---- verification suites ----

void verify_stack(const RunConfig& cfg, const FieldStack& st, json& out, Checks& c, Exec exec) {
  const double lo = st.curl_psi_min(), hi = st.curl_psi_max();
  const std::vector<Vec3> pts = sample_interior(cfg.family, lo, hi, cfg.test_points, exec);
  std::vector<StackSample> samples = sample_stack_points(st, pts, true, exec);
  const bool wrap = !unit_profile(cfg.analytic.f);
  if (wrap) {
    require_profile(cfg, st.psi_min(), st.psi_max());
    for (auto& s : samples) apply_profile(s, cfg.analytic.f);
  }
  CartesianVectorField w = stack_w_field(st);
  if (wrap) w = wrap_with_f(w, cfg.family, cfg.analytic.f, st.psi_min(), st.psi_max());

  const std::size_t n = pts.size();
  std::vector<double> tw(n), tc(n), tca(n), div(n), div_c(n), cl(n), bel(n);
  for_each_index(exec, static_cast<long>(n), [&](long q) {
    const auto k = static_cast<std::size_t>(q);
    const StackSample& s = samples[k];
    const double gn = s.grad_psi.norm();
    tw[k] = std::abs(s.w.dot(s.grad_psi)) / (s.w.norm() * gn);
    tca[k] = std::abs(s.curl_w.dot(s.grad_psi));
    const double cn = s.curl_w.norm();
    tc[k] = cn > 0.0 ? tca[k] / (cn * gn) : 0.0;
    div[k] = std::abs(divergence_fd_richardson(w, pts[k], cfg.fd_step));
    div_c[k] = std::abs(divergence_fd(w, pts[k], cfg.fd_step));
    cl[k] = (s.w - s.w_clebsch).norm() / s.w.norm();
    // Near zero everywhere would flag a Beltrami or vacuum field.
    bel[k] = cn > 0.0 ? s.curl_w.cross(s.w).norm() / (cn * s.w.norm()) : 0.0;
  });
  auto mx = [](const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); };
  out["test_points"] = n;
  out["max_w_tangency"] = mx(tw);
  out["max_curl_tangency"] = mx(tc);
  out["max_curl_dot_grad_psi"] = mx(tca);
  out["max_divergence_fd"] = mx(div);
  out["max_divergence_fd_central"] = mx(div_c);
  out["fd_step"] = cfg.fd_step;
  out["max_clebsch_mismatch"] = mx(cl);
  out["min_beltrami_ratio"] = *std::min_element(bel.begin(), bel.end());
  out["max_beltrami_ratio"] = mx(bel);
  c.add("stack.w_tangency", mx(tw), "<", 1e-8);
  c.add("stack.curl_dot_grad_psi", mx(tca), "<", 1e-6);
  c.add("stack.divergence_fd", mx(div), "<", 1e-5);
  c.report("stack.divergence_fd_central", mx(div_c));
  c.add("stack.clebsch_mismatch", mx(cl), "<", 1e-10);
  c.report("stack.beltrami_ratio_min", out["min_beltrami_ratio"].get<double>());
}

double max_over(const std::vector<Vec3>& pts, Exec exec, const std::function<double(const Vec3&)>& f) {
  std::vector<double> v(pts.size());
  for_each_index(exec, static_cast<long>(pts.size()),
                 [&](long k) { v[static_cast<std::size_t>(k)] = f(pts[static_cast<std::size_t>(k)]); });
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

json verify_analytic(const RunConfig& cfg, Checks& c, json& qs, Exec exec) {
  const AnalyticSolution& a = cfg.analytic;
  const SurfaceFamily& fam = cfg.family;
  const double psi_e = cfg.export_level();
  const std::vector<Vec3> pts = level_points(fam, psi_e, cfg.test_points, exec);
  const CartesianVectorField wf = a.w_field();
  const double h = cfg.fd_step;
  json out = {{"kind", to_string(a.kind)}, {"psi", psi_e}, {"points", pts.size()},
              {"fd_step", h}, {"f", a.f.to_string()}};
  require_profile(cfg, cfg.psi_levels.front(), cfg.psi_levels.back());

  auto parallel_defect = [&](const Vec3& p) {
    const Vec3 F = a.curl_w(p).cross(a.w(p));
    const double fn = F.norm();
    if (fn == 0.0) return 0.0;
    const Vec3 nh = grad_psi(fam, p).normalized();
    return (F - F.dot(nh) * nh).norm() / fn;
  };
  auto xi_tangency = [&](const Vec3& p) {
    const Vec3 xi = analytic_xi(a, p), g = grad_psi(fam, p);
    return std::abs(xi.dot(g)) / (xi.norm() * g.norm());
  };

  switch (a.kind) {
    case AnalyticKind::harmonic_product:
    case AnalyticKind::conjugate_family: {
      const bool harmonic = a.kind == AnalyticKind::harmonic_product;
      const double tang = max_over(pts, exec, xi_tangency);
      const double par = max_over(pts, exec, parallel_defect);
      const double div_r = max_over(pts, exec, [&](const Vec3& p) {
        return std::abs(divergence_fd_richardson(wf, p, h));
      });
      const double div_c = max_over(pts, exec, [&](const Vec3& p) {
        return std::abs(divergence_fd(wf, p, kFdStep));
      });
      out["max_xi_tangency"] = tang;
      out["max_force_parallel_defect"] = par;
      out["max_divergence_fd_richardson"] = div_r;
      out["max_divergence_fd_central"] = div_c;
      if (harmonic) {
        c.add("analytic.xi_tangency", tang, "<", 1e-12);
        c.add("analytic.force_parallelism", par, "<", 1e-8);
        c.add("analytic.divergence_fd", div_r, "<", 1e-7);
      } else {
        c.report("analytic.xi_tangency", tang);
        c.report("analytic.force_parallelism", par);
        c.report("analytic.divergence_fd", div_r);
      }
      c.report("analytic.divergence_fd_central", div_c);
      if (harmonic) {
        const double fd_force = max_over(pts, exec, [&](const Vec3& p) {
          const HarmonicSample s = eval_harmonic_solution(a, p);
          return (curl_fd(wf, p, kFdStep).cross(s.w) - s.force).norm();
        });
        std::vector<PressureBalance> pb(pts.size());
        for_each_index(exec, static_cast<long>(pts.size()), [&](long k) {
          pb[static_cast<std::size_t>(k)] = pressure_divergence(
              a.f, fam, wf, a.curl_field(), pts[static_cast<std::size_t>(k)], kFdStep);
        });
        double mis = 0.0, form = 0.0;
        for (const auto& b : pb) {
          mis = std::max(mis, b.mismatch);
          form = std::max(form, b.form_defect);
        }
        out["max_force_closed_vs_fd"] = fd_force;
        out["max_anisotropic_mismatch"] = mis;
        out["max_anisotropic_form_defect"] = form;
        c.add("analytic.force_closed_vs_fd", fd_force, "<", 1e-6);
        c.add("analytic.anisotropic_balance", mis, "<", 1e-6);
        c.add("analytic.anisotropic_form", form, "<", 1e-6);

        static const char* names[] = {"tx", "ty", "tz", "rx", "ry", "rz"};
        json lie = json::object();
        double chain = 0.0, chain_c = 0.0;
        for (int gidx = 0; gidx < 6; ++gidx) {
          IsometryGenerator gen;
          (gidx < 3 ? gen.a : gen.b)[gidx % 3] = 1.0;
          const double mag = max_over(pts, exec, [&](const Vec3& p) {
            return std::abs(lie_modulus_w2(a, gen, p));
          });
          chain = std::max(chain, max_over(pts, exec, [&](const Vec3& p) {
                             return std::abs(lie_modulus_w2(a, gen, p) -
                                             lie_modulus_w2_fd_richardson(wf, gen, p, h));
                           }));
          chain_c = std::max(chain_c, max_over(pts, exec, [&](const Vec3& p) {
                               return std::abs(lie_modulus_w2(a, gen, p) -
                                               lie_modulus_w2_fd(wf, gen, p, kFdStep));
                             }));
          lie[names[gidx]] = mag;
          c.add(std::string("analytic.lie_modulus_nonzero.") + names[gidx], mag, ">", 1e-6);
        }
        out["max_lie_modulus_w2"] = lie;
        out["max_lie_chain_vs_fd"] = chain;
        out["max_lie_chain_vs_fd_central"] = chain_c;
        c.add("analytic.lie_chain_vs_fd", chain, "<", 1e-7);
        c.report("analytic.lie_chain_vs_fd_central", chain_c);
      }
      const CartesianVectorField xi{[&a](const Vec3& p) { return analytic_xi(a, p); }, "analytic"};
      const QuasisymmetryReport q =
          quasisymmetry_check(xi, wf, fam, cfg.psi_levels, kQuasisymmetryLattice, kFdStep, exec);
      qs = {{"applicable", true},
            {"surfaces", q.surfaces},
            {"points_per_surface", q.points_per_surface},
            {"max_div_u", q.max_div_u},
            {"max_u_grad_w2", q.max_u_grad_w2},
            {"surface_const_defect", q.surface_const_defect},
            {"max_tangential", q.max_tangential},
            {"max_tangency", q.max_tangency},
            {"quasisymmetric", q.quasisymmetric(1e-8)}};
      if (harmonic) c.add("quasisymmetry.div_u", q.max_div_u, "<", 1e-7);
      else c.report("quasisymmetry.div_u", q.max_div_u);
      c.report("quasisymmetry.u_grad_w2", q.max_u_grad_w2);
      break;
    }
    case AnalyticKind::non_solenoidal: {
      const double par = max_over(pts, exec, [&](const Vec3& p) {
        const NonSolenoidalSample s = eval_nonsolenoidal(a, p);
        return (s.force - s.lambda * grad_psi(fam, p)).norm();
      });
      const double div_fd = max_over(pts, exec, [&](const Vec3& p) {
        return std::abs(a.div_w(p) - divergence_fd_richardson(wf, p, h));
      });
      const double div_max = max_over(pts, exec, [&](const Vec3& p) { return std::abs(a.div_w(p)); });
      // z = 0 on this level: nu = 0 and nu = pi.
      std::vector<Vec3> mid;
      for (int i = 0; i < 64; ++i)
        for (double nu : {0.0, kTwoPi / 2})
          mid.push_back(to_cartesian(fam, {kTwoPi * i / 64, nu, psi_e}));
      const double div_mid =
          max_over(mid, exec, [&](const Vec3& p) { return std::abs(a.div_w(p)); });
      out["max_force_minus_lambda_grad_psi"] = par;
      out["max_divergence_formula_vs_fd"] = div_fd;
      out["max_divergence"] = div_max;
      out["max_divergence_midplane"] = div_mid;
      c.add("analytic.force_parallel_grad_psi", par, "<", 1e-10);
      c.add("analytic.divergence_formula_vs_fd", div_fd, "<", 1e-10);
      c.add("analytic.divergence_nonzero", div_max, ">", 1e-2);
      c.add("analytic.divergence_midplane", div_mid, "<", 1e-10);
      break;
    }
    case AnalyticKind::equilibrium_nodiv: {
      std::vector<EquilibriumSample> es(pts.size());
      for_each_index(exec, static_cast<long>(pts.size()), [&](long k) {
        es[static_cast<std::size_t>(k)] = eval_equilibrium_nodiv(a, pts[static_cast<std::size_t>(k)], h);
      });
      double res = 0.0, res_fd = 0.0;
      for (const auto& e : es) {
        res = std::max(res, e.residual);
        res_fd = std::max(res_fd, e.residual_fd);
      }
      const double div_max = max_over(pts, exec, [&](const Vec3& p) { return std::abs(a.div_w(p)); });
      out["max_mhd_residual"] = res;
      out["max_mhd_residual_fd"] = res_fd;
      out["max_divergence"] = div_max;
      c.add("analytic.mhd_residual", res, "<", 1e-7);
      c.add("analytic.mhd_residual_fd", res_fd, "<", 1e-7);
      c.add("analytic.divergence_nonzero", div_max, ">", 1e-2);
      break;
    }
  }
  return out;
}

void require_export_level(const RunConfig& cfg, const FieldStack* st) {
  const double psi = cfg.export_level();
  if (st && (psi < st->curl_psi_min() - 1e-12 || psi > st->curl_psi_max() + 1e-12)) {
    std::ostringstream os;
    os << "[output] export_psi = " << psi << " is outside the curl range [" << st->curl_psi_min()
       << ", " << st->curl_psi_max() << "] of the stack";
    throw ConfigError(os.str());
  }
}

}  // namespace

bool stack_available(const RunConfig& cfg) {
  return cfg.field == FieldKind::stack && cfg.bc == BoundaryMode::periodic &&
         cfg.psi_levels.size() >= 3;
}

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ArtifactError*>(&e) ||
      dynamic_cast<const std::invalid_argument*>(&e))
    return kExitConfig;
  return kExitSolver;
}

std::vector<SurfaceSolution> solve_surfaces(const RunConfig& cfg, Exec exec) {
  auto runs = solve_runs(cfg, exec);
  return solutions_of(runs);
}

std::vector<SurfaceSolution> load_solutions(const RunConfig& cfg, Exec exec) {
  auto runs = load_runs(cfg, exec);
  return solutions_of(runs);
}

Table surface_points_table(const RunConfig& cfg, Exec exec) {
  const int n = cfg.export_grid;
  const double psi = cfg.export_level();
  Table t;
  t.columns = {"mu", "nu", "x", "y", "z"};
  t.rows.resize(static_cast<std::size_t>(n) * n);
  for_each_index(exec, static_cast<long>(n) * n, [&](long q) {
    const double mu = kTwoPi * static_cast<double>(q / n) / n;
    const double nu = kTwoPi * static_cast<double>(q % n) / n;
    const Vec3 p = to_cartesian(cfg.family, {mu, nu, psi});
    t.rows[static_cast<std::size_t>(q)] = {mu, nu, p.x(), p.y(), p.z()};
  });
  return t;
}

Table modulus_table(const RunConfig& cfg, const FieldStack* st, Exec exec) {
  if (cfg.field == FieldKind::stack && !st)
    throw std::invalid_argument("modulus_table needs a field stack for stack runs");
  require_export_level(cfg, st);
  const bool wrap = cfg.field == FieldKind::stack && !unit_profile(cfg.analytic.f);
  const int n = cfg.export_grid;
  const double psi = cfg.export_level();
  Table t;
  t.columns = {"mu", "nu", "x", "y", "z", "w_abs", "curl_w_abs"};
  t.rows.resize(static_cast<std::size_t>(n) * n);
  for_each_index(exec, static_cast<long>(n) * n, [&](long q) {
    const double mu = kTwoPi * static_cast<double>(q / n) / n;
    const double nu = kTwoPi * static_cast<double>(q % n) / n;
    Vec3 p, w, curl;
    if (st) {
      StackSample s = sample_stack(*st, {mu, nu, psi}, true);
      if (wrap) apply_profile(s, cfg.analytic.f);
      p = s.point;
      w = s.w;
      curl = s.curl_w;
    } else {
      p = to_cartesian(cfg.family, {mu, nu, psi});
      w = cfg.analytic.w(p);
      curl = cfg.analytic.curl_w(p);
    }
    t.rows[static_cast<std::size_t>(q)] = {mu, nu, p.x(), p.y(), p.z(), w.norm(), curl.norm()};
  });
  return t;
}

RunResult cmd_solve(const RunConfig& cfg, Exec exec) {
  const auto t0 = Clock::now();
  RunResult r;
  r.report = base_report("solve", cfg);
  Checks c;
  ensure_out_dir(cfg);
  r.report["validity"] = validity_json(cfg);

  if (cfg.field == FieldKind::stack) {
    std::vector<SurfaceRun> runs = solve_runs(cfg, exec);
    r.report["timings"]["solve_s"] = seconds_since(t0);
    json surfaces = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const fs::path p = out_path(cfg, surface_file(static_cast<int>(k)));
      write_csv(p.string(), surface_table(runs[k].sol));
      r.files.push_back(p.string());
      surfaces.push_back(surface_json(cfg, static_cast<int>(k), runs[k]));
      surface_checks(cfg, static_cast<int>(k), runs[k], c);
    }
    r.report["surfaces"] = surfaces;
    const fs::path mp = out_path(cfg, kManifest);
    write_json(mp, manifest_json(cfg, runs));
    r.files.push_back(mp.string());

    if (stack_available(cfg)) {
      const auto t1 = Clock::now();
      const FieldStack st = stack_from_solutions(cfg.family, solutions_of(runs), exec);
      json& sj = r.report["stack"];
      sj["levels"] = st.levels.size();
      sj["curl_psi_range"] = {st.curl_psi_min(), st.curl_psi_max()};
      sj["profile"] = cfg.analytic.f.to_string();
      sj["volume_energy"] = volume_energy(st);
      if (cfg.vtk) {
        const fs::path vp = out_path(cfg, "field.vtk");
        write_vtk(vp.string(), "w and curl w, " + cfg.family.describe(), stack_vtk(cfg, st, exec));
        r.files.push_back(vp.string());
      }
      r.report["timings"]["stack_s"] = seconds_since(t1);
    }
  } else if (cfg.vtk) {
    const fs::path vp = out_path(cfg, "field.vtk");
    write_vtk(vp.string(), to_string(cfg.analytic.kind) + ", " + cfg.family.describe(),
              analytic_vtk(cfg, exec));
    r.files.push_back(vp.string());
  }
  r.report["timings"]["total_s"] = seconds_since(t0);
  finish_report(r, c, out_path(cfg, "report.json"));
  return r;
}

RunResult cmd_verify(const RunConfig& cfg, Exec exec) {
  const auto t0 = Clock::now();
  RunResult r;
  r.report = base_report("verify", cfg);
  Checks c;
  ensure_out_dir(cfg);

  if (cfg.field == FieldKind::stack) {
    std::vector<SurfaceRun> runs = load_runs(cfg, exec);
    r.report["timings"]["load_s"] = seconds_since(t0);
    json surfaces = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const int ki = static_cast<int>(k);
      json sj = surface_json(cfg, ki, runs[k]);
      surface_checks(cfg, ki, runs[k], c);
      const std::string p = "surface[" + std::to_string(k) + "].";
      const SurfaceRun& s = runs[k];
      if (s.sol.bc == BoundaryMode::periodic) {
        const auto [lin, rise] = energy_probe(s, 1234u + static_cast<unsigned>(k));
        sj["energy_linear_coefficient"] = lin;
        sj["energy_min_increase"] = rise;
        c.add(p + "energy_linear_coefficient", lin, "<", 1e-7);
        c.add(p + "energy_min_increase", rise, ">=", 0.0);
        const double four_pi2 = kTwoPi * kTwoPi;
        const double target = four_pi2 * s.sol.M;
        c.add(p + "theta_mu_identity", std::abs(theta_mu_integral(s.sol) - target), "<=",
              1e-12 * four_pi2 * std::max(1, std::abs(s.sol.M)));
        c.report(p + "theta_mu_nodal", theta_mu_integral_nodal(s.sol) - target);
        c.add(p + "periodicity_defect_spectral",
              std::max(s.defect_spectral->d_mu, s.defect_spectral->d_nu), "<", 1e-10);
      } else {
        sj["energy_linear_coefficient"] = nullptr;
        sj["energy_min_increase"] = nullptr;
        const double ref = s.reference_fd->d_mu;
        c.report(p + "periodicity_contrast_mu",
                 ref > 0.0 ? s.defect_fd.d_mu / ref : std::numeric_limits<double>::infinity());
      }
      surfaces.push_back(sj);
    }
    r.report["surfaces"] = surfaces;
    if (stack_available(cfg)) {
      const auto t1 = Clock::now();
      const FieldStack st = stack_from_solutions(cfg.family, solutions_of(runs), exec);
      json& sj = r.report["stack"];
      sj["levels"] = st.levels.size();
      sj["curl_psi_range"] = {st.curl_psi_min(), st.curl_psi_max()};
      sj["profile"] = cfg.analytic.f.to_string();
      sj["volume_energy"] = volume_energy(st);
      verify_stack(cfg, st, sj, c, exec);
      r.report["timings"]["stack_s"] = seconds_since(t1);
    }
  } else {
    json qs = quasisymmetry_null();
    r.report["analytic"] = verify_analytic(cfg, c, qs, exec);
    r.report["quasisymmetry"] = qs;
  }

  const auto t2 = Clock::now();
  r.report["symmetry"] = symmetry_json(cfg, exec);
  r.report["validity"] = validity_json(cfg);
  c.add("validity.violation", r.report["validity"]["violation"].get<bool>() ? 1.0 : 0.0, "<",
        0.5);
  r.report["timings"]["symmetry_s"] = seconds_since(t2);
  r.report["timings"]["total_s"] = seconds_since(t0);
  finish_report(r, c, out_path(cfg, "verify.json"));
  return r;
}

RunResult cmd_export(const RunConfig& cfg, Exec exec) {
  const auto t0 = Clock::now();
  RunResult r;
  r.report = base_report("export", cfg);
  Checks c;
  ensure_out_dir(cfg);

  std::optional<FieldStack> st;
  std::vector<SurfaceRun> runs;
  if (cfg.field == FieldKind::stack) {
    runs = load_runs(cfg, exec);
    if (stack_available(cfg)) st.emplace(stack_from_solutions(cfg.family, solutions_of(runs), exec));
    json surfaces = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k)
      surfaces.push_back(surface_json(cfg, static_cast<int>(k), runs[k]));
    r.report["surfaces"] = surfaces;
  }

  const fs::path sp = out_path(cfg, "surface_points.csv");
  write_csv(sp.string(), surface_points_table(cfg, exec));
  r.files.push_back(sp.string());
  if (cfg.field == FieldKind::analytic || st) {
    const fs::path mp = out_path(cfg, "modulus.csv");
    write_csv(mp.string(), modulus_table(cfg, st ? &*st : nullptr, exec));
    r.files.push_back(mp.string());
  }
  r.report["export"] = {{"psi", cfg.export_level()},
                        {"lattice", cfg.export_grid},
                        {"modulus", cfg.field == FieldKind::analytic || st.has_value()}};
  r.report["timings"]["total_s"] = seconds_since(t0);
  finish_report(r, c, out_path(cfg, "export.json"));
  return r;
}

}  // namespace clebsch
