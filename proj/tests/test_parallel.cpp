#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "clebsch/diagnostics.hpp"
#include "clebsch/field.hpp"
#include "clebsch/run.hpp"

// The OpenMP kernels must reproduce their serial reference paths bit for bit.

using namespace clebsch;

namespace {

const SurfaceFamily kFig3b = surface::DisplacedEllipse{1.0, 1.6, 0.3, 2};

void expect_same(const Vec3& a, const Vec3& b) {
  EXPECT_EQ(a.x(), b.x());
  EXPECT_EQ(a.y(), b.y());
  EXPECT_EQ(a.z(), b.z());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Parallel, ThreadsAvailable) { RecordProperty("threads", max_threads()); }

TEST(Parallel, CoefficientAssembly) {
  auto a = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(32), Exec::serial);
  auto b = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(32), Exec::parallel);
  EXPECT_EQ(a.a_mm.values, b.a_mm.values);
  EXPECT_EQ(a.a_mn.values, b.a_mn.values);
  EXPECT_EQ(a.fine_nn, b.fine_nn);
  EXPECT_EQ(a.min_lambda, b.min_lambda);
}

TEST(Parallel, StackAndSampling) {
  const std::vector<double> levels = {0.07, 0.075, 0.08, 0.085, 0.09};
  FieldStack s = build_stack(kFig3b, levels, PeriodicGrid::square(16), {}, Exec::serial);
  FieldStack p = build_stack(kFig3b, levels, PeriodicGrid::square(16), {}, Exec::parallel);
  for (std::size_t k = 0; k < levels.size(); ++k)
    EXPECT_EQ(s.levels[k].solution.rho.values, p.levels[k].solution.rho.values);

  auto pts_s = sample_interior(kFig3b, 0.075, 0.085, 300, Exec::serial);
  auto pts_p = sample_interior(kFig3b, 0.075, 0.085, 300, Exec::parallel);
  ASSERT_EQ(pts_s.size(), pts_p.size());
  for (std::size_t k = 0; k < pts_s.size(); ++k) expect_same(pts_s[k], pts_p[k]);

  auto a = sample_stack_points(s, pts_s, true, Exec::serial);
  auto b = sample_stack_points(s, pts_s, true, Exec::parallel);
  for (std::size_t k = 0; k < a.size(); ++k) {
    expect_same(a[k].w, b[k].w);
    expect_same(a[k].curl_w, b[k].curl_w);
  }
  EXPECT_EQ(volume_energy_qmc(s, 4096, Exec::serial), volume_energy_qmc(s, 4096, Exec::parallel));
}

TEST(Parallel, Diagnostics) {
  SurfaceFamily fam = surface::ExpSheared{1.0, 0.18};
  auto pts = sample_interior(fam, 0.06, 0.1, 200);
  GradientField g = [&](const Vec3& p) { return grad_psi(fam, p); };
  auto a = isometry_nullspace(g, pts, kNullspaceTau, Exec::serial);
  auto b = isometry_nullspace(g, pts, kNullspaceTau, Exec::parallel);
  EXPECT_EQ(a.singular_values, b.singular_values);

  AnalyticSolution s;
  s.f = ScalarProfile::parse("exp:1,0.5");
  CartesianVectorField xi{[&](const Vec3& p) { return analytic_xi(s, p); }, "analytic"};
  auto qa = quasisymmetry_check(xi, s.w_field(), fam, {0.06, 0.08}, 8, 1e-4, Exec::serial);
  auto qb = quasisymmetry_check(xi, s.w_field(), fam, {0.06, 0.08}, 8, 1e-4, Exec::parallel);
  EXPECT_EQ(qa.max_u_grad_w2, qb.max_u_grad_w2);
  EXPECT_EQ(qa.surface_const_defect, qb.surface_const_defect);
}

TEST(Parallel, RunArtifacts) {
  namespace fs = std::filesystem;
  RunConfig cfg = parse_config(fixture("fig1").ini);
  cfg.grid = PeriodicGrid::square(16);
  const fs::path root = fs::temp_directory_path() / "clebsch_test_parallel";
  fs::remove_all(root);
  cfg.out_dir = (root / "serial").string();
  cmd_solve(cfg, Exec::serial);
  cmd_export(cfg, Exec::serial);
  cfg.out_dir = (root / "parallel").string();
  cmd_solve(cfg, Exec::parallel);
  cmd_export(cfg, Exec::parallel);
  for (const char* f : {"field.vtk", "modulus.csv", "surface_points.csv"})
    EXPECT_EQ(slurp(root / "serial" / f), slurp(root / "parallel" / f)) << f;
}
