#pragma once

// Run configuration: a flat INI file with one section per module.
//
//   [surface]  family, r0, elongation, eps, m
//   [levels]   psi = a, b, c   or   psi_min, psi_max, count;   inner_cutoff
//   [solve]    grid (or grid_mu, grid_nu), M, N, tol, max_iter, bc = periodic|dirichlet
//   [field]    kind = stack|non_solenoidal|harmonic_product|conjugate_family|equilibrium_nodiv,
//              f, g, C, test_points, fd_step
//   [output]   dir, export_psi, export_grid, vtk
//
// Unknown keys are rejected so that typos surface as configuration errors.

#include <optional>
#include <string>
#include <vector>

#include "clebsch/analytic.hpp"
#include "clebsch/geometry.hpp"
#include "clebsch/pde.hpp"
#include "clebsch/profile.hpp"

namespace clebsch {

enum class FieldKind { stack, analytic };

struct RunConfig {
  std::string name = "run";
  SurfaceFamily family = surface::Axisym{1.0};
  std::vector<double> psi_levels;
  double inner_cutoff = 1e-3;  // levels at or below this are rejected
  PeriodicGrid grid = PeriodicGrid::square(32);
  int M = 1, N = 0;
  SolveOptions solve;
  BoundaryMode bc = BoundaryMode::periodic;

  FieldKind field = FieldKind::stack;
  AnalyticSolution analytic;  // used when field == analytic
  int test_points = 1000;
  double fd_step = 1e-3;

  std::string out_dir = "out";
  std::optional<double> export_psi;  // defaults to the middle level
  int export_grid = 64;
  bool vtk = true;

  double export_level() const;
};

struct Overrides {
  std::optional<std::string> out_dir;
  std::optional<int> grid;
  std::optional<int> levels;
  std::optional<double> tol;
  std::optional<BoundaryMode> bc;
};

// Throws ConfigError with the offending key.
RunConfig parse_config(const std::string& ini_text, const std::string& origin = "config");
RunConfig load_config(const std::string& path);
void apply_overrides(RunConfig& cfg, const Overrides& o);

// Canonical INI text of the configuration (what report.json and --dump print).
std::string to_ini(const RunConfig& cfg);

struct Fixture {
  std::string name;
  std::string description;
  std::string ini;
};

const std::vector<Fixture>& fixtures();
// Throws ConfigError for unknown names.
const Fixture& fixture(const std::string& name);

BoundaryMode boundary_mode_from_string(const std::string& s);
std::string to_string(BoundaryMode b);

}  // namespace clebsch
