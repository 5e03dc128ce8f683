#pragma once

// Run orchestration behind the command-line tool: solve a configuration,
// verify it, export plot tables. Each command returns the JSON report it also
// writes to the output directory.
//
// Artifacts of `solve` in <out>:
//   surface_<k>.csv   columns mu,nu,rho,rho_mu,rho_nu, one row per node
//   surfaces.json     manifest (family, grid, M, N, levels, file names)
//   field.vtk         w and curl w on the interior levels (stack runs) or on
//                     every level (analytic runs)
//   report.json
// `verify` re-imports the surface tables and writes verify.json; `export`
// writes surface_points.csv, modulus.csv and export.json.

#include <exception>
#include <string>
#include <vector>

#include "json.hpp"

#include "clebsch/config.hpp"
#include "clebsch/exec.hpp"
#include "clebsch/field.hpp"
#include "clebsch/io.hpp"
#include "clebsch/pde.hpp"

namespace clebsch {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitConfig = 2;  // bad configuration or missing artifacts
inline constexpr int kExitSolver = 3;

inline constexpr const char* kReportSchema = "clebsch-report/1";

struct RunResult {
  int exit_code = kExitPass;
  nlohmann::json report;
  std::vector<std::string> files;
};

RunResult cmd_solve(const RunConfig& cfg, Exec exec = Exec::parallel);
RunResult cmd_verify(const RunConfig& cfg, Exec exec = Exec::parallel);
RunResult cmd_export(const RunConfig& cfg, Exec exec = Exec::parallel);

// Exit code for an exception escaping one of the commands.
int exit_code_for(const std::exception& e) noexcept;

// Solves every configured level (concurrently on the parallel path). Failures
// are rethrown as SurfaceSolveError naming the level.
std::vector<SurfaceSolution> solve_surfaces(const RunConfig& cfg, Exec exec = Exec::parallel);

// Reads surfaces.json and the surface tables written by cmd_solve. Throws
// ArtifactError if they are missing or were written for a different
// family, grid, (M, N), boundary mode or level list. Residuals are recomputed.
std::vector<SurfaceSolution> load_solutions(const RunConfig& cfg, Exec exec = Exec::parallel);

// Periodic runs with at least three levels carry a field stack.
bool stack_available(const RunConfig& cfg);

// |w| and |curl w| over the export lattice, columns
// mu,nu,x,y,z,w_abs,curl_w_abs (stack runs need the level inside the curl range).
Table modulus_table(const RunConfig& cfg, const FieldStack* stack, Exec exec = Exec::parallel);
// Columns mu,nu,x,y,z on the export level.
Table surface_points_table(const RunConfig& cfg, Exec exec = Exec::parallel);

}  // namespace clebsch
