#pragma once

// Plain-text artifacts: CSV tables (every value printed with %.17g, so a
// re-read reproduces the doubles bit for bit) and legacy-VTK structured grids.

#include <string>
#include <utility>
#include <vector>

#include "clebsch/geometry.hpp"
#include "clebsch/grid.hpp"
#include "clebsch/pde.hpp"

namespace clebsch {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// Throws ArtifactError if the file cannot be written or read, or on a
// malformed row.
void write_csv(const std::string& path, const Table& t);
Table read_csv(const std::string& path);

// Surface table: one row per node in storage order (mu outer, nu inner),
// columns mu, nu, rho, rho_mu, rho_nu.
inline const std::vector<std::string> kSurfaceColumns = {"mu", "nu", "rho", "rho_mu", "rho_nu"};

// Periodic solutions get spectral derivatives; Dirichlet ones second-order
// differences on the closed square (one-sided at mu = 0 and nu = 0).
std::pair<Field2D, Field2D> surface_gradient(const SurfaceSolution& sol);
Table surface_table(const SurfaceSolution& sol);
// rho from a surface table. The (mu, nu) columns must reproduce the grid nodes exactly.
Field2D rho_from_table(const Table& t, const PeriodicGrid& grid);

struct VtkGrid {
  int nx = 0, ny = 0, nz = 0;  // x fastest
  std::vector<Vec3> points;
  std::vector<std::pair<std::string, std::vector<double>>> scalars;
  std::vector<std::pair<std::string, std::vector<Vec3>>> vectors;
};

// Legacy ASCII STRUCTURED_GRID with POINT_DATA.
void write_vtk(const std::string& path, const std::string& title, const VtkGrid& g);

}  // namespace clebsch
