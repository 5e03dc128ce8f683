#include "clebsch/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "clebsch/errors.hpp"
#include "clebsch/spectral.hpp"

namespace clebsch {

namespace {

std::string g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write '" + path + "'");
  return out;
}

// Second-order differences along one direction of the closed interval
// [0, 2pi], node 0 standing for both ends.
double closed_diff(const Field2D& f, int i, int j, bool along_mu) {
  const PeriodicGrid& g = f.grid;
  const int n = along_mu ? g.n_mu : g.n_nu;
  const double h = along_mu ? g.h_mu() : g.h_nu();
  auto at = [&](int k) {
    const int kk = k == n ? 0 : k;
    return along_mu ? f(kk, j) : f(i, kk);
  };
  const int k = along_mu ? i : j;
  if (k == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  return (at(k + 1) - at(k - 1)) / (2.0 * h);
}

}  // namespace

void write_csv(const std::string& path, const Table& t) {
  std::ofstream out = open_out(path);
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << g17(row[c]);
    out << "\n";
  }
  if (!out) throw ArtifactError("write failed for '" + path + "'");
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot read '" + path + "'");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw ArtifactError("'" + path + "' is empty");
  {
    std::istringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ',')) t.columns.push_back(col);
  }
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw ArtifactError(path + ":" + std::to_string(lineno) + ": bad number");
      row.push_back(v);
      if (*end == '\0') break;
      if (*end != ',') throw ArtifactError(path + ":" + std::to_string(lineno) + ": bad separator");
      p = end + 1;
    }
    if (row.size() != t.columns.size())
      throw ArtifactError(path + ":" + std::to_string(lineno) + ": wrong column count");
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::pair<Field2D, Field2D> surface_gradient(const SurfaceSolution& sol) {
  const PeriodicGrid& g = sol.rho.grid;
  if (sol.bc == BoundaryMode::periodic) {
    const Spectrum s = forward(sol.rho);
    return {inverse(d_mu(s)), inverse(d_nu(s))};
  }
  Field2D dm(g), dn(g);
  for (int i = 0; i < g.n_mu; ++i)
    for (int j = 0; j < g.n_nu; ++j) {
      dm(i, j) = closed_diff(sol.rho, i, j, true);
      dn(i, j) = closed_diff(sol.rho, i, j, false);
    }
  return {dm, dn};
}

Table surface_table(const SurfaceSolution& sol) {
  const PeriodicGrid& g = sol.rho.grid;
  const auto [dm, dn] = surface_gradient(sol);
  Table t;
  t.columns = kSurfaceColumns;
  t.rows.reserve(static_cast<std::size_t>(g.size()));
  for (int i = 0; i < g.n_mu; ++i)
    for (int j = 0; j < g.n_nu; ++j)
      t.rows.push_back({g.mu(i), g.nu(j), sol.rho(i, j), dm(i, j), dn(i, j)});
  return t;
}

Field2D rho_from_table(const Table& t, const PeriodicGrid& grid) {
  if (t.columns != kSurfaceColumns) throw ArtifactError("surface table has unexpected columns");
  if (static_cast<long>(t.rows.size()) != grid.size())
    throw ArtifactError("surface table has " + std::to_string(t.rows.size()) +
                        " rows, grid needs " + std::to_string(grid.size()));
  Field2D rho(grid);
  for (int i = 0; i < grid.n_mu; ++i)
    for (int j = 0; j < grid.n_nu; ++j) {
      const auto& row = t.rows[static_cast<std::size_t>(grid.index(i, j))];
      if (row[0] != grid.mu(i) || row[1] != grid.nu(j))
        throw ArtifactError("surface table nodes do not match the configured grid");
      rho(i, j) = row[2];
    }
  return rho;
}

void write_vtk(const std::string& path, const std::string& title, const VtkGrid& g) {
  const std::size_t n = static_cast<std::size_t>(g.nx) * g.ny * g.nz;
  if (g.points.size() != n) throw std::invalid_argument("vtk: point count does not match dims");
  std::ofstream out = open_out(path);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET STRUCTURED_GRID\n"
      << "DIMENSIONS " << g.nx << " " << g.ny << " " << g.nz << "\nPOINTS " << n << " double\n";
  for (const Vec3& p : g.points) out << g17(p.x()) << " " << g17(p.y()) << " " << g17(p.z()) << "\n";
  out << "POINT_DATA " << n << "\n";
  for (const auto& [name, v] : g.scalars) {
    if (v.size() != n) throw std::invalid_argument("vtk: scalar '" + name + "' has wrong length");
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double x : v) out << g17(x) << "\n";
  }
  for (const auto& [name, v] : g.vectors) {
    if (v.size() != n) throw std::invalid_argument("vtk: vector '" + name + "' has wrong length");
    out << "VECTORS " << name << " double\n";
    for (const Vec3& p : v) out << g17(p.x()) << " " << g17(p.y()) << " " << g17(p.z()) << "\n";
  }
  if (!out) throw ArtifactError("write failed for '" + path + "'");
}

}  // namespace clebsch
