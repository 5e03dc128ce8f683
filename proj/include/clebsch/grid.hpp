#pragma once

#include <vector>

namespace clebsch {

// Uniform sampling of the doubly periodic cell (0, 2pi)^2. Node (i, j) sits at
// (mu, nu) = (i h_mu, j h_nu); storage is row-major with nu fastest.
struct PeriodicGrid {
  int n_mu = 0;
  int n_nu = 0;

  PeriodicGrid() = default;
  // Throws std::invalid_argument unless both sizes are even and >= 8.
  PeriodicGrid(int n_mu, int n_nu);
  static PeriodicGrid square(int n) { return PeriodicGrid(n, n); }

  double h_mu() const;
  double h_nu() const;
  double mu(int i) const { return i * h_mu(); }
  double nu(int j) const { return j * h_nu(); }
  long size() const { return static_cast<long>(n_mu) * n_nu; }
  long index(int i, int j) const { return static_cast<long>(i) * n_nu + j; }
  // Periodic wrap of a node index.
  long wrapped(int i, int j) const;

  // 3/2-rule grid used for dealiased products (rounded up to even sizes).
  PeriodicGrid dealiased() const;

  bool operator==(const PeriodicGrid&) const = default;
};

struct Field2D {
  PeriodicGrid grid;
  std::vector<double> values;
  bool zero_mean = false;

  Field2D() = default;
  explicit Field2D(const PeriodicGrid& g, double fill = 0.0, bool zero_mean = false);

  double& operator()(int i, int j) { return values[static_cast<std::size_t>(grid.index(i, j))]; }
  double operator()(int i, int j) const {
    return values[static_cast<std::size_t>(grid.index(i, j))];
  }

  double mean() const;
  double max_abs() const;
  // Subtracts the mean and sets the zero_mean flag.
  void project_zero_mean();
};

// max |a - b| over nodes; grids must match.
double max_abs_diff(const Field2D& a, const Field2D& b);

}  // namespace clebsch
