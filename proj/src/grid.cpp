#include "clebsch/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "clebsch/geometry.hpp"

namespace clebsch {

PeriodicGrid::PeriodicGrid(int nm, int nn) : n_mu(nm), n_nu(nn) {
  if (nm < 8 || nn < 8 || nm % 2 || nn % 2)
    throw std::invalid_argument("grid sizes must be even and at least 8, got " +
                                std::to_string(nm) + "x" + std::to_string(nn));
}

double PeriodicGrid::h_mu() const { return kTwoPi / n_mu; }
double PeriodicGrid::h_nu() const { return kTwoPi / n_nu; }

long PeriodicGrid::wrapped(int i, int j) const {
  i %= n_mu;
  j %= n_nu;
  if (i < 0) i += n_mu;
  if (j < 0) j += n_nu;
  return index(i, j);
}

PeriodicGrid PeriodicGrid::dealiased() const {
  auto up = [](int n) { return (3 * n / 2 + 1) / 2 * 2; };
  return {up(n_mu), up(n_nu)};
}

Field2D::Field2D(const PeriodicGrid& g, double fill, bool zm)
    : grid(g), values(static_cast<std::size_t>(g.size()), fill), zero_mean(zm) {}

double Field2D::mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double Field2D::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

void Field2D::project_zero_mean() {
  const double m = mean();
  for (double& v : values) v -= m;
  zero_mean = true;
}

double max_abs_diff(const Field2D& a, const Field2D& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("max_abs_diff: grid mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k)
    m = std::max(m, std::abs(a.values[k] - b.values[k]));
  return m;
}

}  // namespace clebsch
