#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "clebsch/errors.hpp"
#include "clebsch/pde.hpp"
#include "oracles.hpp"

using namespace clebsch;

namespace {

const SurfaceFamily kFig3b = surface::DisplacedEllipse{1.0, 1.6, 0.3, 2};
const SurfaceFamily kFig3a = surface::DisplacedEllipse{1.0, 1.6, 0.03, 1};

double inner(const Field2D& a, const Field2D& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) s += a.values[k] * b.values[k];
  return s;
}

// Smooth zero-mean field with a few random low modes.
Field2D random_smooth(const PeriodicGrid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Field2D f(g);
  for (int kx = 0; kx <= 3; ++kx)
    for (int ky = -3; ky <= 3; ++ky) {
      double a = n01(rng), b = n01(rng);
      for (int i = 0; i < g.n_mu; ++i)
        for (int j = 0; j < g.n_nu; ++j) {
          double ph = kx * g.mu(i) + ky * g.nu(j);
          f(i, j) += a * std::cos(ph) + b * std::sin(ph);
        }
    }
  f.project_zero_mean();
  return f;
}

Field2D transpose(const Field2D& f) {
  Field2D t(PeriodicGrid(f.grid.n_nu, f.grid.n_mu));
  for (int i = 0; i < f.grid.n_mu; ++i)
    for (int j = 0; j < f.grid.n_nu; ++j) t(j, i) = f(i, j);
  return t;
}

std::vector<double> transpose(const std::vector<double>& v, const PeriodicGrid& g) {
  std::vector<double> t(v.size());
  for (int i = 0; i < g.n_mu; ++i)
    for (int j = 0; j < g.n_nu; ++j) t[static_cast<std::size_t>(j) * g.n_mu + i] = v[g.index(i, j)];
  return t;
}

// Coefficients of the same surface with the roles of mu and nu exchanged.
EllipticCoefficients swapped(const EllipticCoefficients& c) {
  EllipticCoefficients s = c;
  s.grid = PeriodicGrid(c.grid.n_nu, c.grid.n_mu);
  s.fine = PeriodicGrid(c.fine.n_nu, c.fine.n_mu);
  s.a_mm = transpose(c.a_nn);
  s.a_nn = transpose(c.a_mm);
  s.a_mn = transpose(c.a_mn);
  s.jacobian = transpose(c.jacobian);
  s.fine_mm = transpose(c.fine_nn, c.fine);
  s.fine_nn = transpose(c.fine_mm, c.fine);
  s.fine_mn = transpose(c.fine_mn, c.fine);
  std::swap(s.mean_mm, s.mean_nn);
  return s;
}

}  // namespace

TEST(Pde, CoefficientsMatchIndependentParametrization) {
  oracle::DisplacedEllipse os{1.0, 1.6, 0.3, 2};
  auto c = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(16));
  double diff = 0.0;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) {
      auto o = oracle::coefficients(os, c.grid.mu(i), c.grid.nu(j), 0.08);
      diff = std::max({diff, std::abs(o.mm - c.a_mm(i, j)), std::abs(o.mn - c.a_mn(i, j)),
                       std::abs(o.nn - c.a_nn(i, j)), std::abs(o.jac - c.jacobian(i, j))});
    }
  EXPECT_LT(diff, 1e-9);
  EXPECT_GT(c.min_lambda, 0.0);
  EXPECT_GT(c.min_det, 0.0);
}

TEST(Pde, AxisymSourceVanishes) {
  auto c = assemble_coefficients(surface::Axisym{1.0}, 0.08, PeriodicGrid::square(32));
  Field2D S = assemble_source(c, 1, 0);
  EXPECT_LT(S.max_abs(), 1e-12);
  auto sol = solve_periodic(c, S, 1, 0);
  EXPECT_LT(sol.rho.max_abs(), 1e-10);
  EXPECT_LE(sol.residual_linf, source_floor(c));
}

TEST(Pde, OperatorSymmetricNegativeDefinite) {
  std::mt19937_64 rng(7);
  auto c = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(24));
  for (int t = 0; t < 4; ++t) {
    Field2D u = random_smooth(c.grid, rng), v = random_smooth(c.grid, rng);
    double uLv = inner(u, apply_operator(c, v)), vLu = inner(v, apply_operator(c, u));
    EXPECT_NEAR(uLv, vLu, 1e-11 * std::abs(uLv));
    EXPECT_LT(inner(u, apply_operator(c, u)), 0.0);
  }
  Field2D one(c.grid, 1.0);
  EXPECT_LT(apply_operator(c, one).max_abs(), 1e-14);
}

TEST(Pde, SourceIsLinearInHarmonicNumbers) {
  auto c = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(24));
  Field2D s10 = assemble_source(c, 1, 0), s01 = assemble_source(c, 0, 1);
  Field2D s23 = assemble_source(c, 2, 3);
  double d = 0.0;
  for (std::size_t k = 0; k < s23.values.size(); ++k)
    d = std::max(d, std::abs(s23.values[k] - 2 * s10.values[k] - 3 * s01.values[k]));
  EXPECT_LT(d, 1e-12 * s23.max_abs());
}

TEST(Pde, MuNuExchangeMapsOneZeroToZeroOne) {
  auto c = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(24));
  auto cs = swapped(c);
  Field2D s01 = assemble_source(c, 0, 1);
  Field2D s10_swapped = transpose(assemble_source(cs, 1, 0));
  EXPECT_LT(max_abs_diff(s01, s10_swapped), 1e-13 * s01.max_abs());
  auto a = solve_periodic(c, s01, 0, 1, {1e-11, 5000});
  auto b = solve_periodic(cs, assemble_source(cs, 1, 0), 1, 0, {1e-11, 5000});
  EXPECT_LT(max_abs_diff(a.rho, transpose(b.rho)), 1e-10);
}

TEST(Pde, SolveResidualAndGauge) {
  auto c = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(32));
  Field2D S = assemble_source(c, 1, 0);
  auto sol = solve_periodic(c, S, 1, 0);
  EXPECT_LE(sol.residual_linf, 1e-8 * sol.source_linf);
  EXPECT_NEAR(sol.rho.mean(), 0.0, 1e-14);
  EXPECT_GT(sol.rho.max_abs(), 1e-3);
  Field2D r = apply_operator(c, sol.rho);
  EXPECT_NEAR(max_abs_diff(r, S), sol.residual_linf, 1e-14);
  EXPECT_EQ(sol.residual_history.size(), static_cast<std::size_t>(sol.iterations));
  // Adding a constant leaves the residual unchanged: rho is fixed only modulo constants.
  Field2D shifted = sol.rho;
  for (double& v : shifted.values) v += 0.25;
  EXPECT_LT(max_abs_diff(apply_operator(c, shifted), r), 1e-12 * sol.source_linf);
}

TEST(Pde, AgreesWithDenseGalerkinOracle) {
  oracle::DisplacedEllipse os{1.0, 1.6, 0.3, 2};
  auto c = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(24));
  auto sol = solve_periodic(c, assemble_source(c, 1, 0), 1, 0, {1e-11, 5000});
  auto dense = oracle::dense_galerkin_solve(os, 0.08, 24, 1, 0);
  double d = 0.0;
  for (std::size_t k = 0; k < dense.size(); ++k) d = std::max(d, std::abs(dense[k] - sol.rho.values[k]));
  EXPECT_LT(d, 1e-9);
}

TEST(Pde, FiniteDifferenceOracleConvergesToSpectral) {
  oracle::DisplacedEllipse os{1.0, 1.6, 0.3, 2};
  auto c = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(64));
  auto ref = solve_periodic(c, assemble_source(c, 1, 0), 1, 0, {1e-11, 5000});
  std::vector<double> err;
  for (int n : {16, 32}) {
    auto fd = oracle::fd_periodic_solve(os, 0.08, n, 1, 0);
    double e = 0.0;
    const int stride = 64 / n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        e = std::max(e, std::abs(fd[static_cast<std::size_t>(i) * n + j] - ref.rho(i * stride, j * stride)));
    err.push_back(e);
  }
  EXPECT_GT(err[0] / err[1], 3.0);
  EXPECT_LT(err[1], 1e-3);
}

TEST(Pde, FailuresAreReported) {
  auto c = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(16));
  Field2D S = assemble_source(c, 1, 0);
  try {
    solve_periodic(c, S, 1, 0, {1e-14, 2});
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.residual_history.size(), 2u);
  }
  EXPECT_THROW(assemble_source(c, 1, 0, -1.0), CompatibilityError);
  EXPECT_THROW(solve_periodic(c, Field2D(PeriodicGrid::square(8)), 1, 0), std::invalid_argument);
  EXPECT_THROW(assemble_coefficients(surface::PhasePerturbed{1.0, 0.1, 4}, 0.03, PeriodicGrid::square(16)),
               InversionError);
}

TEST(Pde, DirichletSolveBreaksPeriodicity) {
  auto c = assemble_coefficients(kFig3a, 0.16, PeriodicGrid::square(32));
  Field2D S = assemble_source(c, 1, 0);
  auto dir = solve_dirichlet(c, S, 1, 0);
  EXPECT_EQ(dir.bc, BoundaryMode::dirichlet);
  for (int k = 0; k < 32; ++k) {
    EXPECT_EQ(dir.rho(0, k), 0.0);
    EXPECT_EQ(dir.rho(k, 0), 0.0);
  }
  EXPECT_LE(dirichlet_residual(c, dir.rho, S), 1e-8 * S.max_abs());
  auto per = solve_periodic(c, S, 1, 0);
  double d_dir = periodicity_defect(boundary_derivatives_fd(dir.rho)).d_mu;
  double d_per = periodicity_defect(boundary_derivatives_fd(per.rho)).d_mu;
  EXPECT_GT(d_dir, 10.0 * d_per);
  EXPECT_LT(periodicity_defect(boundary_derivatives_spectral(per.rho)).d_mu, 1e-12);
}

TEST(Pde, BoundaryDerivativesOfKnownField) {
  PeriodicGrid g = PeriodicGrid::square(64);
  Field2D f(g);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) f(i, j) = std::sin(g.mu(i)) * std::cos(2 * g.nu(j));
  auto s = boundary_derivatives_spectral(f);
  auto d = boundary_derivatives_fd(f);
  for (int j = 0; j < 64; ++j) {
    EXPECT_NEAR(s.dmu_left[j], std::cos(2 * g.nu(j)), 1e-12);
    EXPECT_NEAR(s.dmu_right[j], std::cos(2 * g.nu(j)), 1e-12);
    EXPECT_NEAR(d.dmu_left[j], std::cos(2 * g.nu(j)), 2e-2);
  }
  // The one-sided stencils agree at second order; what is left is h^3/2 times
  // the fourth derivative: zero for sin(mu), 8 h^3 for cos(2 nu).
  auto pd = periodicity_defect(d);
  const double h = g.h_nu();
  EXPECT_LT(pd.d_mu, 1e-12);
  EXPECT_NEAR(pd.d_nu, 8 * h * h * h, 0.05 * 8 * h * h * h);
}

TEST(Pde, EnergyGradientAndStationarity) {
  std::mt19937_64 rng(11);
  auto c = assemble_coefficients(kFig3b, 0.08, PeriodicGrid::square(24));
  Field2D S = assemble_source(c, 1, 0);
  auto sol = solve_periodic(c, S, 1, 0, {1e-12, 5000});
  const double e0 = surface_energy(c, sol.rho, 1, 0);
  EXPECT_NEAR(e0, surface_energy_direct(c, sol.rho, 1, 0), 1e-12 * std::abs(e0));
  const double h2 = c.grid.h_mu() * c.grid.h_nu();

  // Away from the solution the first variation is h^2 (S - L rho) . delta.
  Field2D u = random_smooth(c.grid, rng);
  for (double& v : u.values) v *= 0.01;
  Field2D delta = random_smooth(c.grid, rng);
  Field2D Lu = apply_operator(c, u);
  double predicted = 0.0;
  for (std::size_t k = 0; k < u.values.size(); ++k) predicted += h2 * (S.values[k] - Lu.values[k]) * delta.values[k];
  const double t = 1e-4;
  Field2D up = u, um = u;
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    up.values[k] += t * delta.values[k];
    um.values[k] -= t * delta.values[k];
  }
  double numeric = (surface_energy(c, up, 1, 0) - surface_energy(c, um, 1, 0)) / (2 * t);
  EXPECT_NEAR(numeric, predicted, 1e-7 * std::abs(predicted));

  // At the solution: no linear term, and every perturbation raises the energy.
  for (int k = 0; k < 5; ++k) {
    Field2D d = random_smooth(c.grid, rng);
    Field2D p = sol.rho, m = sol.rho;
    for (std::size_t q = 0; q < d.values.size(); ++q) {
      p.values[q] += 1e-2 * d.values[q];
      m.values[q] -= 1e-2 * d.values[q];
    }
    double ep = surface_energy(c, p, 1, 0), em = surface_energy(c, m, 1, 0);
    EXPECT_LT(std::abs(ep - em) / 2e-2, 1e-7);
    EXPECT_GT(ep, e0);
    EXPECT_GT(em, e0);
  }
}
