#include "clebsch/pde.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "clebsch/errors.hpp"

namespace clebsch {

namespace {

struct NodeCoefficients {
  double mm = 0.0, mn = 0.0, nn = 0.0, jac = 0.0, lambda = 0.0, det = 0.0;
  double mp = 0.0, np = 0.0;
};

NodeCoefficients node_coefficients(const SurfaceFamily& family, double mu, double nu, double psi) {
  const MetricSample m = contravariant_metric(family, {mu, nu, psi});
  const double g_mm = m.lower(0, 0), g_mn = m.lower(0, 1), g_nn = m.lower(1, 1);
  NodeCoefficients c;
  c.jac = m.jacobian;
  c.mm = m.jacobian * g_nn;
  c.mn = m.jacobian * g_mn;
  c.nn = m.jacobian * g_mm;
  c.mp = m.jacobian * m.lower(0, 2);
  c.np = m.jacobian * m.lower(1, 2);
  const double tr = g_mm + g_nn;
  c.det = g_mm * g_nn - g_mn * g_mn;
  c.lambda = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4.0 * c.det)));
  return c;
}

void check_node(const NodeCoefficients& c, const PeriodicGrid& g, int i, int j, double psi,
                const char* which) {
  if (c.jac > kJacobianMin && c.lambda > 0.0 && c.det > 0.0) return;
  std::ostringstream os;
  os << "ellipticity violated on the " << which << " grid at node (" << i << ", " << j
     << "), (mu, nu, Psi) = (" << g.mu(i) << ", " << g.nu(j) << ", " << psi << "): J = " << c.jac
     << ", lambda_min = " << c.lambda << ", det A = " << c.det;
  throw AssemblyError(os.str(), i, j, g.mu(i), g.nu(j));
}

std::vector<NodeCoefficients> sample_nodes(const SurfaceFamily& family, double psi,
                                           const PeriodicGrid& g, Exec exec, const char* which) {
  std::vector<NodeCoefficients> out(static_cast<std::size_t>(g.size()));
  for_each_index(exec, g.size(), [&](long k) {
    const int i = static_cast<int>(k / g.n_nu), j = static_cast<int>(k % g.n_nu);
    auto c = node_coefficients(family, g.mu(i), g.nu(j), psi);
    check_node(c, g, i, j, psi, which);
    out[static_cast<std::size_t>(k)] = c;
  });
  return out;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Truncated flux divergence d_mu F_mu + d_nu F_nu, with F given at fine nodes.
Spectrum flux_divergence(const EllipticCoefficients& c, const std::vector<double>& f_mu,
                         const std::vector<double>& f_nu) {
  Spectrum div = d_mu(resample(forward(c.fine, f_mu.data()), c.grid));
  div += d_nu(resample(forward(c.fine, f_nu.data()), c.grid));
  return div;
}

// Gradient of a base-grid spectrum, sampled on the fine grid.
void fine_gradient(const EllipticCoefficients& c, const Spectrum& s, std::vector<double>& g_mu,
                   std::vector<double>& g_nu) {
  g_mu.resize(static_cast<std::size_t>(c.fine.size()));
  g_nu.resize(g_mu.size());
  inverse(resample(d_mu(s), c.fine), g_mu.data());
  inverse(resample(d_nu(s), c.fine), g_nu.data());
}

Spectrum apply_spectral(const EllipticCoefficients& c, const Spectrum& rho) {
  std::vector<double> gm, gn;
  fine_gradient(c, rho, gm, gn);
  std::vector<double> fm(gm.size()), fn(gm.size());
  for (std::size_t k = 0; k < gm.size(); ++k) {
    fm[k] = c.fine_mm[k] * gm[k] - c.fine_mn[k] * gn[k];
    fn[k] = c.fine_nn[k] * gn[k] - c.fine_mn[k] * gm[k];
  }
  return flux_divergence(c, fm, fn);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double linf(const std::vector<double>& a) { return max_abs(a); }

void remove_mean(std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  for (double& x : v) x -= m;
}

}  // namespace

double source_floor(const EllipticCoefficients& c) {
  const double scale = std::max({max_abs(c.fine_mm), max_abs(c.fine_mn), max_abs(c.fine_nn)});
  return 1e-13 * std::max(c.grid.n_mu, c.grid.n_nu) * scale;
}

EllipticCoefficients assemble_coefficients(const SurfaceFamily& family, double psi_level,
                                           const PeriodicGrid& grid, Exec exec) {
  EllipticCoefficients c;
  c.psi_level = psi_level;
  c.grid = grid;
  c.fine = grid.dealiased();
  const auto base = sample_nodes(family, psi_level, grid, exec, "base");
  const auto fine = sample_nodes(family, psi_level, c.fine, exec, "dealiasing");

  c.a_mm = Field2D(grid);
  c.a_mn = Field2D(grid);
  c.a_nn = Field2D(grid);
  c.jacobian = Field2D(grid);
  c.jg_mu_psi = Field2D(grid);
  c.jg_nu_psi = Field2D(grid);
  c.min_lambda = c.min_det = c.min_jacobian = std::numeric_limits<double>::infinity();
  c.max_jacobian = -std::numeric_limits<double>::infinity();
  auto certify = [&](const NodeCoefficients& n) {
    c.min_lambda = std::min(c.min_lambda, n.lambda);
    c.min_det = std::min(c.min_det, n.det);
    c.min_jacobian = std::min(c.min_jacobian, n.jac);
    c.max_jacobian = std::max(c.max_jacobian, n.jac);
  };
  for (std::size_t k = 0; k < base.size(); ++k) {
    c.a_mm.values[k] = base[k].mm;
    c.a_mn.values[k] = base[k].mn;
    c.a_nn.values[k] = base[k].nn;
    c.jacobian.values[k] = base[k].jac;
    c.jg_mu_psi.values[k] = base[k].mp;
    c.jg_nu_psi.values[k] = base[k].np;
    certify(base[k]);
  }
  c.fine_mm.resize(fine.size());
  c.fine_mn.resize(fine.size());
  c.fine_nn.resize(fine.size());
  for (std::size_t k = 0; k < fine.size(); ++k) {
    c.fine_mm[k] = fine[k].mm;
    c.fine_mn[k] = fine[k].mn;
    c.fine_nn[k] = fine[k].nn;
    certify(fine[k]);
  }
  c.mean_mm = c.a_mm.mean();
  c.mean_mn = c.a_mn.mean();
  c.mean_nn = c.a_nn.mean();
  return c;
}

Field2D assemble_source(const EllipticCoefficients& c, int M, int N, double compat_tol) {
  std::vector<double> fm(c.fine_mm.size()), fn(fm.size());
  for (std::size_t k = 0; k < fm.size(); ++k) {
    fm[k] = c.fine_mm[k] * M - c.fine_mn[k] * N;
    fn[k] = c.fine_nn[k] * N - c.fine_mn[k] * M;
  }
  Spectrum s = flux_divergence(c, fm, fn);
  s *= -1.0;
  Field2D out = inverse(s);
  const double mean = out.mean();
  if (std::abs(mean) > compat_tol) {
    std::ostringstream os;
    os << "source has nonzero mean " << mean << " on Psi = " << c.psi_level;
    throw CompatibilityError(os.str(), mean);
  }
  out.zero_mean = true;
  return out;
}

Field2D apply_operator(const EllipticCoefficients& c, const Field2D& rho) {
  if (!(rho.grid == c.grid)) throw std::invalid_argument("apply_operator: grid mismatch");
  return inverse(apply_spectral(c, forward(rho)));
}

SurfaceSolution solve_periodic(const EllipticCoefficients& c, const Field2D& source, int M, int N,
                               const SolveOptions& opt) {
  if (!(source.grid == c.grid)) throw std::invalid_argument("solve_periodic: grid mismatch");
  SurfaceSolution sol;
  sol.psi_level = c.psi_level;
  sol.M = M;
  sol.N = N;
  sol.bc = BoundaryMode::periodic;
  sol.rho = Field2D(c.grid, 0.0, true);
  sol.source_linf = source.max_abs();
  if (sol.source_linf <= source_floor(c)) {
    sol.residual_linf = sol.source_linf;
    return sol;
  }
  const double target = opt.tol * sol.source_linf;
  const std::size_t n = static_cast<std::size_t>(c.grid.size());

  // A = -L (SPD on the solution space), b = -S.
  auto apply_A = [&](const std::vector<double>& v) {
    Field2D f(c.grid);
    f.values = v;
    Field2D lv = inverse(apply_spectral(c, forward(f)));
    for (double& x : lv.values) x = -x;
    return lv.values;
  };
  auto precondition = [&](const std::vector<double>& r) {
    Spectrum s = forward(c.grid, r.data());
    for (int i = 0; i < c.grid.n_mu; ++i)
      for (int j = 0; j < s.cols(); ++j) {
        const double km = s.k_mu(i), kn = s.k_nu(j);
        if (s.nyquist(i, j) || (i == 0 && j == 0)) {
          s.at(i, j) = 0.0;
          continue;
        }
        s.at(i, j) /= c.mean_mm * km * km + c.mean_nn * kn * kn - 2.0 * c.mean_mn * km * kn;
      }
    std::vector<double> z(n);
    inverse(s, z.data());
    return z;
  };
  auto true_residual = [&](const std::vector<double>& x) {
    std::vector<double> r = apply_A(x);
    for (std::size_t k = 0; k < n; ++k) r[k] = -source.values[k] - r[k];
    remove_mean(r);
    return r;
  };

  std::vector<double> x(n, 0.0), r(n);
  for (std::size_t k = 0; k < n; ++k) r[k] = -source.values[k];
  remove_mean(r);
  std::vector<double> z = precondition(r), p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= opt.max_iter; ++it) {
    const std::vector<double> Ap = apply_A(p);
    const double alpha = rz / dot(p, Ap);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * Ap[k];
    }
    remove_mean(x);
    remove_mean(r);
    double res = linf(r);
    bool restart = false;
    if (res <= target) {
      r = true_residual(x);
      res = linf(r);
      restart = true;
    }
    sol.residual_history.push_back(res / sol.source_linf);
    sol.iterations = it;
    if (res <= target) {
      sol.rho.values = x;
      sol.residual_linf = res;
      return sol;
    }
    z = precondition(r);
    const double rz_new = dot(r, z);
    if (restart) {
      p = z;
    } else {
      const double beta = rz_new / rz;
      for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    }
    rz = rz_new;
  }
  std::ostringstream os;
  os << "periodic CG did not reach relative residual " << opt.tol << " within " << opt.max_iter
     << " iterations on Psi = " << c.psi_level << " (last "
     << (sol.residual_history.empty() ? 0.0 : sol.residual_history.back()) << ")";
  throw SolverError(os.str(), sol.residual_history);
}

namespace {

// Nine-point stencil of the FD operator at interior node (i, j) of the closed
// grid; w[di + 1][dj + 1] multiplies rho(i + di, j + dj).
struct Stencil {
  double w[3][3] = {};
};

Stencil fd_stencil(const EllipticCoefficients& c, int i, int j) {
  const PeriodicGrid& g = c.grid;
  auto at = [&](const Field2D& f, int a, int b) {
    return f.values[static_cast<std::size_t>(g.wrapped(a, b))];
  };
  const double hm = g.h_mu(), hn = g.h_nu();
  Stencil s;
  const double mm_e = 0.5 * (at(c.a_mm, i, j) + at(c.a_mm, i + 1, j));
  const double mm_w = 0.5 * (at(c.a_mm, i, j) + at(c.a_mm, i - 1, j));
  const double nn_n = 0.5 * (at(c.a_nn, i, j) + at(c.a_nn, i, j + 1));
  const double nn_s = 0.5 * (at(c.a_nn, i, j) + at(c.a_nn, i, j - 1));
  s.w[2][1] += mm_e / (hm * hm);
  s.w[0][1] += mm_w / (hm * hm);
  s.w[1][1] -= (mm_e + mm_w) / (hm * hm);
  s.w[1][2] += nn_n / (hn * hn);
  s.w[1][0] += nn_s / (hn * hn);
  s.w[1][1] -= (nn_n + nn_s) / (hn * hn);
  // -d_mu(a_mn d_nu rho) - d_nu(a_mn d_mu rho)
  const double q = 1.0 / (4.0 * hm * hn);
  const double ae = at(c.a_mn, i + 1, j), aw = at(c.a_mn, i - 1, j);
  const double an = at(c.a_mn, i, j + 1), as = at(c.a_mn, i, j - 1);
  s.w[2][2] -= (ae + an) * q;
  s.w[2][0] += (ae + as) * q;
  s.w[0][2] += (aw + an) * q;
  s.w[0][0] -= (aw + as) * q;
  return s;
}

}  // namespace

double dirichlet_residual(const EllipticCoefficients& c, const Field2D& rho,
                          const Field2D& source) {
  const PeriodicGrid& g = c.grid;
  double res = 0.0;
  for (int i = 1; i < g.n_mu; ++i)
    for (int j = 1; j < g.n_nu; ++j) {
      const Stencil s = fd_stencil(c, i, j);
      double l = 0.0;
      for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
          l += s.w[a + 1][b + 1] * rho.values[static_cast<std::size_t>(g.wrapped(i + a, j + b))];
      res = std::max(res, std::abs(l - source(i, j)));
    }
  return res;
}

SurfaceSolution solve_dirichlet(const EllipticCoefficients& c, const Field2D& source, int M, int N,
                                const SolveOptions& opt) {
  if (!(source.grid == c.grid)) throw std::invalid_argument("solve_dirichlet: grid mismatch");
  const PeriodicGrid& g = c.grid;
  SurfaceSolution sol;
  sol.psi_level = c.psi_level;
  sol.M = M;
  sol.N = N;
  sol.bc = BoundaryMode::dirichlet;
  sol.rho = Field2D(g);
  sol.source_linf = source.max_abs();
  if (sol.source_linf <= source_floor(c)) {
    sol.residual_linf = sol.source_linf;
    return sol;
  }

  const int ni = g.n_mu - 1, nj = g.n_nu - 1;  // interior nodes 1..n-1
  auto unknown = [&](int i, int j) { return (i - 1) * nj + (j - 1); };
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(ni) * nj * 9);
  Eigen::VectorXd b(ni * nj);
  for (int i = 1; i < g.n_mu; ++i)
    for (int j = 1; j < g.n_nu; ++j) {
      const Stencil s = fd_stencil(c, i, j);
      for (int a = -1; a <= 1; ++a)
        for (int bb = -1; bb <= 1; ++bb) {
          const int ii = i + a, jj = j + bb;
          if (ii < 1 || ii > ni || jj < 1 || jj > nj) continue;  // rho = 0 there
          const double w = s.w[a + 1][bb + 1];
          if (w != 0.0) trip.emplace_back(unknown(i, j), unknown(ii, jj), -w);
        }
      b[unknown(i, j)] = -source(i, j);
    }
  Eigen::SparseMatrix<double> A(ni * nj, ni * nj);
  A.setFromTriplets(trip.begin(), trip.end());

  auto scatter = [&](const Eigen::VectorXd& x) {
    Field2D rho(g);
    for (int i = 1; i < g.n_mu; ++i)
      for (int j = 1; j < g.n_nu; ++j) rho(i, j) = x[unknown(i, j)];
    return rho;
  };
  const double target = opt.tol * sol.source_linf;
  std::vector<double> history;

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setMaxIterations(opt.max_iter);
  cg.setTolerance(opt.tol * 1e-2);
  cg.compute(A);
  Eigen::VectorXd x = cg.solve(b);
  Field2D rho = scatter(x);
  double res = dirichlet_residual(c, rho, source);
  history.push_back(res / sol.source_linf);
  int iters = static_cast<int>(cg.iterations());
  if (!(res <= target)) {
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>> bicg;
    bicg.setMaxIterations(opt.max_iter);
    bicg.setTolerance(opt.tol * 1e-2);
    bicg.compute(A);
    x = bicg.solveWithGuess(b, x);
    rho = scatter(x);
    res = dirichlet_residual(c, rho, source);
    history.push_back(res / sol.source_linf);
    iters += static_cast<int>(bicg.iterations());
  }
  if (!(res <= target)) {
    std::ostringstream os;
    os << "Dirichlet solve did not reach relative residual " << opt.tol << " on Psi = "
       << c.psi_level;
    throw SolverError(os.str(), history);
  }
  sol.rho = rho;
  sol.residual_linf = res;
  sol.iterations = iters;
  sol.residual_history = history;
  return sol;
}

BoundaryDerivatives boundary_derivatives_spectral(const Field2D& rho) {
  const PeriodicGrid& g = rho.grid;
  const Spectrum s = forward(rho);
  const Spectrum sm = d_mu(s), sn = d_nu(s);
  BoundaryDerivatives b;
  for (int j = 0; j < g.n_nu; ++j) {
    b.dmu_left.push_back(evaluate(sm, 0.0, g.nu(j)));
    b.dmu_right.push_back(evaluate(sm, kTwoPi, g.nu(j)));
  }
  for (int i = 0; i < g.n_mu; ++i) {
    b.dnu_bottom.push_back(evaluate(sn, g.mu(i), 0.0));
    b.dnu_top.push_back(evaluate(sn, g.mu(i), kTwoPi));
  }
  return b;
}

BoundaryDerivatives boundary_derivatives_fd(const Field2D& rho) {
  const PeriodicGrid& g = rho.grid;
  const int nm = g.n_mu, nn = g.n_nu;
  // Index n on the closed interval is node 0 again.
  auto v = [&](int i, int j) { return rho(i % nm, j % nn); };
  BoundaryDerivatives b;
  for (int j = 0; j < nn; ++j) {
    b.dmu_left.push_back((-3.0 * v(0, j) + 4.0 * v(1, j) - v(2, j)) / (2.0 * g.h_mu()));
    b.dmu_right.push_back((3.0 * v(nm, j) - 4.0 * v(nm - 1, j) + v(nm - 2, j)) / (2.0 * g.h_mu()));
  }
  for (int i = 0; i < nm; ++i) {
    b.dnu_bottom.push_back((-3.0 * v(i, 0) + 4.0 * v(i, 1) - v(i, 2)) / (2.0 * g.h_nu()));
    b.dnu_top.push_back((3.0 * v(i, nn) - 4.0 * v(i, nn - 1) + v(i, nn - 2)) / (2.0 * g.h_nu()));
  }
  return b;
}

PeriodicityDefect periodicity_defect(const BoundaryDerivatives& b) {
  PeriodicityDefect d;
  for (std::size_t k = 0; k < b.dmu_left.size(); ++k)
    d.d_mu = std::max(d.d_mu, std::abs(b.dmu_left[k] - b.dmu_right[k]));
  for (std::size_t k = 0; k < b.dnu_bottom.size(); ++k)
    d.d_nu = std::max(d.d_nu, std::abs(b.dnu_bottom[k] - b.dnu_top[k]));
  return d;
}

double surface_energy(const EllipticCoefficients& c, const Field2D& rho, int M, int N) {
  std::vector<double> gm, gn;
  fine_gradient(c, forward(rho), gm, gn);
  double quad = 0.0, cst = 0.0;
  for (std::size_t k = 0; k < gm.size(); ++k) {
    quad += c.fine_mm[k] * gm[k] * gm[k] - 2.0 * c.fine_mn[k] * gm[k] * gn[k] +
            c.fine_nn[k] * gn[k] * gn[k];
    cst += c.fine_mm[k] * M * M - 2.0 * c.fine_mn[k] * M * N + c.fine_nn[k] * N * N;
  }
  const double w_fine = kTwoPi * kTwoPi / static_cast<double>(c.fine.size());
  const Field2D S = assemble_source(c, M, N, std::numeric_limits<double>::infinity());
  double lin = 0.0;
  for (std::size_t k = 0; k < rho.values.size(); ++k) lin += rho.values[k] * S.values[k];
  const double w_base = kTwoPi * kTwoPi / static_cast<double>(c.grid.size());
  return 0.5 * (w_fine * (quad + cst) + 2.0 * w_base * lin);
}

double surface_energy_direct(const EllipticCoefficients& c, const Field2D& rho, int M, int N) {
  std::vector<double> gm, gn;
  fine_gradient(c, forward(rho), gm, gn);
  double e = 0.0;
  for (std::size_t k = 0; k < gm.size(); ++k) {
    const double tm = M + gm[k], tn = N + gn[k];
    e += c.fine_mm[k] * tm * tm - 2.0 * c.fine_mn[k] * tm * tn + c.fine_nn[k] * tn * tn;
  }
  return 0.5 * e * kTwoPi * kTwoPi / static_cast<double>(c.fine.size());
}

}  // namespace clebsch
