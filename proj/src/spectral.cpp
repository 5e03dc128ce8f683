#include "clebsch/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace clebsch {

namespace {

// FFTW planning is not thread-safe, execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class Plan2D {
 public:
  Plan2D(int n0, int n1) : n0_(n0), n1_(n1) {
    const std::size_t nr = static_cast<std::size_t>(n0) * n1;
    const std::size_t nc = static_cast<std::size_t>(n0) * (n1 / 2 + 1);
    double* r = fftw_alloc_real(nr);
    fftw_complex* c = fftw_alloc_complex(nc);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fwd_ = fftw_plan_dft_r2c_2d(n0, n1, r, c, flags);
    bwd_ = fftw_plan_dft_c2r_2d(n0, n1, c, r, flags);
    fftw_free(r);
    fftw_free(c);
    if (!fwd_ || !bwd_) throw std::runtime_error("FFTW planning failed");
  }
  ~Plan2D() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  Plan2D(const Plan2D&) = delete;
  Plan2D& operator=(const Plan2D&) = delete;

  void r2c(const double* in, Complex* out) const {
    // r2c leaves its input intact.
    fftw_execute_dft_r2c(fwd_, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
  }
  void c2r(const Complex* in, double* out) const {
    // c2r overwrites its input; work on a copy.
    std::vector<Complex> scratch(in, in + static_cast<std::size_t>(n0_) * (n1_ / 2 + 1));
    fftw_execute_dft_c2r(bwd_, reinterpret_cast<fftw_complex*>(scratch.data()), out);
  }

 private:
  int n0_, n1_;
  fftw_plan fwd_ = nullptr, bwd_ = nullptr;
};

const Plan2D& plan_for(const PeriodicGrid& g) {
  // Touch the mutex first so it outlives the cache at static destruction.
  std::mutex& m = planner_mutex();
  static std::map<std::pair<int, int>, std::unique_ptr<Plan2D>> cache;
  std::lock_guard<std::mutex> lock(m);
  auto& slot = cache[{g.n_mu, g.n_nu}];
  if (!slot) slot = std::make_unique<Plan2D>(g.n_mu, g.n_nu);
  return *slot;
}

}  // namespace

Spectrum::Spectrum(const PeriodicGrid& g)
    : grid(g), c(static_cast<std::size_t>(g.n_mu) * (g.n_nu / 2 + 1)) {}

Spectrum& Spectrum::operator+=(const Spectrum& o) {
  if (!(grid == o.grid)) throw std::invalid_argument("spectrum grid mismatch");
  for (std::size_t k = 0; k < c.size(); ++k) c[k] += o.c[k];
  return *this;
}

Spectrum& Spectrum::operator*=(double s) {
  for (auto& v : c) v *= s;
  return *this;
}

Spectrum forward(const PeriodicGrid& g, const double* values) {
  Spectrum s(g);
  plan_for(g).r2c(values, s.c.data());
  s *= 1.0 / static_cast<double>(g.size());
  return s;
}

Spectrum forward(const Field2D& f) { return forward(f.grid, f.values.data()); }

void inverse(const Spectrum& s, double* values) { plan_for(s.grid).c2r(s.c.data(), values); }

Field2D inverse(const Spectrum& s) {
  Field2D f(s.grid);
  inverse(s, f.values.data());
  return f;
}

namespace {

Spectrum differentiate(const Spectrum& s, bool along_mu) {
  Spectrum out(s.grid);
  for (int i = 0; i < s.grid.n_mu; ++i)
    for (int j = 0; j < s.cols(); ++j) {
      if (s.nyquist(i, j)) continue;
      const double k = along_mu ? s.k_mu(i) : s.k_nu(j);
      out.at(i, j) = Complex(0.0, k) * s.at(i, j);
    }
  return out;
}

}  // namespace

Spectrum d_mu(const Spectrum& s) { return differentiate(s, true); }
Spectrum d_nu(const Spectrum& s) { return differentiate(s, false); }

Spectrum resample(const Spectrum& s, const PeriodicGrid& target) {
  Spectrum out(target);
  const int kmax_mu = std::min(s.grid.n_mu, target.n_mu) / 2;  // exclusive
  const int kmax_nu = std::min(s.grid.n_nu, target.n_nu) / 2;
  for (int i = 0; i < s.grid.n_mu; ++i) {
    const int k = s.k_mu(i);
    if (std::abs(k) >= kmax_mu) continue;
    const int it = k >= 0 ? k : k + target.n_mu;
    for (int j = 0; j < kmax_nu; ++j) out.at(it, j) = s.at(i, j);
  }
  return out;
}

PointBasis::PointBasis(const PeriodicGrid& g, double mu, double nu)
    : grid_(g), e_mu_(static_cast<std::size_t>(g.n_mu)), e_nu_(static_cast<std::size_t>(g.n_nu / 2 + 1)) {
  for (int i = 0; i < g.n_mu; ++i) {
    const int k = i <= g.n_mu / 2 ? i : i - g.n_mu;
    e_mu_[static_cast<std::size_t>(i)] =
        2 * i == g.n_mu ? Complex(std::cos(k * mu), 0.0) : std::polar(1.0, k * mu);
  }
  for (int j = 0; j <= g.n_nu / 2; ++j) {
    Complex e = 2 * j == g.n_nu ? Complex(std::cos(j * nu), 0.0) : std::polar(1.0, j * nu);
    if (j > 0 && 2 * j < g.n_nu) e *= 2.0;
    e_nu_[static_cast<std::size_t>(j)] = e;
  }
}

double PointBasis::evaluate(const Spectrum& s) const {
  if (!(s.grid == grid_)) throw std::invalid_argument("PointBasis: grid mismatch");
  double acc = 0.0;
  const int cols = s.cols();
  for (int i = 0; i < grid_.n_mu; ++i) {
    Complex row = 0.0;
    const Complex* c = &s.c[static_cast<std::size_t>(i) * cols];
    for (int j = 0; j < cols; ++j) row += c[j] * e_nu_[static_cast<std::size_t>(j)];
    acc += (row * e_mu_[static_cast<std::size_t>(i)]).real();
  }
  return acc;
}

double evaluate(const Spectrum& s, double mu, double nu) {
  return PointBasis(s.grid, mu, nu).evaluate(s);
}

}  // namespace clebsch
