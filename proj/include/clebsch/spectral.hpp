#pragma once

// Trigonometric representation of periodic grid data, backed by FFTW.
//
// Coefficients are normalized so that f(mu, nu) = sum_k c_k exp(i k . x); only
// the half spectrum k_nu >= 0 is stored (n_mu x (n_nu/2 + 1)). Derivatives and
// resampling drop the Nyquist modes, which are therefore never part of a
// solution.

#include <complex>
#include <vector>

#include "clebsch/grid.hpp"

namespace clebsch {

using Complex = std::complex<double>;

struct Spectrum {
  PeriodicGrid grid;
  std::vector<Complex> c;

  Spectrum() = default;
  explicit Spectrum(const PeriodicGrid& g);

  int cols() const { return grid.n_nu / 2 + 1; }
  Complex& at(int i, int j) { return c[static_cast<std::size_t>(i) * cols() + j]; }
  const Complex& at(int i, int j) const { return c[static_cast<std::size_t>(i) * cols() + j]; }

  // Signed wavenumber of row i (the Nyquist row reports +n_mu/2).
  int k_mu(int i) const { return i <= grid.n_mu / 2 ? i : i - grid.n_mu; }
  int k_nu(int j) const { return j; }
  bool nyquist(int i, int j) const { return 2 * i == grid.n_mu || 2 * j == grid.n_nu; }

  Spectrum& operator+=(const Spectrum& o);
  Spectrum& operator*=(double s);
};

Spectrum forward(const Field2D& f);
Spectrum forward(const PeriodicGrid& g, const double* values);
Field2D inverse(const Spectrum& s);
void inverse(const Spectrum& s, double* values);

Spectrum d_mu(const Spectrum& s);
Spectrum d_nu(const Spectrum& s);

// Zero-pads or truncates to another grid. Modes that are Nyquist on either
// grid are dropped.
Spectrum resample(const Spectrum& s, const PeriodicGrid& target);

// Fourier interpolant at an arbitrary point. Nyquist modes contribute as
// cosines, so the interpolant is real and reproduces the nodal values.
class PointBasis {
 public:
  PointBasis(const PeriodicGrid& g, double mu, double nu);
  double evaluate(const Spectrum& s) const;

 private:
  PeriodicGrid grid_;
  std::vector<Complex> e_mu_, e_nu_;
};

double evaluate(const Spectrum& s, double mu, double nu);

}  // namespace clebsch
