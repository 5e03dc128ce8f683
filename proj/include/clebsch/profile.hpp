#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace clebsch {

// One-dimensional profile with its first derivative: f(Psi) for the
// w' = f(Psi) w wrapper and g(phi) for the toroidal term of the
// non-solenoidal equilibrium example.
//
// Text form (what configs and the CLI accept):
//   const:c                      c
//   exp:A,k                      A exp(k x)
//   poly:c0,c1,...               c0 + c1 x + ...
//   table:x0=y0;x1=y1;...        modified-Akima spline through the points
//   trig:a0,a1,b1,a2,b2,...      a0 + sum_k a_k cos(k x) + b_k sin(k x)
class ScalarProfile {
 public:
  enum class Kind { polynomial, exponential, table, trigonometric };

  static ScalarProfile constant(double c);
  static ScalarProfile exponential(double amplitude, double rate);
  static ScalarProfile polynomial(std::vector<double> coeffs);
  static ScalarProfile table(std::vector<double> x, std::vector<double> y);
  static ScalarProfile trigonometric(std::vector<double> coeffs);

  // Throws std::invalid_argument on malformed text.
  static ScalarProfile parse(std::string_view text);

  ScalarProfile();  // f == 1

  double value(double x) const;
  double derivative(double x) const;
  // Table profiles are only differentiable inside their knot range.
  bool differentiable_on(double lo, double hi) const;

  Kind kind() const { return kind_; }
  std::string to_string() const;

 private:
  struct Spline;
  Kind kind_ = Kind::polynomial;
  std::vector<double> params_;
  std::vector<double> knots_x_, knots_y_;
  std::shared_ptr<const Spline> spline_;
};

}  // namespace clebsch
