#pragma once

// Analytic nested-torus foliations Psi(x) and the curvilinear coordinates
// (mu, nu, Psi) built on them.
//
// Angle conventions, per variant:
//   mu = toroidal angle phi = atan2(y, x), reduced to [0, 2pi).
//   Axisym, PhasePerturbed, DisplacedEllipse:  nu = atan2(z, r - r0).
//   ExpSheared:         nu = atan2(z, R - r0),  R = r exp(-eps y).
//   ConjugateHarmonic:  nu = atan2(Z, R - r0),  R = r exp(-eps Q), Z = z exp(-eps sin z),
//                       Q = exp(m x) sin(m y).
// With these choices every variant except DisplacedEllipse has circular
// level sets in the (R, Z) plane, so the inverse map reduces to scalar
// Newton solves on a closed-form initial guess.

#include <Eigen/Dense>

#include <array>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "clebsch/exec.hpp"

namespace clebsch {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Jacobians at or below this value are treated as degenerate coordinates.
inline constexpr double kJacobianMin = 1e-8;

struct ToroidalCoords {
  double mu = 0.0;
  double nu = 0.0;
  double psi = 0.0;
};

namespace surface {

// Psi = [(r - r0)^2 + z^2] / 2
struct Axisym {
  double r0 = 1.0;
};

// Psi = Psi_axisym + eps sin(m phi) / 2
struct PhasePerturbed {
  double r0 = 1.0;
  double eps = 0.1;
  int m = 4;
};

// Psi = (r - r0)^2 / 2 + E (z - h)^2 / 2,  h = eps z sin(m phi)
struct DisplacedEllipse {
  double r0 = 1.0;
  double elongation = 1.0;
  double eps = 0.0;
  int m = 1;
};

// Psi = [(r exp(-eps y) - r0)^2 + z^2] / 2
struct ExpSheared {
  double r0 = 1.0;
  double eps = 0.18;
};

// Psi = {[r exp(-eps Q) - r0]^2 + z^2 exp(-eps S)} / 2,
// P = exp(m x) cos(m y), Q = exp(m x) sin(m y), S = 2 sin z
struct ConjugateHarmonic {
  double r0 = 1.0;
  double eps = 0.05;
  int m = 1;
};

}  // namespace surface

class SurfaceFamily {
 public:
  using Variant = std::variant<surface::Axisym, surface::PhasePerturbed, surface::DisplacedEllipse,
                               surface::ExpSheared, surface::ConjugateHarmonic>;

  // Throws std::invalid_argument on r0 <= 0, E <= 0 or m == 0.
  SurfaceFamily(Variant v);  // NOLINT(google-explicit-constructor)
  template <class S>
    requires(!std::is_same_v<S, Variant> && !std::is_same_v<S, SurfaceFamily> &&
             std::is_constructible_v<Variant, S>)
  SurfaceFamily(S s) : SurfaceFamily(Variant(std::move(s))) {}  // NOLINT

  const Variant& variant() const { return v_; }
  double r0() const;
  std::string name() const;
  std::string describe() const;

 private:
  Variant v_;
};

// Gradients of the three coordinate functions at a Cartesian point, plus the
// Jacobian J = grad(mu) . grad(nu) x grad(Psi).
struct CoordinateFrame {
  Vec3 grad_mu, grad_nu, grad_psi;
  double jacobian = 0.0;

  // Tangent basis (d x / d mu, d x / d nu, d x / d Psi) from the dual relations.
  Vec3 e_mu() const { return grad_nu.cross(grad_psi) / jacobian; }
  Vec3 e_nu() const { return grad_psi.cross(grad_mu) / jacobian; }
  Vec3 e_psi() const { return grad_mu.cross(grad_nu) / jacobian; }
};

// Index order (mu, nu, Psi) = (0, 1, 2).
struct MetricSample {
  Mat3 upper = Mat3::Zero();  // g^{ij} = grad x^i . grad x^j
  Mat3 lower = Mat3::Zero();  // g_{ij}
  double jacobian = 0.0;
};

double psi_value(const SurfaceFamily& family, const Vec3& p);
Vec3 grad_psi(const SurfaceFamily& family, const Vec3& p);

// Forward map x -> (mu, nu, Psi).
ToroidalCoords to_toroidal(const SurfaceFamily& family, const Vec3& p);
// Inverse map (mu, nu, Psi) -> x. Throws InversionError when the level set is
// empty at (mu, nu) or Newton does not converge (50 iterations, 1e-12).
Vec3 to_cartesian(const SurfaceFamily& family, const ToroidalCoords& c);

CoordinateFrame coordinate_frame(const SurfaceFamily& family, const Vec3& p);

// Upper metric and J at a curvilinear point; the lower metric is filled in as
// well. DisplacedEllipse uses its closed-form components. Throws
// DegenerateCoordinatesError when J <= kJacobianMin.
MetricSample contravariant_metric(const SurfaceFamily& family, const ToroidalCoords& c);

// Lower metric from the cofactors of the upper metric (det g^{ij} = J^2).
MetricSample covariant_metric(const MetricSample& upper_only);

struct ValidityReport {
  int samples = 0;
  int inversion_failures = 0;
  double min_grad_psi = 0.0;
  double min_jacobian = 0.0;
  double max_jacobian = 0.0;
  bool violation = false;
  std::string reason;
};

// Samples (mu, nu, Psi) quasi-randomly over [0,2pi)^2 x [psi_lo, psi_hi] and
// checks the solvability hypotheses: invertible coordinates, grad Psi != 0,
// J > kJacobianMin.
ValidityReport validity_scan(const SurfaceFamily& family, double psi_lo, double psi_hi,
                             int n_samples);

// Low-discrepancy points (Sobol) in the hollow torus psi_lo <= Psi <= psi_hi.
std::vector<Vec3> sample_interior(const SurfaceFamily& family, double psi_lo, double psi_hi,
                                  int n, Exec exec = Exec::serial);

// First n points of the 3-D Sobol sequence (origin skipped), cell-centred in [0, 1)^3.
std::vector<std::array<double, 3>> sobol_unit_cube(int n);

double wrap_angle(double a);

}  // namespace clebsch
