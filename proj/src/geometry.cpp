#include "clebsch/geometry.hpp"

#include <boost/random/sobol.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "clebsch/errors.hpp"

namespace clebsch {

namespace {

const Vec3 kZhat(0.0, 0.0, 1.0);

struct Cylindrical {
  double r, phi;
  Vec3 grad_r, grad_phi;
};

Cylindrical cylindrical(const Vec3& p) {
  const double r = std::hypot(p.x(), p.y());
  if (!(r > 0.0)) throw DomainError("cylindrical radius vanishes (point on the z-axis)");
  Cylindrical c;
  c.r = r;
  c.phi = std::atan2(p.y(), p.x());
  c.grad_r = Vec3(p.x() / r, p.y() / r, 0.0);
  c.grad_phi = Vec3(-p.y() / (r * r), p.x() / (r * r), 0.0);
  return c;
}

// Poloidal angle atan2(b, a) of a point (a, b) in a meridional plane, with gradient.
struct Poloidal {
  double nu;
  Vec3 grad;
};

Poloidal poloidal(double a, const Vec3& grad_a, double b, const Vec3& grad_b) {
  const double d2 = a * a + b * b;
  if (!(d2 > 0.0)) throw DomainError("poloidal angle undefined on the magnetic axis");
  return {wrap_angle(std::atan2(b, a)), (a * grad_b - b * grad_a) / d2};
}

// Everything the coordinate machinery needs at one point.
struct Local {
  double psi;
  Vec3 grad_psi;
  Poloidal pol;
  Vec3 grad_mu;
};

// --- Axisym ---------------------------------------------------------------

double psi_of(const surface::Axisym& s, const Vec3& p) {
  const double a = std::hypot(p.x(), p.y()) - s.r0;
  return 0.5 * (a * a + p.z() * p.z());
}

Local local_of(const surface::Axisym& s, const Vec3& p) {
  const auto c = cylindrical(p);
  const double a = c.r - s.r0;
  return {0.5 * (a * a + p.z() * p.z()), a * c.grad_r + p.z() * kZhat,
          poloidal(a, c.grad_r, p.z(), kZhat), c.grad_phi};
}

Vec3 invert(const surface::Axisym& s, const ToroidalCoords& q) {
  if (!(q.psi > 0.0)) throw InversionError("Psi must be positive");
  const double d = std::sqrt(2.0 * q.psi);
  const double r = s.r0 + d * std::cos(q.nu);
  if (!(r > 0.0)) throw InversionError("level set crosses the z-axis");
  return {r * std::cos(q.mu), r * std::sin(q.mu), d * std::sin(q.nu)};
}

// --- PhasePerturbed -------------------------------------------------------

double psi_of(const surface::PhasePerturbed& s, const Vec3& p) {
  const auto c = cylindrical(p);
  const double a = c.r - s.r0;
  return 0.5 * (a * a + p.z() * p.z()) + 0.5 * s.eps * std::sin(s.m * c.phi);
}

Local local_of(const surface::PhasePerturbed& s, const Vec3& p) {
  const auto c = cylindrical(p);
  const double a = c.r - s.r0;
  const double psi = 0.5 * (a * a + p.z() * p.z()) + 0.5 * s.eps * std::sin(s.m * c.phi);
  const Vec3 grad =
      a * c.grad_r + p.z() * kZhat + 0.5 * s.eps * s.m * std::cos(s.m * c.phi) * c.grad_phi;
  return {psi, grad, poloidal(a, c.grad_r, p.z(), kZhat), c.grad_phi};
}

Vec3 invert(const surface::PhasePerturbed& s, const ToroidalCoords& q) {
  const double d2 = 2.0 * q.psi - s.eps * std::sin(s.m * q.mu);
  if (!(d2 > 0.0)) throw InversionError("level set is empty at this toroidal angle");
  const double d = std::sqrt(d2);
  const double r = s.r0 + d * std::cos(q.nu);
  if (!(r > 0.0)) throw InversionError("level set crosses the z-axis");
  return {r * std::cos(q.mu), r * std::sin(q.mu), d * std::sin(q.nu)};
}

// --- DisplacedEllipse -----------------------------------------------------

double psi_of(const surface::DisplacedEllipse& s, const Vec3& p) {
  const auto c = cylindrical(p);
  const double a = c.r - s.r0;
  const double zh = p.z() * (1.0 - s.eps * std::sin(s.m * c.phi));
  return 0.5 * a * a + 0.5 * s.elongation * zh * zh;
}

Local local_of(const surface::DisplacedEllipse& s, const Vec3& p) {
  const auto c = cylindrical(p);
  const double a = c.r - s.r0;
  const double z = p.z();
  const double sh = 1.0 - s.eps * std::sin(s.m * c.phi);
  const double E = s.elongation;
  const double psi = 0.5 * a * a + 0.5 * E * z * z * sh * sh;
  const Vec3 grad = a * c.grad_r + E * z * sh * sh * kZhat +
                    E * z * z * sh * (-s.eps * s.m * std::cos(s.m * c.phi)) * c.grad_phi;
  return {psi, grad, poloidal(a, c.grad_r, z, kZhat), c.grad_phi};
}

Vec3 invert(const surface::DisplacedEllipse& s, const ToroidalCoords& q) {
  if (!(q.psi > 0.0)) throw InversionError("Psi must be positive");
  const double sh = 1.0 - s.eps * std::sin(s.m * q.mu);
  const double cn = std::cos(q.nu), sn = std::sin(q.nu);
  const double denom = cn * cn + s.elongation * sh * sh * sn * sn;
  if (!(denom > 0.0)) throw InversionError("degenerate cross-section");
  const double rad = std::sqrt(2.0 * q.psi / denom);
  const double r = s.r0 + rad * cn;
  if (!(r > 0.0)) throw InversionError("level set crosses the z-axis");
  return {r * std::cos(q.mu), r * std::sin(q.mu), rad * sn};
}

// --- sheared families: R = r exp(-eps Q(x, y)), Z = z exp(-eps s(z)) -------

struct Shear {
  double q;
  Vec3 grad_q;
};

Shear shear_of(const surface::ExpSheared&, double /*x*/, double y) {
  return {y, Vec3(0.0, 1.0, 0.0)};
}

Shear shear_of(const surface::ConjugateHarmonic& s, double x, double y) {
  const double e = std::exp(s.m * x);
  return {e * std::sin(s.m * y),
          Vec3(s.m * e * std::sin(s.m * y), s.m * e * std::cos(s.m * y), 0.0)};
}

// Z(z) and dZ/dz
std::pair<double, double> vertical_of(const surface::ExpSheared&, double z) { return {z, 1.0}; }

std::pair<double, double> vertical_of(const surface::ConjugateHarmonic& s, double z) {
  const double e = std::exp(-s.eps * std::sin(z));
  return {z * e, e * (1.0 - s.eps * z * std::cos(z))};
}

template <class S>
double sheared_psi(const S& s, const Vec3& p) {
  const double r = std::hypot(p.x(), p.y());
  const double R = r * std::exp(-s.eps * shear_of(s, p.x(), p.y()).q);
  const double Z = vertical_of(s, p.z()).first;
  return 0.5 * ((R - s.r0) * (R - s.r0) + Z * Z);
}

template <class S>
Local sheared_local(const S& s, const Vec3& p) {
  const auto c = cylindrical(p);
  const auto sh = shear_of(s, p.x(), p.y());
  const double ex = std::exp(-s.eps * sh.q);
  const double R = c.r * ex;
  const Vec3 grad_R = ex * (c.grad_r - s.eps * c.r * sh.grad_q);
  const auto [Z, dZ] = vertical_of(s, p.z());
  const Vec3 grad_Z = dZ * kZhat;
  const double a = R - s.r0;
  return {0.5 * (a * a + Z * Z), a * grad_R + Z * grad_Z, poloidal(a, grad_R, Z, grad_Z),
          c.grad_phi};
}

constexpr int kNewtonMaxIter = 50;
constexpr double kNewtonTol = 1e-12;

template <class S>
Vec3 sheared_invert(const S& s, const ToroidalCoords& q) {
  if (!(q.psi > 0.0)) throw InversionError("Psi must be positive");
  const double d = std::sqrt(2.0 * q.psi);
  const double R = s.r0 + d * std::cos(q.nu);
  const double Z = d * std::sin(q.nu);
  if (!(R > 0.0)) throw InversionError("level set crosses the z-axis");

  // Vertical: Z(z) = Z, initial guess z = Z (exact at eps = 0).
  double z = Z;
  bool converged = false;
  for (int it = 0; it < kNewtonMaxIter; ++it) {
    const auto [val, der] = vertical_of(s, z);
    if (!(std::abs(der) > 0.0)) break;
    const double dz = (val - Z) / der;
    z -= dz;
    if (std::abs(dz) <= kNewtonTol * std::max(1.0, std::abs(z))) {
      converged = true;
      break;
    }
  }
  if (!converged || !std::isfinite(z)) throw InversionError("Newton failed on the vertical relation");

  // Radial: r exp(-eps Q(r cos mu, r sin mu)) = R, initial guess r = R.
  const double cm = std::cos(q.mu), sm = std::sin(q.mu);
  double r = R;
  converged = false;
  for (int it = 0; it < kNewtonMaxIter; ++it) {
    const auto sh = shear_of(s, r * cm, r * sm);
    const double ex = std::exp(-s.eps * sh.q);
    const double dq_dr = sh.grad_q.x() * cm + sh.grad_q.y() * sm;
    const double der = ex * (1.0 - s.eps * r * dq_dr);
    if (!(std::abs(der) > 0.0)) break;
    const double dr = (r * ex - R) / der;
    r -= dr;
    if (std::abs(dr) <= kNewtonTol * std::max(1.0, std::abs(r))) {
      converged = true;
      break;
    }
  }
  if (!converged || !std::isfinite(r) || !(r > 0.0))
    throw InversionError("Newton failed on the radial relation");
  return {r * cm, r * sm, z};
}

double psi_of(const surface::ExpSheared& s, const Vec3& p) { return sheared_psi(s, p); }
double psi_of(const surface::ConjugateHarmonic& s, const Vec3& p) { return sheared_psi(s, p); }
Local local_of(const surface::ExpSheared& s, const Vec3& p) { return sheared_local(s, p); }
Local local_of(const surface::ConjugateHarmonic& s, const Vec3& p) { return sheared_local(s, p); }
Vec3 invert(const surface::ExpSheared& s, const ToroidalCoords& q) { return sheared_invert(s, q); }
Vec3 invert(const surface::ConjugateHarmonic& s, const ToroidalCoords& q) {
  return sheared_invert(s, q);
}

Local local_data(const SurfaceFamily& family, const Vec3& p) {
  return std::visit([&](const auto& s) { return local_of(s, p); }, family.variant());
}

void fill_upper(MetricSample& m, const Vec3& gm, const Vec3& gn, const Vec3& gp) {
  const Vec3* g[3] = {&gm, &gn, &gp};
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) m.upper(i, j) = m.upper(j, i) = g[i]->dot(*g[j]);
}

// Closed-form upper metric and Jacobian for the displaced-ellipse family.
MetricSample displaced_ellipse_metric(const surface::DisplacedEllipse& s, const Vec3& p) {
  const double r = std::hypot(p.x(), p.y());
  const double phi = std::atan2(p.y(), p.x());
  const double z = p.z();
  const double a = r - s.r0;
  const double E = s.elongation;
  const double h = s.eps * z * std::sin(s.m * phi);
  const double h_phi = s.eps * z * s.m * std::cos(s.m * phi);
  const double h_z = s.eps * std::sin(s.m * phi);
  const double d2 = z * z + a * a;

  MetricSample m;
  m.upper(0, 0) = 1.0 / (r * r);
  m.upper(0, 1) = 0.0;
  m.upper(1, 1) = 1.0 / d2;
  m.upper(0, 2) = -E * (z - h) * h_phi / (r * r);
  m.upper(1, 2) = a / d2 * (E * (z - h) * (1.0 - h_z) - z);
  m.upper(2, 2) =
      a * a + E * E * (z - h) * (z - h) * ((1.0 - h_z) * (1.0 - h_z) + h_phi * h_phi / (r * r));
  m.upper(1, 0) = m.upper(0, 1);
  m.upper(2, 0) = m.upper(0, 2);
  m.upper(2, 1) = m.upper(1, 2);
  m.jacobian = (a * a + E * z * (1.0 - h_z) * (z - h)) / (r * d2);
  return m;
}

}  // namespace

double wrap_angle(double a) {
  double w = a - kTwoPi * std::floor(a / kTwoPi);
  if (w >= kTwoPi) w -= kTwoPi;
  return w;
}

SurfaceFamily::SurfaceFamily(Variant v) : v_(std::move(v)) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if (!(s.r0 > 0.0)) throw std::invalid_argument("r0 must be positive");
        if constexpr (std::is_same_v<T, surface::DisplacedEllipse>) {
          if (!(s.elongation > 0.0)) throw std::invalid_argument("elongation E must be positive");
        }
        if constexpr (requires { s.m; }) {
          if (s.m == 0) throw std::invalid_argument("harmonic number m must be nonzero");
        }
      },
      v_);
}

double SurfaceFamily::r0() const {
  return std::visit([](const auto& s) { return s.r0; }, v_);
}

std::string SurfaceFamily::name() const {
  static const char* names[] = {"axisym", "phase_perturbed", "displaced_ellipse", "exp_sheared",
                                "conjugate_harmonic"};
  return names[v_.index()];
}

std::string SurfaceFamily::describe() const {
  std::ostringstream os;
  os << name() << "{r0=" << r0();
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, surface::DisplacedEllipse>) os << ", E=" << s.elongation;
        if constexpr (requires { s.eps; }) os << ", eps=" << s.eps;
        if constexpr (requires { s.m; }) os << ", m=" << s.m;
      },
      v_);
  os << "}";
  return os.str();
}

double psi_value(const SurfaceFamily& family, const Vec3& p) {
  return std::visit([&](const auto& s) { return psi_of(s, p); }, family.variant());
}

Vec3 grad_psi(const SurfaceFamily& family, const Vec3& p) {
  // The poloidal angle is not needed here, so avoid its on-axis failure.
  return std::visit(
      [&](const auto& s) -> Vec3 {
        using T = std::decay_t<decltype(s)>;
        const auto c = cylindrical(p);
        if constexpr (std::is_same_v<T, surface::ExpSheared> ||
                      std::is_same_v<T, surface::ConjugateHarmonic>) {
          const auto sh = shear_of(s, p.x(), p.y());
          const double ex = std::exp(-s.eps * sh.q);
          const Vec3 grad_R = ex * (c.grad_r - s.eps * c.r * sh.grad_q);
          const auto [Z, dZ] = vertical_of(s, p.z());
          return (c.r * ex - s.r0) * grad_R + Z * dZ * kZhat;
        } else {
          const double z = p.z();
          const double a = c.r - s.r0;
          if constexpr (std::is_same_v<T, surface::Axisym>) {
            return a * c.grad_r + z * kZhat;
          } else if constexpr (std::is_same_v<T, surface::PhasePerturbed>) {
            return a * c.grad_r + z * kZhat +
                   0.5 * s.eps * s.m * std::cos(s.m * c.phi) * c.grad_phi;
          } else {
            const double sh = 1.0 - s.eps * std::sin(s.m * c.phi);
            return a * c.grad_r + s.elongation * z * sh * sh * kZhat +
                   s.elongation * z * z * sh * (-s.eps * s.m * std::cos(s.m * c.phi)) * c.grad_phi;
          }
        }
      },
      family.variant());
}

ToroidalCoords to_toroidal(const SurfaceFamily& family, const Vec3& p) {
  const auto loc = local_data(family, p);
  return {wrap_angle(std::atan2(p.y(), p.x())), loc.pol.nu, loc.psi};
}

Vec3 to_cartesian(const SurfaceFamily& family, const ToroidalCoords& c) {
  const ToroidalCoords q{wrap_angle(c.mu), wrap_angle(c.nu), c.psi};
  return std::visit([&](const auto& s) { return invert(s, q); }, family.variant());
}

CoordinateFrame coordinate_frame(const SurfaceFamily& family, const Vec3& p) {
  const auto loc = local_data(family, p);
  CoordinateFrame f;
  f.grad_mu = loc.grad_mu;
  f.grad_nu = loc.pol.grad;
  f.grad_psi = loc.grad_psi;
  f.jacobian = f.grad_mu.dot(f.grad_nu.cross(f.grad_psi));
  return f;
}

MetricSample covariant_metric(const MetricSample& in) {
  const Mat3& g = in.upper;
  const double det = g.determinant();
  if (!(det > kJacobianMin * kJacobianMin))
    throw DegenerateCoordinatesError("upper metric is singular");
  // det g^{ij} = J^2; prefer J^2 when the Jacobian is known.
  const double denom = in.jacobian > 0.0 ? in.jacobian * in.jacobian : det;
  MetricSample out = in;
  out.lower(0, 0) = (g(1, 1) * g(2, 2) - g(1, 2) * g(1, 2)) / denom;
  out.lower(1, 1) = (g(0, 0) * g(2, 2) - g(0, 2) * g(0, 2)) / denom;
  out.lower(2, 2) = (g(0, 0) * g(1, 1) - g(0, 1) * g(0, 1)) / denom;
  out.lower(0, 1) = (g(0, 2) * g(1, 2) - g(0, 1) * g(2, 2)) / denom;
  out.lower(0, 2) = (g(0, 1) * g(1, 2) - g(0, 2) * g(1, 1)) / denom;
  out.lower(1, 2) = (g(0, 1) * g(0, 2) - g(0, 0) * g(1, 2)) / denom;
  out.lower(1, 0) = out.lower(0, 1);
  out.lower(2, 0) = out.lower(0, 2);
  out.lower(2, 1) = out.lower(1, 2);
  return out;
}

MetricSample contravariant_metric(const SurfaceFamily& family, const ToroidalCoords& c) {
  const Vec3 p = to_cartesian(family, c);
  MetricSample m;
  if (const auto* de = std::get_if<surface::DisplacedEllipse>(&family.variant())) {
    m = displaced_ellipse_metric(*de, p);
  } else {
    const auto f = coordinate_frame(family, p);
    fill_upper(m, f.grad_mu, f.grad_nu, f.grad_psi);
    m.jacobian = f.jacobian;
  }
  if (!(m.jacobian > kJacobianMin)) {
    std::ostringstream os;
    os << "Jacobian " << m.jacobian << " below threshold at (mu, nu, Psi) = (" << c.mu << ", "
       << c.nu << ", " << c.psi << ")";
    throw DegenerateCoordinatesError(os.str());
  }
  return covariant_metric(m);
}

std::vector<std::array<double, 3>> sobol_unit_cube(int n) {
  boost::random::sobol gen(3);
  gen.discard(3);  // skip the origin
  const double span = static_cast<double>(gen.max()) - static_cast<double>(gen.min()) + 1.0;
  std::vector<std::array<double, 3>> out(static_cast<std::size_t>(std::max(n, 0)));
  for (auto& u : out)
    for (auto& v : u) v = (static_cast<double>(gen()) - static_cast<double>(gen.min()) + 0.5) / span;
  return out;
}

ValidityReport validity_scan(const SurfaceFamily& family, double psi_lo, double psi_hi,
                             int n_samples) {
  ValidityReport rep;
  rep.min_grad_psi = std::numeric_limits<double>::infinity();
  rep.min_jacobian = std::numeric_limits<double>::infinity();
  rep.max_jacobian = -std::numeric_limits<double>::infinity();
  for (const auto& u : sobol_unit_cube(n_samples)) {
    const ToroidalCoords c{kTwoPi * u[0], kTwoPi * u[1], psi_lo + (psi_hi - psi_lo) * u[2]};
    ++rep.samples;
    try {
      const Vec3 p = to_cartesian(family, c);
      const auto f = coordinate_frame(family, p);
      rep.min_grad_psi = std::min(rep.min_grad_psi, f.grad_psi.norm());
      rep.min_jacobian = std::min(rep.min_jacobian, f.jacobian);
      rep.max_jacobian = std::max(rep.max_jacobian, f.jacobian);
    } catch (const InversionError&) {
      ++rep.inversion_failures;
    } catch (const DomainError&) {
      ++rep.inversion_failures;
    }
  }
  std::ostringstream why;
  if (rep.inversion_failures > 0)
    why << rep.inversion_failures << " samples off any toroidal level set; ";
  if (rep.min_grad_psi <= kJacobianMin) why << "grad Psi vanishes; ";
  if (rep.min_jacobian <= kJacobianMin) why << "Jacobian below threshold; ";
  rep.reason = why.str();
  rep.violation = !rep.reason.empty();
  return rep;
}

std::vector<Vec3> sample_interior(const SurfaceFamily& family, double psi_lo, double psi_hi,
                                  int n, Exec exec) {
  const auto unit = sobol_unit_cube(n);
  std::vector<Vec3> pts(unit.size());
  for_each_index(exec, static_cast<long>(unit.size()), [&](long k) {
    const auto& u = unit[static_cast<std::size_t>(k)];
    pts[static_cast<std::size_t>(k)] = to_cartesian(
        family, {kTwoPi * u[0], kTwoPi * u[1], psi_lo + (psi_hi - psi_lo) * u[2]});
  });
  return pts;
}

}  // namespace clebsch
