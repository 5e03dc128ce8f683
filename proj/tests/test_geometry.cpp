#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "clebsch/errors.hpp"
#include "clebsch/geometry.hpp"
#include "oracles.hpp"

using namespace clebsch;

namespace {

std::vector<SurfaceFamily> all_families() {
  return {surface::Axisym{1.0}, surface::PhasePerturbed{1.0, 0.1, 4},
          surface::DisplacedEllipse{1.0, 1.6, 0.3, 2}, surface::ExpSheared{1.0, 0.18},
          surface::ConjugateHarmonic{1.0, 0.05, 1}};
}

double angle_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

}  // namespace

TEST(Geometry, RoundTripEveryFamily) {
  for (const auto& fam : all_families()) {
    for (double psi : {0.06, 0.08, 0.1}) {
      for (int k = 0; k < 12; ++k) {
        ToroidalCoords c{0.3 + 0.5 * k, 0.1 + 0.52 * k, psi};
        Vec3 p = to_cartesian(fam, c);
        ToroidalCoords back = to_toroidal(fam, p);
        EXPECT_LT(angle_gap(back.mu, c.mu), 1e-10) << fam.describe();
        EXPECT_LT(angle_gap(back.nu, c.nu), 1e-10) << fam.describe();
        EXPECT_NEAR(back.psi, psi, 1e-12) << fam.describe();
        EXPECT_NEAR(psi_value(fam, p), psi, 1e-12);
      }
    }
  }
}

TEST(Geometry, AxisymJacobianIsInverseRadius) {
  SurfaceFamily fam = surface::Axisym{1.0};
  for (int k = 0; k < 20; ++k) {
    ToroidalCoords c{0.31 * k, 0.17 + 0.29 * k, 0.02 + 0.004 * k};
    MetricSample m = contravariant_metric(fam, c);
    Vec3 p = to_cartesian(fam, c);
    double r = std::hypot(p.x(), p.y());
    EXPECT_NEAR(m.jacobian, 1.0 / r, 1e-12);
    EXPECT_NEAR(m.upper(0, 1), 0.0, 1e-14);
    EXPECT_NEAR(m.upper(0, 2), 0.0, 1e-14);
  }
}

TEST(Geometry, DisplacedEllipseReducesToAxisym) {
  SurfaceFamily a = surface::Axisym{1.3};
  SurfaceFamily e = surface::DisplacedEllipse{1.3, 1.0, 0.0, 3};
  for (int k = 0; k < 10; ++k) {
    ToroidalCoords c{0.4 * k, 0.6 * k, 0.05};
    MetricSample ma = contravariant_metric(a, c);
    MetricSample me = contravariant_metric(e, c);
    EXPECT_LT((ma.upper - me.upper).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((ma.lower - me.lower).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(ma.jacobian, me.jacobian, 1e-12);
  }
}

TEST(Geometry, MetricDualityAndDeterminant) {
  for (const auto& fam : all_families()) {
    for (int k = 0; k < 8; ++k) {
      ToroidalCoords c{0.2 + 0.7 * k, 0.4 + 0.8 * k, 0.08};
      MetricSample m = contravariant_metric(fam, c);
      EXPECT_LT((m.upper * m.lower - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-10)
          << fam.describe();
      EXPECT_NEAR(m.upper.determinant(), m.jacobian * m.jacobian,
                  1e-10 * m.jacobian * m.jacobian);
      MetricSample from_cofactors = covariant_metric(MetricSample{m.upper, Mat3::Zero(), m.jacobian});
      EXPECT_LT((from_cofactors.lower - m.lower).cwiseAbs().maxCoeff(),
                1e-10 * m.lower.cwiseAbs().maxCoeff());
    }
  }
}

TEST(Geometry, FrameTangentsMatchParametrization) {
  // Tangent vectors from the dual relations against differences of the
  // closed-form displaced-ellipse parametrization.
  oracle::DisplacedEllipse os{1.0, 1.6, 0.3, 2};
  SurfaceFamily fam = surface::DisplacedEllipse{1.0, 1.6, 0.3, 2};
  const double h = 1e-5;
  for (int k = 0; k < 6; ++k) {
    double mu = 0.5 + k, nu = 0.3 + 0.9 * k, psi = 0.08;
    Vec3 p = os.point(mu, nu, psi);
    CoordinateFrame f = coordinate_frame(fam, p);
    Vec3 e_mu = (os.point(mu + h, nu, psi) - os.point(mu - h, nu, psi)) / (2 * h);
    Vec3 e_nu = (os.point(mu, nu + h, psi) - os.point(mu, nu - h, psi)) / (2 * h);
    Vec3 e_psi = (os.point(mu, nu, psi + h) - os.point(mu, nu, psi - h)) / (2 * h);
    EXPECT_LT((f.e_mu() - e_mu).norm(), 1e-7);
    EXPECT_LT((f.e_nu() - e_nu).norm(), 1e-7);
    EXPECT_LT((f.e_psi() - e_psi).norm(), 1e-6);
  }
}

TEST(Geometry, GradientMatchesDifferences) {
  for (const auto& fam : all_families()) {
    Vec3 p = to_cartesian(fam, {0.7, 1.9, 0.08});
    const double h = 1e-5;
    Vec3 g;
    for (int d = 0; d < 3; ++d) {
      Vec3 e = Vec3::Zero();
      e[d] = h;
      g[d] = (psi_value(fam, p + e) - psi_value(fam, p - e)) / (2 * h);
    }
    EXPECT_LT((grad_psi(fam, p) - g).norm(), 1e-8) << fam.describe();
  }
}

TEST(Geometry, PhasePerturbedLevelSetBreaksUpNearTheAxis) {
  SurfaceFamily fam = surface::PhasePerturbed{1.0, 0.1, 4};
  // Psi below eps/2 leaves toroidal angles where the level set is empty.
  EXPECT_THROW(to_cartesian(fam, {kTwoPi / 16, 0.0, 0.03}), InversionError);
  ValidityReport bad = validity_scan(fam, 0.01, 0.04, 400);
  EXPECT_TRUE(bad.violation);
  EXPECT_GT(bad.inversion_failures, 0);
  ValidityReport good = validity_scan(fam, 0.08, 0.12, 400);
  EXPECT_FALSE(good.violation) << good.reason;
  EXPECT_EQ(good.inversion_failures, 0);
  EXPECT_GT(good.min_jacobian, kJacobianMin);
}

TEST(Geometry, InvalidParametersRejected) {
  EXPECT_THROW(SurfaceFamily(surface::Axisym{0.0}), std::invalid_argument);
  EXPECT_THROW(SurfaceFamily(surface::DisplacedEllipse{1.0, -1.0, 0.1, 1}), std::invalid_argument);
  EXPECT_THROW(SurfaceFamily(surface::PhasePerturbed{1.0, 0.1, 0}), std::invalid_argument);
  SurfaceFamily fam = surface::Axisym{1.0};
  EXPECT_THROW(to_cartesian(fam, {0.0, 0.0, -0.1}), InversionError);
  EXPECT_THROW(to_cartesian(fam, {0.0, kTwoPi / 2, 0.6}), InversionError);  // crosses the axis
  EXPECT_THROW(coordinate_frame(fam, Vec3(0.0, 0.0, 0.1)), DomainError);
}

TEST(Geometry, SamplesLieInTheShell) {
  for (const auto& fam : all_families()) {
    auto pts = sample_interior(fam, 0.06, 0.1, 200);
    ASSERT_EQ(pts.size(), 200u);
    for (const auto& p : pts) {
      double psi = psi_value(fam, p);
      EXPECT_GE(psi, 0.06 - 1e-12);
      EXPECT_LE(psi, 0.1 + 1e-12);
    }
  }
}

TEST(Geometry, SobolPointsInUnitCube) {
  auto s = sobol_unit_cube(64);
  ASSERT_EQ(s.size(), 64u);
  for (const auto& q : s)
    for (double v : q) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  EXPECT_NE(s[0][0], s[1][0]);
}

TEST(Geometry, WrapAngle) {
  EXPECT_DOUBLE_EQ(wrap_angle(-0.5), kTwoPi - 0.5);
  EXPECT_DOUBLE_EQ(wrap_angle(0.25), 0.25);
  EXPECT_NEAR(wrap_angle(3 * kTwoPi + 1.0), 1.0, 1e-14);
  EXPECT_GE(wrap_angle(-1e-18), 0.0);
  EXPECT_LT(wrap_angle(-1e-18), kTwoPi);
}
