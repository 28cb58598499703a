#include <gtest/gtest.h>

#include <random>

#include "facto/geometry.hpp"
#include "oracles.hpp"

using namespace facto;

namespace {

Rotation axis_angle(const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Transform random_transform(std::mt19937& rng, double max_angle) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), a(0.0, max_angle);
  Eigen::Vector3d axis(u(rng), u(rng), u(rng));
  return {axis_angle(axis, a(rng)), Eigen::Vector3d(u(rng), u(rng), u(rng)) * 2.0};
}

}  // namespace

TEST(Geometry, RotZyx) {
  EXPECT_LE((rot_zyx(0.0, 0.0, 0.0) - Rotation::Identity()).norm(), 0.0);
  EXPECT_LE((rot_zyx(M_PI / 2, 0.0, 0.0) * Eigen::Vector3d::UnitX() - Eigen::Vector3d::UnitY()).norm(), 1e-12);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    const double z = u(rng), y = u(rng), x = u(rng);
    const Rotation r = rot_zyx(z, y, x);
    EXPECT_LE((r.transpose() * r - Rotation::Identity()).norm(), 1e-12);
    // Independent composition of elemental rotations.
    const Rotation ref = axis_angle(Eigen::Vector3d::UnitZ(), z) * axis_angle(Eigen::Vector3d::UnitY(), y) *
                         axis_angle(Eigen::Vector3d::UnitX(), x);
    EXPECT_LE((r - ref).norm(), 1e-12);
  }
}

TEST(Geometry, ZyxExtractionRoundTrip) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0), y(-M_PI / 2 + 0.05, M_PI / 2 - 0.05);
  for (int i = 0; i < 100; ++i) {
    const Rotation r = rot_zyx(u(rng), y(rng), u(rng));
    const Eigen::Vector3d a = zyx_angles(r);
    EXPECT_LE((rot_zyx(a[0], a[1], a[2]) - r).norm(), 1e-9);
  }
  EXPECT_THROW(zyx_angles(rot_zyx(0.3, M_PI / 2, 0.1)), DegenerateOrientationError);
}

TEST(Geometry, Se3LogExamples) {
  EXPECT_LE(se3_log(Transform::identity()).norm(), 0.0);
  const Eigen::Vector3d p(0.3, -1.0, 2.0);
  const Twist xi = se3_log(Transform::from_translation(p));
  EXPECT_LE(xi.head<3>().norm(), 0.0);
  EXPECT_LE((xi.tail<3>() - p).norm(), 1e-15);
}

TEST(Geometry, Se3RoundTrip) {
  std::mt19937 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Transform t = random_transform(rng, M_PI - 0.1);
    const Transform back = se3_exp(se3_log(t));
    EXPECT_LE((back.rotation - t.rotation).norm() + (back.translation - t.translation).norm(), 1e-9);
  }
  // Tiny rotations go through the series branches.
  const Transform tiny{axis_angle(Eigen::Vector3d(1, 2, 3), 1e-9), Eigen::Vector3d(1, 0, 0)};
  const Transform back = se3_exp(se3_log(tiny));
  EXPECT_LE((back.rotation - tiny.rotation).norm() + (back.translation - tiny.translation).norm(), 1e-12);
}

TEST(Geometry, So3LogExpInverse) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0), a(0.0, M_PI - 0.1);
  for (int i = 0; i < 100; ++i) {
    Eigen::Vector3d w(u(rng), u(rng), u(rng));
    w = w.normalized() * a(rng);
    EXPECT_LE((so3_log<double>(so3_exp<double>(w)) - w).norm(), 1e-9);
  }
  EXPECT_THROW(so3_log<double>(axis_angle(Eigen::Vector3d::UnitX(), M_PI)), BranchError);
}

TEST(Geometry, GeometricMean) {
  std::mt19937 rng(7);
  const Rotation r = random_transform(rng, 2.0).rotation;
  EXPECT_LE((so3_geometric_mean<double>(r, r) - r).norm(), 1e-12);
  const Rotation half = so3_geometric_mean<double>(Rotation::Identity(), axis_angle(Eigen::Vector3d::UnitZ(), 1.2));
  EXPECT_LE((half - axis_angle(Eigen::Vector3d::UnitZ(), 0.6)).norm(), 1e-12);
  for (int i = 0; i < 50; ++i) {
    const Rotation left = random_transform(rng, 3.0).rotation;
    const Rotation right = left * random_transform(rng, M_PI - 0.2).rotation;
    const Rotation c = so3_geometric_mean<double>(left, right);
    EXPECT_NEAR(so3_angle(c.transpose() * left), so3_angle(c.transpose() * right), 1e-9);
  }
  EXPECT_THROW(so3_geometric_mean<double>(Rotation::Identity(), axis_angle(Eigen::Vector3d::UnitY(), M_PI)),
               BranchError);
}

TEST(Geometry, ComposedLogIsInvertible) {
  std::mt19937 rng(8);
  for (int i = 0; i < 20; ++i) {
    const Transform a = random_transform(rng, 1.2), b = random_transform(rng, 1.2);
    const Transform ab = a * b;
    const Twist xi = se3_log(ab);
    EXPECT_TRUE(xi.allFinite());
    const Transform back = se3_exp(xi);
    EXPECT_LE((back.rotation - ab.rotation).norm() + (back.translation - ab.translation).norm(), 1e-9);
  }
}

TEST(Geometry, PostureRoundTrip) {
  Eigen::Matrix<double, 6, 1> x;
  x << 0.4, -0.3, 1.1, 0.5, -0.2, 0.9;
  EXPECT_LE((posture_of(transform_from_posture(x)) - x).norm(), 1e-12);
}
