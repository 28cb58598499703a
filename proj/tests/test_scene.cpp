#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "facto/error.hpp"
#include "facto/scene.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace facto;
using facto::testing::planar_arm;

TEST(Scene, SphereDistanceExamples) {
  const SpherePrimitive s{Eigen::Vector3d::Zero(), 1.0};
  const DistanceResult r = primitive_distance(s, Eigen::Vector3d(2, 0, 0));
  EXPECT_DOUBLE_EQ(r.distance, 1.0);
  EXPECT_LE((r.gradient - Eigen::Vector3d::UnitX()).norm(), 0.0);
  EXPECT_DOUBLE_EQ(primitive_distance(s, Eigen::Vector3d::Zero()).distance, -1.0);
}

TEST(Scene, PrimitiveGradientsMatchFiniteDifferences) {
  const std::vector<Primitive> prims = {
      SpherePrimitive{Eigen::Vector3d(0.1, 0.2, -0.3), 0.4},
      BoxPrimitive{Eigen::Vector3d(-0.5, -0.2, -0.1), Eigen::Vector3d(0.3, 0.6, 0.2)},
      CapsulePrimitive{Eigen::Vector3d(-0.3, 0, 0), Eigen::Vector3d(0.4, 0.5, 0.1), 0.2},
      HalfspacePrimitive{Eigen::Vector3d(0, 0.6, 0.8), 0.1}};
  std::mt19937 rng(3);
  for (const Primitive& p : prims) {
    for (int i = 0; i < 40; ++i) {
      const Eigen::Vector3d x = oracle::random_vector(3, rng, 1.5);
      const DistanceResult r = primitive_distance(p, x);
      const Eigen::MatrixXd fd = oracle::fd_jacobian(
          [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
            return Eigen::VectorXd::Constant(1, primitive_distance(p, y).distance);
          },
          x);
      // Skip the measure-zero kinks (box medial axes) where the FD straddles branches.
      if (std::abs(fd.norm() - 1.0) > 1e-4) continue;
      EXPECT_LE((fd.transpose() - r.gradient).norm(), 1e-5);
    }
  }
}

TEST(Scene, GridMatchesAnalyticWithinResolution) {
  Scene scene;
  scene.primitives.push_back(SpherePrimitive{Eigen::Vector3d(0.1, 0.0, 0.05), 0.3});
  const double h = 0.02;
  scene.grid = grid_from_primitives(scene, Eigen::Vector3d::Constant(-0.6), Eigen::Vector3d::Constant(0.6), h);
  std::mt19937 rng(8);
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector3d x = oracle::random_vector(3, rng, 0.55);
    ASSERT_TRUE(scene.grid->contains(x));
    const double exact = primitive_distance(scene.primitives[0], x).distance;
    EXPECT_LE(std::abs(signed_distance(scene, x).distance - exact), h);
  }
  // Outside the grid the primitives answer.
  const Eigen::Vector3d far(2.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(signed_distance(scene, far).distance, primitive_distance(scene.primitives[0], far).distance);
}

TEST(Scene, GridNodesAreExact) {
  std::vector<double> v(2 * 2 * 2);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const GridSDF g(Eigen::Vector3d::Zero(), 0.5, {2, 2, 2}, v);
  EXPECT_DOUBLE_EQ(g.query(Eigen::Vector3d(0.5, 0.5, 0.5)).distance, 7.0);
  // Value is i + 2j + 4k, so the interpolant is linear with gradient (2, 4, 8).
  const DistanceResult mid = g.query(Eigen::Vector3d(0.25, 0.1, 0.4));
  EXPECT_NEAR(mid.distance, 0.5 + 2 * 0.2 + 4 * 0.8, 1e-12);
  EXPECT_LE((mid.gradient - Eigen::Vector3d(2, 4, 8)).norm(), 1e-12);
  EXPECT_THROW(g.query(Eigen::Vector3d(0.6, 0, 0)), OutOfBoundsError);
}

TEST(Scene, GridErrors) {
  Scene empty;
  EXPECT_THROW(grid_from_primitives(empty, Eigen::Vector3d::Zero(), Eigen::Vector3d::Constant(10.0), 1e-3),
               CapacityError);
  const GridSDF g = grid_from_primitives(empty, Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones(), 0.25);
  for (double v : g.values()) EXPECT_EQ(v, kEmptyGridValue);
  EXPECT_THROW(GridSDF(Eigen::Vector3d::Zero(), 0.1, {2, 2, 2}, std::vector<double>(7)), DimensionError);
  Scene only_grid;
  only_grid.grid = g;
  EXPECT_THROW(signed_distance(only_grid, Eigen::Vector3d::Constant(5.0)), OutOfBoundsError);
  EXPECT_TRUE(std::isinf(signed_distance(empty, Eigen::Vector3d::Zero()).distance));
}

TEST(Scene, GridFileRoundTrip) {
  Scene scene;
  scene.primitives.push_back(BoxPrimitive{Eigen::Vector3d(-0.2, -0.2, -0.2), Eigen::Vector3d(0.1, 0.2, 0.3)});
  const GridSDF g = grid_from_primitives(scene, Eigen::Vector3d::Constant(-0.5), Eigen::Vector3d::Constant(0.5), 0.1);
  const std::string path = (std::filesystem::temp_directory_path() / "facto_grid_roundtrip.sdf").string();
  write_grid(g, path);
  const GridSDF back = read_grid(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.dims(), g.dims());
  EXPECT_EQ(back.resolution(), g.resolution());
  EXPECT_LE((back.origin() - g.origin()).norm(), 0.0);
  for (std::size_t i = 0; i < g.values().size(); ++i) {
    EXPECT_EQ(back.values()[i], static_cast<double>(static_cast<float>(g.values()[i])));
  }
  EXPECT_THROW(read_grid("/nonexistent/grid.sdf"), DomainError);
}

TEST(Scene, CollisionCostExamples) {
  CollisionParams p;
  p.epsilon = 0.1;
  p.p = 2;
  // 1/(2 eps) (eps - d)^2 at d = 0.05.
  EXPECT_NEAR(collision_cost(0.05, p).cost, 0.0125, 1e-15);
  EXPECT_NEAR(collision_cost(0.05, p).derivative, -0.5, 1e-15);
  EXPECT_EQ(collision_cost(0.2, p).cost, 0.0);
  EXPECT_NEAR(collision_cost(-0.3, p).cost, 0.4, 1e-15);
  EXPECT_EQ(collision_cost(-0.3, p).derivative, -1.0);
  for (int order : {1, 2, 3, 5}) {
    p.p = order;
    // Cost and slope are continuous at d = eps; the inner branch meets the
    // linear branch at d = 0 in slope.
    EXPECT_NEAR(collision_cost(p.epsilon - 1e-12, p).cost, 0.0, 1e-10);
    EXPECT_NEAR(collision_cost(1e-13, p).derivative, -1.0, 1e-9);
    const double h = 1e-7, d = 0.037;
    const double fd = (collision_cost(d + h, p).cost - collision_cost(d - h, p).cost) / (2 * h);
    EXPECT_NEAR(collision_cost(d, p).derivative, fd, 1e-6);
  }
  p.p = 0;
  EXPECT_THROW(p.validate(), DomainError);
}

TEST(Scene, AcmRules) {
  // planar_arm gives spheres on every link; adjacent links are exempt.
  const std::vector<RobotModel> robots = {planar_arm(3), planar_arm(2)};
  const AllowedCollisionMatrix acm = build_acm(robots);
  const int n0 = static_cast<int>(robots[0].spheres.size());
  EXPECT_EQ(acm.size(), n0 + static_cast<int>(robots[1].spheres.size()));
  for (int a = 0; a < acm.size(); ++a) {
    EXPECT_FALSE(acm.checked(a, a));
    for (int b = 0; b < acm.size(); ++b) {
      EXPECT_EQ(acm.checked(a, b), acm.checked(b, a));
      const auto [ra, sa] = acm.locate(a);
      const auto [rb, sb] = acm.locate(b);
      if (a == b) continue;
      if (ra != rb) {
        EXPECT_TRUE(acm.checked(a, b));
      } else {
        const int la = robots[ra].spheres[sa].link, lb = robots[rb].spheres[sb].link;
        EXPECT_EQ(acm.checked(a, b), std::abs(la - lb) > 1);
      }
    }
  }
  const AllowedCollisionMatrix off = build_acm(robots, {{0, n0, false}});
  EXPECT_FALSE(off.checked(n0, 0));
  EXPECT_THROW(build_acm(robots, {{0, 99, true}}), DimensionError);
}

TEST(Scene, SelfDistanceMatchesBruteForce) {
  const std::vector<RobotModel> robots = {planar_arm(3), planar_arm(3, 1.0, 1.0, 4, 0.08,
                                                                     Transform::from_translation({0.5, 0.4, 0}))};
  const AllowedCollisionMatrix acm = build_acm(robots);
  std::mt19937 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<SphereState> states;
    for (const RobotModel& r : robots) states.push_back(sphere_positions(r, oracle::random_vector(3, rng, 2.0)));
    std::vector<Eigen::Vector3d> c;
    std::vector<double> rad;
    for (const SphereState& s : states) {
      for (int j = 0; j < s.size(); ++j) {
        c.push_back(s.centers.col(j));
        rad.push_back(s.radii[j]);
      }
    }
    for (int a = 0; a < acm.size(); ++a) {
      double best = std::numeric_limits<double>::infinity();
      for (int b = 0; b < acm.size(); ++b) {
        if (b != a && acm.checked(a, b)) best = std::min(best, (c[a] - c[b]).norm() - rad[a] - rad[b]);
      }
      EXPECT_NEAR(self_distance(states, acm, a).distance, best, 1e-14);
    }
  }
}
