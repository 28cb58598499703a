#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "facto/optimizer.hpp"
#include "facto/robot.hpp"

namespace facto::testing {

/// Planar arm in the xy-plane: revolute z joints, links along local x.
/// Each link carries `spheres_per_link` collision spheres ending at its tip.
inline RobotModel planar_arm(int links, double link_length = 1.0, double mass = 1.0,
                             int spheres_per_link = 4, double sphere_radius = 0.08,
                             const Transform& base = Transform::identity()) {
  RobotModel robot;
  robot.name = "planar" + std::to_string(links);
  robot.base = base;
  for (int i = 0; i < links; ++i) {
    Joint j;
    j.type = JointType::Revolute;
    j.axis = Eigen::Vector3d::UnitZ();
    j.origin = Transform::from_translation(Eigen::Vector3d(i == 0 ? 0.0 : link_length, 0.0, 0.0));
    j.lower = -M_PI;
    j.upper = M_PI;
    j.velocity_limit = 2.0;
    j.effort_limit = 200.0;
    robot.joints.push_back(j);

    Link l;
    l.mass = mass;
    l.com = Eigen::Vector3d(0.5 * link_length, 0.0, 0.0);
    const double rod = mass * link_length * link_length / 12.0;
    l.inertia = Eigen::Vector3d(1e-4 * mass, rod, rod).asDiagonal();
    robot.links.push_back(l);

    for (int s = 1; s <= spheres_per_link; ++s) {
      robot.spheres.push_back(
          {i, Eigen::Vector3d(link_length * s / spheres_per_link, 0.0, 0.0), sphere_radius});
    }
  }
  robot.tool = Transform::from_translation(Eigen::Vector3d(link_length, 0.0, 0.0));
  return robot;
}

/// Spatial 5-joint chain with skewed axes, rotated origins and one prismatic
/// joint; exercises the general kinematics paths.
inline RobotModel spatial_arm() {
  RobotModel robot;
  robot.name = "spatial5";
  robot.base = {rot_zyx(0.2, -0.1, 0.3), Eigen::Vector3d(0.1, -0.2, 0.3)};
  const Eigen::Vector3d axes[] = {{0, 0, 1}, {0, 1, 0}, {1, 0, 0}, {0.6, 0.8, 0}, {0, 0, 1}};
  const JointType types[] = {JointType::Revolute, JointType::Revolute, JointType::Prismatic,
                             JointType::Revolute, JointType::Revolute};
  for (int i = 0; i < 5; ++i) {
    Joint j;
    j.type = types[i];
    j.axis = axes[i].normalized();
    j.origin = {rot_zyx(0.3 * i, 0.2, -0.1 * i), Eigen::Vector3d(0.1, 0.05 * i, i == 0 ? 0.0 : 0.4)};
    j.lower = j.type == JointType::Prismatic ? -0.5 : -M_PI;
    j.upper = j.type == JointType::Prismatic ? 0.5 : M_PI;
    j.velocity_limit = 2.0;
    j.effort_limit = 300.0;
    robot.joints.push_back(j);
    Link l;
    l.mass = 1.0 + 0.3 * i;
    l.com = Eigen::Vector3d(0.05, -0.02 * i, 0.2);
    Eigen::Matrix3d in;
    in << 0.02, 0.001, 0.0, 0.001, 0.03, 0.002, 0.0, 0.002, 0.01;
    l.inertia = in * (1.0 + 0.1 * i);
    robot.links.push_back(l);
    robot.spheres.push_back({i, Eigen::Vector3d(0.0, 0.0, 0.2), 0.06});
    robot.spheres.push_back({i, Eigen::Vector3d(0.05, 0.02, 0.35), 0.05});
  }
  robot.tool = {rot_zyx(0.1, 0.2, 0.3), Eigen::Vector3d(0.0, 0.0, 0.15)};
  return robot;
}

inline RobotSpec make_spec(const RobotModel& model, const Eigen::VectorXd& start,
                           const Eigen::VectorXd& goal) {
  RobotSpec spec;
  spec.model = model;
  spec.start = start;
  spec.goal = goal;
  return spec;
}

}  // namespace facto::testing
