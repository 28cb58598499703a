#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "facto/geometry.hpp"

namespace facto {

enum class JointType { Revolute, Prismatic };

struct Joint {
  JointType type = JointType::Revolute;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();  // in the joint frame, unit length
  Transform origin;                                 // from the parent link frame
  double lower = -M_PI;
  double upper = M_PI;
  double velocity_limit = 1.0;  // rad/s or m/s
  double effort_limit = 1.0;    // symmetric, N*m or N
};

struct Link {
  double mass = 0.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();  // about the com, link frame
};

struct CollisionSphere {
  int link = 0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // link frame
  double radius = 0.05;
};

/// Serial chain: link i is moved by joint i. The end-effector frame is the
/// last link frame composed with `tool`.
struct RobotModel {
  std::string name;
  Transform base;
  Transform tool;
  std::vector<Joint> joints;
  std::vector<Link> links;
  std::vector<CollisionSphere> spheres;

  int dof() const { return static_cast<int>(joints.size()); }
  Eigen::VectorXd lower_limits() const;
  Eigen::VectorXd upper_limits() const;
  Eigen::VectorXd velocity_limits() const;
  Eigen::VectorXd effort_limits() const;

  /// Throws DomainError on any violated model invariant.
  void validate() const;
};

/// World-frame sphere centers of one robot at one configuration.
struct SphereState {
  Eigen::Matrix3Xd centers;
  Eigen::VectorXd radii;
  std::vector<int> links;

  int size() const { return static_cast<int>(radii.size()); }
};

/// World transform of every link frame.
std::vector<Transform> forward_kinematics(const RobotModel& robot, const Eigen::VectorXd& q);

SphereState sphere_positions(const RobotModel& robot, const Eigen::VectorXd& q);
SphereState sphere_positions(const RobotModel& robot, const std::vector<Transform>& frames);

/// Linear-velocity Jacobian (3 x M) of a point fixed in `link`.
Eigen::Matrix3Xd point_jacobian(const RobotModel& robot, const Eigen::VectorXd& q, int link,
                                const Eigen::Vector3d& local_point);
Eigen::Matrix3Xd point_jacobian(const RobotModel& robot, const std::vector<Transform>& frames,
                                int link, const Eigen::Vector3d& local_point);

/// d(J(q) qdot)/dq at fixed qdot for the same point: how the point's
/// velocity changes with the configuration.
Eigen::Matrix3Xd point_velocity_jacobian(const RobotModel& robot, const std::vector<Transform>& frames,
                                         int link, const Eigen::Vector3d& local_point,
                                         const Eigen::VectorXd& qd);

Transform ee_pose(const RobotModel& robot, const Eigen::VectorXd& q);
Transform ee_pose(const RobotModel& robot, const std::vector<Transform>& frames);

/// Geometric Jacobian (6 x M): rows (omega; v) in the world frame, where v is
/// the velocity of the end-effector origin.
Eigen::Matrix<double, 6, Eigen::Dynamic> ee_jacobian(const RobotModel& robot,
                                                     const Eigen::VectorXd& q);
Eigen::Matrix<double, 6, Eigen::Dynamic> ee_jacobian(const RobotModel& robot,
                                                     const std::vector<Transform>& frames);

inline const Eigen::Vector3d kDefaultGravity{0.0, 0.0, -9.81};

/// Recursive Newton-Euler: u = M(q) qdd + C(q, qd) qd + g(q).
Eigen::VectorXd inverse_dynamics(const RobotModel& robot, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd, const Eigen::VectorXd& qdd,
                                 const Eigen::Vector3d& gravity = kDefaultGravity);

Eigen::VectorXd gravity_torques(const RobotModel& robot, const Eigen::VectorXd& q,
                                const Eigen::Vector3d& gravity = kDefaultGravity);

/// Joint-space inertia assembled column by column from inverse_dynamics.
Eigen::MatrixXd mass_matrix(const RobotModel& robot, const Eigen::VectorXd& q);

}  // namespace facto
