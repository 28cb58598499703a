#include "facto/robot.hpp"

#include <cmath>

#include "facto/error.hpp"

namespace facto {

namespace {

void check_dof(const RobotModel& robot, const Eigen::VectorXd& q, const char* what) {
  if (q.size() != robot.dof()) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(robot.dof()) +
                         " joint values, got " + std::to_string(q.size()));
  }
}

Transform joint_motion(const Joint& joint, double value) {
  if (joint.type == JointType::Revolute) {
    const Eigen::Vector3d w = joint.axis * value;
    return {so3_exp<double>(w), Eigen::Vector3d::Zero()};
  }
  return Transform::from_translation(joint.axis * value);
}

}  // namespace

Eigen::VectorXd RobotModel::lower_limits() const {
  Eigen::VectorXd v(dof());
  for (int j = 0; j < dof(); ++j) v[j] = joints[j].lower;
  return v;
}

Eigen::VectorXd RobotModel::upper_limits() const {
  Eigen::VectorXd v(dof());
  for (int j = 0; j < dof(); ++j) v[j] = joints[j].upper;
  return v;
}

Eigen::VectorXd RobotModel::velocity_limits() const {
  Eigen::VectorXd v(dof());
  for (int j = 0; j < dof(); ++j) v[j] = joints[j].velocity_limit;
  return v;
}

Eigen::VectorXd RobotModel::effort_limits() const {
  Eigen::VectorXd v(dof());
  for (int j = 0; j < dof(); ++j) v[j] = joints[j].effort_limit;
  return v;
}

void RobotModel::validate() const {
  const std::string who = name.empty() ? "robot" : "robot '" + name + "'";
  if (joints.empty()) throw DomainError(who + ": needs at least one joint");
  if (links.size() != joints.size()) throw DomainError(who + ": one link per joint required");
  for (std::size_t j = 0; j < joints.size(); ++j) {
    const Joint& joint = joints[j];
    const std::string at = who + " joint " + std::to_string(j);
    if (std::abs(joint.axis.norm() - 1.0) > 1e-9) throw DomainError(at + ": axis must be unit length");
    if (!(joint.lower < joint.upper)) throw DomainError(at + ": lower limit must be below upper");
    if (!(joint.velocity_limit > 0.0)) throw DomainError(at + ": velocity limit must be positive");
    if (!(joint.effort_limit > 0.0)) throw DomainError(at + ": effort limit must be positive");
  }
  for (std::size_t j = 0; j < links.size(); ++j) {
    if (links[j].mass < 0.0) throw DomainError(who + " link " + std::to_string(j) + ": negative mass");
  }
  for (std::size_t i = 0; i < spheres.size(); ++i) {
    const CollisionSphere& s = spheres[i];
    const std::string at = who + " sphere " + std::to_string(i);
    if (!(s.radius > 0.0)) throw DomainError(at + ": radius must be positive");
    if (s.link < 0 || s.link >= dof()) throw DomainError(at + ": invalid link index");
  }
}

std::vector<Transform> forward_kinematics(const RobotModel& robot, const Eigen::VectorXd& q) {
  check_dof(robot, q, "forward_kinematics");
  std::vector<Transform> frames;
  frames.reserve(robot.dof());
  Transform current = robot.base;
  for (int j = 0; j < robot.dof(); ++j) {
    current = current * robot.joints[j].origin * joint_motion(robot.joints[j], q[j]);
    frames.push_back(current);
  }
  return frames;
}

SphereState sphere_positions(const RobotModel& robot, const std::vector<Transform>& frames) {
  const auto n = static_cast<Eigen::Index>(robot.spheres.size());
  SphereState state;
  state.centers.resize(3, n);
  state.radii.resize(n);
  state.links.resize(robot.spheres.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const CollisionSphere& s = robot.spheres[i];
    state.centers.col(i) = frames[s.link] * s.center;
    state.radii[i] = s.radius;
    state.links[i] = s.link;
  }
  return state;
}

SphereState sphere_positions(const RobotModel& robot, const Eigen::VectorXd& q) {
  return sphere_positions(robot, forward_kinematics(robot, q));
}

Eigen::Matrix3Xd point_jacobian(const RobotModel& robot, const std::vector<Transform>& frames,
                                int link, const Eigen::Vector3d& local_point) {
  if (link < 0 || link >= robot.dof()) throw DimensionError("point_jacobian: invalid link index");
  const Eigen::Vector3d x = frames[link] * local_point;
  Eigen::Matrix3Xd jac = Eigen::Matrix3Xd::Zero(3, robot.dof());
  for (int j = 0; j <= link; ++j) {
    const Eigen::Vector3d axis = frames[j].rotation * robot.joints[j].axis;
    if (robot.joints[j].type == JointType::Revolute) {
      jac.col(j) = axis.cross(x - frames[j].translation);
    } else {
      jac.col(j) = axis;
    }
  }
  return jac;
}

Eigen::Matrix3Xd point_jacobian(const RobotModel& robot, const Eigen::VectorXd& q, int link,
                                const Eigen::Vector3d& local_point) {
  return point_jacobian(robot, forward_kinematics(robot, q), link, local_point);
}

Eigen::Matrix3Xd point_velocity_jacobian(const RobotModel& robot, const std::vector<Transform>& frames,
                                         int link, const Eigen::Vector3d& local_point,
                                         const Eigen::VectorXd& qd) {
  if (link < 0 || link >= robot.dof()) throw DimensionError("point_velocity_jacobian: invalid link index");
  if (qd.size() != robot.dof()) throw DimensionError("point_velocity_jacobian: qd size mismatch");
  const Eigen::Vector3d x = frames[link] * local_point;
  std::vector<Eigen::Vector3d> axes(link + 1);
  for (int j = 0; j <= link; ++j) axes[j] = frames[j].rotation * robot.joints[j].axis;
  Eigen::Matrix3Xd out = Eigen::Matrix3Xd::Zero(3, robot.dof());
  // Moving joint k rotates (or shifts) everything outboard of it: the point
  // and, for j > k, the axis and origin of joint j.
  for (int k = 0; k <= link; ++k) {
    const Eigen::Vector3d& ak = axes[k];
    const bool k_rev = robot.joints[k].type == JointType::Revolute;
    const Eigen::Vector3d dx = k_rev ? Eigen::Vector3d(ak.cross(x - frames[k].translation)) : ak;
    Eigen::Vector3d col = Eigen::Vector3d::Zero();
    for (int j = 0; j <= link; ++j) {
      if (qd[j] == 0.0) continue;
      const Eigen::Vector3d& aj = axes[j];
      const bool j_rev = robot.joints[j].type == JointType::Revolute;
      if (j <= k) {
        if (j_rev) col += qd[j] * aj.cross(dx);
      } else if (k_rev) {
        col += qd[j] * (j_rev ? Eigen::Vector3d(ak.cross(aj.cross(x - frames[j].translation)))
                              : Eigen::Vector3d(ak.cross(aj)));
      }
    }
    out.col(k) = col;
  }
  return out;
}

Transform ee_pose(const RobotModel& robot, const std::vector<Transform>& frames) {
  return frames.back() * robot.tool;
}

Transform ee_pose(const RobotModel& robot, const Eigen::VectorXd& q) {
  return ee_pose(robot, forward_kinematics(robot, q));
}

Eigen::Matrix<double, 6, Eigen::Dynamic> ee_jacobian(const RobotModel& robot,
                                                     const std::vector<Transform>& frames) {
  const Eigen::Vector3d x = ee_pose(robot, frames).translation;
  Eigen::Matrix<double, 6, Eigen::Dynamic> jac(6, robot.dof());
  for (int j = 0; j < robot.dof(); ++j) {
    const Eigen::Vector3d axis = frames[j].rotation * robot.joints[j].axis;
    if (robot.joints[j].type == JointType::Revolute) {
      jac.col(j) << axis, axis.cross(x - frames[j].translation);
    } else {
      jac.col(j) << Eigen::Vector3d::Zero(), axis;
    }
  }
  return jac;
}

Eigen::Matrix<double, 6, Eigen::Dynamic> ee_jacobian(const RobotModel& robot,
                                                     const Eigen::VectorXd& q) {
  return ee_jacobian(robot, forward_kinematics(robot, q));
}

// World-frame formulation. Gravity enters as a base acceleration of -g;
// moments are taken about each joint frame origin.
Eigen::VectorXd inverse_dynamics(const RobotModel& robot, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd, const Eigen::VectorXd& qdd,
                                 const Eigen::Vector3d& gravity) {
  check_dof(robot, q, "inverse_dynamics");
  check_dof(robot, qd, "inverse_dynamics");
  check_dof(robot, qdd, "inverse_dynamics");
  const int n = robot.dof();
  const std::vector<Transform> frames = forward_kinematics(robot, q);

  std::vector<Eigen::Vector3d> axis(n), origin(n), com(n), force(n), moment(n);
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d alpha = Eigen::Vector3d::Zero();
  Eigen::Vector3d accel = -gravity;
  Eigen::Vector3d prev_origin = robot.base.translation;

  for (int i = 0; i < n; ++i) {
    const Joint& joint = robot.joints[i];
    const Link& link = robot.links[i];
    axis[i] = frames[i].rotation * joint.axis;
    origin[i] = frames[i].translation;
    const Eigen::Vector3d r = origin[i] - prev_origin;

    Eigen::Vector3d next_accel = accel + alpha.cross(r) + omega.cross(omega.cross(r));
    if (joint.type == JointType::Revolute) {
      alpha = alpha + axis[i] * qdd[i] + omega.cross(axis[i] * qd[i]);
      omega = omega + axis[i] * qd[i];
    } else {
      next_accel += 2.0 * omega.cross(axis[i] * qd[i]) + axis[i] * qdd[i];
    }
    accel = next_accel;

    com[i] = frames[i].rotation * link.com;
    const Eigen::Vector3d com_accel = accel + alpha.cross(com[i]) + omega.cross(omega.cross(com[i]));
    const Eigen::Matrix3d inertia =
        frames[i].rotation * link.inertia * frames[i].rotation.transpose();
    force[i] = link.mass * com_accel;
    moment[i] = inertia * alpha + omega.cross(inertia * omega);
    prev_origin = origin[i];
  }

  Eigen::VectorXd tau(n);
  Eigen::Vector3d f_child = Eigen::Vector3d::Zero();
  Eigen::Vector3d n_child = Eigen::Vector3d::Zero();
  for (int i = n - 1; i >= 0; --i) {
    const Eigen::Vector3d f = force[i] + f_child;
    Eigen::Vector3d m = moment[i] + n_child + com[i].cross(force[i]);
    if (i + 1 < n) m += (origin[i + 1] - origin[i]).cross(f_child);
    tau[i] = robot.joints[i].type == JointType::Revolute ? axis[i].dot(m) : axis[i].dot(f);
    f_child = f;
    n_child = m;
  }
  return tau;
}

Eigen::VectorXd gravity_torques(const RobotModel& robot, const Eigen::VectorXd& q,
                                const Eigen::Vector3d& gravity) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(robot.dof());
  return inverse_dynamics(robot, q, zero, zero, gravity);
}

Eigen::MatrixXd mass_matrix(const RobotModel& robot, const Eigen::VectorXd& q) {
  const int n = robot.dof();
  Eigen::MatrixXd m(n, n);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    m.col(j) = inverse_dynamics(robot, q, zero, Eigen::VectorXd::Unit(n, j), Eigen::Vector3d::Zero());
  }
  return m;
}

}  // namespace facto
