#include "facto/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace facto {

namespace {

// |cos(pitch)| below this is treated as gimbal lock.
constexpr double kGimbalTolerance = 1e-6;

}  // namespace

double so3_angle(const Rotation& r) {
  const Eigen::Vector3d half_vee = vee<double>(r - r.transpose()) / 2.0;
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::atan2(half_vee.norm(), c);
}

Twist se3_log(const Transform& t) { return se3_log<double>(t.rotation, t.translation); }

Transform se3_exp(const Twist& xi) {
  const Eigen::Vector3d w = xi.head<3>();
  return {so3_exp<double>(w), so3_left_jacobian<double>(w) * xi.tail<3>()};
}

Eigen::Vector3d zyx_angles(const Rotation& r) {
  const double cy = std::hypot(r(0, 0), r(1, 0));
  if (cy < kGimbalTolerance) {
    throw DegenerateOrientationError("ZYX Euler angles undefined at pitch = +-pi/2");
  }
  return {std::atan2(r(1, 0), r(0, 0)), std::atan2(-r(2, 0), cy), std::atan2(r(2, 1), r(2, 2))};
}

Eigen::Matrix<double, 6, 1> posture_of(const Transform& t) {
  Eigen::Matrix<double, 6, 1> x;
  x.head<3>() = zyx_angles(t.rotation);
  x.tail<3>() = t.translation;
  return x;
}

Transform transform_from_posture(const Eigen::Matrix<double, 6, 1>& x) {
  return {rot_zyx(x[0], x[1], x[2]), x.tail<3>()};
}

}  // namespace facto
