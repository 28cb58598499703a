#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "facto/error.hpp"

namespace facto {

using Rotation = Eigen::Matrix3d;
/// (omega; v): angular part first.
using Twist = Eigen::Matrix<double, 6, 1>;

/// Rigid transform x -> R x + p.
struct Transform {
  Rotation rotation = Rotation::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Transform identity() { return {}; }
  static Transform from_translation(const Eigen::Vector3d& p) { return {Rotation::Identity(), p}; }

  Transform operator*(const Transform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
  Eigen::Vector3d operator*(const Eigen::Vector3d& x) const { return rotation * x + translation; }
  Transform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
};

namespace geometry_detail {

// Plain value of a scalar; overloaded for Eigen::AutoDiffScalar elsewhere.
inline double value_of(double x) { return x; }
template <typename S>
double value_of(const S& x) {
  return value_of(x.value());
}

// Below this angle sinc-type coefficients use their Taylor series.
inline constexpr double kSmallAngle = 1e-8;
// Coefficients with cancellation ((theta - sin)/theta^3 and friends) switch earlier.
inline constexpr double kSeriesAngle = 1e-3;
// Logarithms closer than this to pi are rejected as off the principal branch.
inline constexpr double kBranchMargin = 1e-6;

}  // namespace geometry_detail

template <typename S>
Eigen::Matrix<S, 3, 3> skew(const Eigen::Matrix<S, 3, 1>& w) {
  Eigen::Matrix<S, 3, 3> m;
  m << S(0), -w[2], w[1], w[2], S(0), -w[0], -w[1], w[0], S(0);
  return m;
}

template <typename S>
Eigen::Matrix<S, 3, 1> vee(const Eigen::Matrix<S, 3, 3>& m) {
  return {m(2, 1), m(0, 2), m(1, 0)};
}

/// R = Rz(yaw) Ry(pitch) Rx(roll).
template <typename S>
Eigen::Matrix<S, 3, 3> rot_zyx(const S& z, const S& y, const S& x) {
  using std::cos;
  using std::sin;
  const S cz = cos(z), sz = sin(z), cy = cos(y), sy = sin(y), cx = cos(x), sx = sin(x);
  Eigen::Matrix<S, 3, 3> r;
  r << cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx,  //
      sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx,   //
      -sy, cy * sx, cy * cx;
  return r;
}

template <typename S>
Eigen::Matrix<S, 3, 3> so3_exp(const Eigen::Matrix<S, 3, 1>& w) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const S theta2 = w.dot(w);
  const Eigen::Matrix<S, 3, 3> k = skew(w);
  S a, b;
  if (geometry_detail::value_of(theta2) <
      geometry_detail::kSeriesAngle * geometry_detail::kSeriesAngle) {
    a = S(1) - theta2 / S(6) + theta2 * theta2 / S(120);
    b = S(0.5) - theta2 / S(24) + theta2 * theta2 / S(720);
  } else {
    const S theta = sqrt(theta2);
    a = sin(theta) / theta;
    b = (S(1) - cos(theta)) / theta2;
  }
  return Eigen::Matrix<S, 3, 3>::Identity() + a * k + b * k * k;
}

/// Rotation angle in [0, pi].
double so3_angle(const Rotation& r);

/// Principal logarithm; throws BranchError at angle pi.
template <typename S>
Eigen::Matrix<S, 3, 1> so3_log(const Eigen::Matrix<S, 3, 3>& r) {
  using std::atan2;
  using std::sqrt;
  const Eigen::Matrix<S, 3, 1> half_vee = vee<S>(r - r.transpose()) / S(2);
  const S c = (r.trace() - S(1)) / S(2);
  const S s2 = half_vee.dot(half_vee);
  const double s2v = geometry_detail::value_of(s2);
  const double cv = geometry_detail::value_of(c);
  if (cv < 0.0 && s2v < std::pow(std::sin(geometry_detail::kBranchMargin), 2)) {
    throw BranchError("SO(3) logarithm at rotation angle pi");
  }
  if (s2v < geometry_detail::kSmallAngle * geometry_detail::kSmallAngle && cv > 0.0) {
    // theta/sin(theta) ~ 1 + theta^2/6 with theta^2 ~ s^2.
    return half_vee * (S(1) + s2 / S(6));
  }
  const S s = sqrt(s2);
  const S theta = atan2(s, c);
  return half_vee * (theta / s);
}

/// Translation coupling V(omega) of the SE(3) exponential.
template <typename S>
Eigen::Matrix<S, 3, 3> so3_left_jacobian(const Eigen::Matrix<S, 3, 1>& w) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const S theta2 = w.dot(w);
  const Eigen::Matrix<S, 3, 3> k = skew(w);
  S b, c;
  if (geometry_detail::value_of(theta2) <
      geometry_detail::kSeriesAngle * geometry_detail::kSeriesAngle) {
    b = S(0.5) - theta2 / S(24) + theta2 * theta2 / S(720);
    c = S(1) / S(6) - theta2 / S(120) + theta2 * theta2 / S(5040);
  } else {
    const S theta = sqrt(theta2);
    b = (S(1) - cos(theta)) / theta2;
    c = (theta - sin(theta)) / (theta2 * theta);
  }
  return Eigen::Matrix<S, 3, 3>::Identity() + b * k + c * k * k;
}

template <typename S>
Eigen::Matrix<S, 3, 3> so3_left_jacobian_inverse(const Eigen::Matrix<S, 3, 1>& w) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const S theta2 = w.dot(w);
  const Eigen::Matrix<S, 3, 3> k = skew(w);
  S c;
  if (geometry_detail::value_of(theta2) <
      geometry_detail::kSeriesAngle * geometry_detail::kSeriesAngle) {
    c = S(1) / S(12) + theta2 / S(720) + theta2 * theta2 / S(30240);
  } else {
    const S theta = sqrt(theta2);
    c = (S(1) - theta * sin(theta) / (S(2) * (S(1) - cos(theta)))) / theta2;
  }
  return Eigen::Matrix<S, 3, 3>::Identity() - S(0.5) * k + c * k * k;
}

/// log^vee of (R, p) as (omega; V^-1 p).
template <typename S>
Eigen::Matrix<S, 6, 1> se3_log(const Eigen::Matrix<S, 3, 3>& r, const Eigen::Matrix<S, 3, 1>& p) {
  const Eigen::Matrix<S, 3, 1> w = so3_log(r);
  Eigen::Matrix<S, 6, 1> out;
  out.template head<3>() = w;
  out.template tail<3>() = so3_left_jacobian_inverse(w) * p;
  return out;
}

Twist se3_log(const Transform& t);
Transform se3_exp(const Twist& xi);

/// ZYX angles (z, y, x) with rot_zyx(z, y, x) = R. Throws
/// DegenerateOrientationError when |cos y| is below the gimbal tolerance.
Eigen::Vector3d zyx_angles(const Rotation& r);

/// R_L * exp(1/2 log(R_L^T R_R)).
template <typename S>
Eigen::Matrix<S, 3, 3> so3_geometric_mean(const Eigen::Matrix<S, 3, 3>& left,
                                          const Eigen::Matrix<S, 3, 3>& right) {
  const Eigen::Matrix<S, 3, 1> half = so3_log<S>(left.transpose() * right) / S(2);
  return left * so3_exp<S>(half);
}

inline Rotation rot_zyx(double z, double y, double x) { return rot_zyx<double>(z, y, x); }

/// Posture (yaw, pitch, roll, px, py, pz) of a transform.
Eigen::Matrix<double, 6, 1> posture_of(const Transform& t);
Transform transform_from_posture(const Eigen::Matrix<double, 6, 1>& x);

}  // namespace facto
