#pragma once

#include <Eigen/Dense>
#include <vector>

#include "facto/basis.hpp"
#include "facto/robot.hpp"

namespace facto {

struct TimeScaleConfig {
  double gamma = 0.9;     // safety factor on velocity and dynamic torque
  double varsigma = 0.9;  // share of the torque left after gravity usable for dynamics
  int samples = 64;       // L
  int max_passes = 10;    // K_max
  double sigma_max = 4.0;

  void validate() const;
};

/// One robot's trajectory: fixed coefficients and lift, horizon taken from the basis.
struct ScaledTrajectory {
  const RobotModel* robot = nullptr;
  CoefficientVector psi;
  BoundaryLift lift;
};

struct RobotScaleRecord {
  double initial_T = 0.0;
  double velocity_T = 0.0;
  std::vector<double> sigmas;  // one per torque pass
  double final_T = 0.0;
};

struct ScaleReport {
  std::vector<RobotScaleRecord> robots;
  double final_T = 0.0;
  bool scaled = true;  // false when some robot still needed sigma > 1 after max_passes
};

/// Smallest T >= T_ref (the basis horizon) keeping every joint speed below
/// gamma * V_lim, using the 1/T velocity law at fixed shape.
double velocity_init_T(const CoefficientVector& psi, const BasisSet& basis, const BoundaryLift& lift,
                       const RobotModel& robot, double gamma, int samples = 64);

/// Peak |qdot_j| over [0, T]: 4L samples refined by golden-section search.
Eigen::VectorXd peak_joint_speed(const CoefficientVector& psi, const BasisSet& basis,
                                 const BoundaryLift& lift, int samples);

struct TorqueProfile {
  Eigen::VectorXd dynamic_peak;  // max |u - g| per joint
  Eigen::VectorXd gravity_peak;  // max |g| per joint
};

/// Samples t_l = l T / L, l = 0..L.
TorqueProfile torque_profile(const RobotModel& robot, const CoefficientVector& psi,
                             const BasisSet& basis, const BoundaryLift& lift, int samples,
                             const Eigen::Vector3d& gravity);

/// Required horizon factor sigma >= 1. Throws StaticallyInfeasibleError when
/// gravity alone reaches a torque limit.
double torque_scale_iteration(const RobotModel& robot, const CoefficientVector& psi,
                              const BasisSet& basis, const BoundaryLift& lift,
                              const TimeScaleConfig& cfg, const Eigen::Vector3d& gravity);

/// Shared horizon for all robots; the basis horizon is the planning horizon.
ScaleReport time_scale(const std::vector<ScaledTrajectory>& trajectories, const BasisSet& basis,
                       const TimeScaleConfig& cfg, const Eigen::Vector3d& gravity);

}  // namespace facto
