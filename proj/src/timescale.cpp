#include "facto/timescale.hpp"

#include <algorithm>
#include <cmath>

#include "facto/error.hpp"

namespace facto {

namespace {

// Iterations tolerate this much rounding before calling sigma > 1.
constexpr double kSigmaSlack = 1e-9;

double joint_speed(const CoefficientVector& psi, const BasisSet& basis, const BoundaryLift& lift,
                   int joint, double t) {
  return std::abs(eval_trajectory(psi, lift, basis, t, 1)[joint]);
}

}  // namespace

void TimeScaleConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("timescale gamma must lie in (0, 1)");
  if (!(varsigma > 0.0 && varsigma < 1.0)) throw DomainError("timescale varsigma must lie in (0, 1)");
  if (samples < 16) throw DomainError("timescale needs at least 16 samples");
  if (max_passes < 1) throw DomainError("timescale needs at least one pass");
  if (!(sigma_max > 1.0)) throw DomainError("timescale sigma_max must exceed 1");
}

Eigen::VectorXd peak_joint_speed(const CoefficientVector& psi, const BasisSet& basis,
                                 const BoundaryLift& lift, int samples) {
  const int dense = 4 * samples;
  const double horizon = basis.horizon();
  const double dt = horizon / dense;
  Eigen::MatrixXd speeds(psi.joints, dense + 1);
  for (int i = 0; i <= dense; ++i) {
    speeds.col(i) = eval_trajectory(psi, lift, basis, i * dt, 1).cwiseAbs();
  }
  Eigen::VectorXd peak(psi.joints);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int j = 0; j < psi.joints; ++j) {
    Eigen::Index best = 0;
    peak[j] = speeds.row(j).maxCoeff(&best);
    double a = std::max(0.0, (best - 1) * dt);
    double b = std::min(horizon, (best + 1) * dt);
    double c = b - ratio * (b - a), d = a + ratio * (b - a);
    double fc = joint_speed(psi, basis, lift, j, c), fd = joint_speed(psi, basis, lift, j, d);
    for (int it = 0; it < 60 && b - a > 1e-12 * horizon; ++it) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - ratio * (b - a);
        fc = joint_speed(psi, basis, lift, j, c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + ratio * (b - a);
        fd = joint_speed(psi, basis, lift, j, d);
      }
    }
    peak[j] = std::max({peak[j], fc, fd});
  }
  return peak;
}

double velocity_init_T(const CoefficientVector& psi, const BasisSet& basis, const BoundaryLift& lift,
                       const RobotModel& robot, double gamma, int samples) {
  const Eigen::VectorXd peak = peak_joint_speed(psi, basis, lift, samples);
  double sigma = 0.0;
  for (int j = 0; j < robot.dof(); ++j) {
    sigma = std::max(sigma, peak[j] / (gamma * robot.joints[j].velocity_limit));
  }
  return std::max(basis.horizon(), sigma * basis.horizon());
}

TorqueProfile torque_profile(const RobotModel& robot, const CoefficientVector& psi,
                             const BasisSet& basis, const BoundaryLift& lift, int samples,
                             const Eigen::Vector3d& gravity) {
  TorqueProfile out;
  out.dynamic_peak = Eigen::VectorXd::Zero(robot.dof());
  out.gravity_peak = Eigen::VectorXd::Zero(robot.dof());
  for (int l = 0; l <= samples; ++l) {
    const double t = basis.horizon() * l / samples;
    const Eigen::VectorXd q = eval_trajectory(psi, lift, basis, t, 0);
    const Eigen::VectorXd qd = eval_trajectory(psi, lift, basis, t, 1);
    const Eigen::VectorXd qdd = eval_trajectory(psi, lift, basis, t, 2);
    const Eigen::VectorXd u = inverse_dynamics(robot, q, qd, qdd, gravity);
    const Eigen::VectorXd g = gravity_torques(robot, q, gravity);
    out.dynamic_peak = out.dynamic_peak.cwiseMax((u - g).cwiseAbs());
    out.gravity_peak = out.gravity_peak.cwiseMax(g.cwiseAbs());
  }
  return out;
}

double torque_scale_iteration(const RobotModel& robot, const CoefficientVector& psi,
                              const BasisSet& basis, const BoundaryLift& lift,
                              const TimeScaleConfig& cfg, const Eigen::Vector3d& gravity) {
  const TorqueProfile profile = torque_profile(robot, psi, basis, lift, cfg.samples, gravity);
  double ratio = 0.0;
  for (int j = 0; j < robot.dof(); ++j) {
    const double limit = robot.joints[j].effort_limit;
    if (profile.gravity_peak[j] >= limit) {
      throw StaticallyInfeasibleError("gravity torque " + std::to_string(profile.gravity_peak[j]) +
                                      " reaches the limit of joint " + std::to_string(j) +
                                      " of robot '" + robot.name + "'");
    }
    const double dynamic_limit = cfg.varsigma * (limit - profile.gravity_peak[j]);
    ratio = std::max(ratio, profile.dynamic_peak[j] / (cfg.gamma * dynamic_limit));
  }
  return std::max(1.0, std::sqrt(ratio));
}

ScaleReport time_scale(const std::vector<ScaledTrajectory>& trajectories, const BasisSet& basis,
                       const TimeScaleConfig& cfg, const Eigen::Vector3d& gravity) {
  cfg.validate();
  ScaleReport report;
  report.robots.resize(trajectories.size());
  double horizon = basis.horizon();
  for (std::size_t r = 0; r < trajectories.size(); ++r) {
    const ScaledTrajectory& tr = trajectories[r];
    report.robots[r].initial_T = basis.horizon();
    report.robots[r].velocity_T =
        velocity_init_T(tr.psi, basis, tr.lift, *tr.robot, cfg.gamma, cfg.samples);
    horizon = std::max(horizon, report.robots[r].velocity_T);
  }
  for (std::size_t r = 0; r < trajectories.size(); ++r) {
    const ScaledTrajectory& tr = trajectories[r];
    RobotScaleRecord& rec = report.robots[r];
    bool within = false;
    for (int pass = 0; pass < cfg.max_passes; ++pass) {
      const double sigma = torque_scale_iteration(*tr.robot, tr.psi, basis.with_horizon(horizon),
                                                  tr.lift, cfg, gravity);
      rec.sigmas.push_back(sigma);
      if (sigma <= 1.0 + kSigmaSlack) {
        within = true;
        break;
      }
      horizon = std::min(cfg.sigma_max * horizon, sigma * horizon);
    }
    if (!within) {
      // The last pass may have been enough; check once more.
      const double sigma = torque_scale_iteration(*tr.robot, tr.psi, basis.with_horizon(horizon),
                                                  tr.lift, cfg, gravity);
      within = sigma <= 1.0 + kSigmaSlack;
    }
    report.scaled = report.scaled && within;
    rec.final_T = horizon;
  }
  report.final_T = horizon;
  for (const RobotScaleRecord& rec : report.robots) report.final_T = std::max(report.final_T, rec.final_T);
  return report;
}

}  // namespace facto
