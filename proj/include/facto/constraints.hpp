#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "facto/basis.hpp"
#include "facto/geometry.hpp"
#include "facto/robot.hpp"

namespace facto {

/// Posture x = (yaw, pitch, roll, px, py, pz) as produced by posture_of().
using Posture = Eigen::Matrix<double, 6, 1>;

/// Rowwise [min, max] bounds on the end-effector posture; +-inf allowed.
struct TaskRange {
  Eigen::Matrix<double, 6, 2> bounds;

  TaskRange();
  static TaskRange unbounded() { return {}; }

  bool is_bounded() const;
  void validate() const;
};

/// Componentwise clamp of x into the task range.
Posture desired_posture(const Posture& x, const TaskRange& range);

struct TaskError {
  Twist h;                                        // se3_log(T) - se3_log(T_des)
  Eigen::Matrix<double, 6, Eigen::Dynamic> jacobian;  // dh/dtheta
  Posture posture;
  Posture desired;
  Eigen::Matrix<double, 6, Eigen::Dynamic> posture_jacobian;  // dx/dtheta
};

/// Task error of the end-effector pose. Throws DegenerateOrientationError at
/// gimbal lock.
TaskError task_error(const RobotModel& robot, const Eigen::VectorXd& q, const TaskRange& range);

enum class RowKind { BoundaryPosition, BoundaryVelocity, BoundaryAcceleration, Task, ClosedChain };

std::string to_string(RowKind kind);

struct RowLabel {
  RowKind kind = RowKind::BoundaryPosition;
  double time = 0.0;
  int index = 0;  // joint, posture component or closed-chain residual component
};

/// Linearized equalities A dpsi = b about the current coefficients.
struct EqualityBlock {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<RowLabel> labels;

  explicit EqualityBlock(int cols = 0) : A(0, cols), b(0) {}
  int rows() const { return static_cast<int>(b.size()); }
  void append_row(const Eigen::RowVectorXd& row, double rhs, RowLabel label);
  void append(const EqualityBlock& other);
};

/// Linearized inequalities A dpsi <= b about the current coefficients.
struct InequalityBlock {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  explicit InequalityBlock(int cols = 0) : A(0, cols), b(0) {}
  int rows() const { return static_cast<int>(b.size()); }
  void append(const InequalityBlock& other);
};

struct BoundaryFlags {
  bool velocity = true;
  bool acceleration = false;
};

/// Rows for positions (always), velocities and accelerations (by flag) at t = 0
/// and t = T. Rows whose basis evaluation vanishes identically are skipped.
EqualityBlock boundary_equalities(const BasisSet& basis, const BoundaryLift& lift,
                                  const CoefficientVector& psi, const BoundaryFlags& flags);

/// t_k = k T / (count + 1), k = 1..count.
std::vector<double> interior_nodes(double horizon, int count);

/// Rows pinning each out-of-range posture component at each collocation node
/// to its bound. Components already on a bound (within activation_tol) keep
/// their row. `existing_rows` counts rows already stacked for this robot;
/// exceeding M(N+1) in total raises OverConstrainedError.
EqualityBlock task_equalities(const RobotModel& robot, const BasisSet& basis,
                              const BoundaryLift& lift, const CoefficientVector& psi,
                              const TaskRange& range, int node_count, double activation_tol,
                              int existing_rows = 0);

/// Two rows per joint and node: +-Phi_j(t_k) dpsi <= slack to the bound.
InequalityBlock joint_limit_inequalities(const BasisSet& basis, const BoundaryLift& lift,
                                         const CoefficientVector& psi, const RobotModel& robot,
                                         const std::vector<double>& nodes);

/// Appends the worst dense-sample violation time when it is not already near a
/// node. Never removes nodes; stops growing at `max_nodes`.
std::vector<double> refine_limit_nodes(const BasisSet& basis, const BoundaryLift& lift,
                                       const CoefficientVector& psi, const RobotModel& robot,
                                       std::vector<double> nodes, int dense_count, int max_nodes);

struct ClosedChainSpec {
  Transform reference;  // T_RL at the grasp: left gripper to right gripper
  double w_p = 1.0;
  double w_R = 1.0;
  bool posture = true;
  int collocation = 10;

  void validate() const;
};

/// Errors of the relative gripper pose. Gradients are with respect to a world
/// twist (omega; v) applied to each gripper as R <- exp(omega) R, p <- p + v.
struct ClosedChainErrors {
  double e_pos = 0.0;   // |d| - |d0|
  double e_post = 0.0;  // |posture_residual|^2
  Eigen::Matrix<double, 6, 1> posture_residual;  // sqrt(w_p)(R_c'd - R_c0'd0); sqrt(w_R) log(R_RL0' R_RL)
  Eigen::Matrix<double, 1, 6> e_pos_grad_left, e_pos_grad_right;
  Eigen::Matrix<double, 6, 6> residual_jac_left, residual_jac_right;
  Eigen::Matrix<double, 1, 6> e_post_grad_left, e_post_grad_right;
};

ClosedChainErrors closed_chain_errors(const Transform& left, const Transform& right,
                                      const ClosedChainSpec& spec);

/// Closed-chain rows for one arm against the partner's frozen poses at the
/// collocation nodes. Each arm takes half of the shared error.
EqualityBlock closed_chain_equalities(const RobotModel& robot, const BasisSet& basis,
                                      const BoundaryLift& lift, const CoefficientVector& psi,
                                      const ClosedChainSpec& spec, bool is_left,
                                      const std::vector<Transform>& partner_poses,
                                      int existing_rows = 0);

/// Node times used for closed-chain collocation.
inline std::vector<double> closed_chain_nodes(double horizon, const ClosedChainSpec& spec) {
  return interior_nodes(horizon, spec.collocation);
}

}  // namespace facto
