#include "facto/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unsupported/Eigen/AutoDiff>

#include "facto/error.hpp"

namespace facto {

namespace {

using Ad6 = Eigen::AutoDiffScalar<Eigen::Matrix<double, 6, 1>>;
using Ad12 = Eigen::AutoDiffScalar<Eigen::Matrix<double, 12, 1>>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZeroRow = 1e-12;

// L(x) = se3_log(transform_from_posture(x)) and its derivative.
Twist posture_log(const Posture& x, Eigen::Matrix<double, 6, 6>& jac) {
  Eigen::Matrix<Ad6, 6, 1> xa;
  for (int i = 0; i < 6; ++i) xa[i] = Ad6(x[i], 6, i);
  const Eigen::Matrix<Ad6, 3, 3> r = rot_zyx<Ad6>(xa[0], xa[1], xa[2]);
  const Eigen::Matrix<Ad6, 3, 1> p(xa[3], xa[4], xa[5]);
  const Eigen::Matrix<Ad6, 6, 1> l = se3_log<Ad6>(r, p);
  Twist value;
  for (int i = 0; i < 6; ++i) {
    value[i] = l[i].value();
    jac.row(i) = l[i].derivatives().transpose();
  }
  return value;
}

// Maps world angular velocity to ZYX angle rates.
Eigen::Matrix3d euler_rate_inverse(double yaw, double pitch) {
  const double cz = std::cos(yaw), sz = std::sin(yaw), cy = std::cos(pitch), sy = std::sin(pitch);
  Eigen::Matrix3d e;
  e << 0.0, -sz, cz * cy,  //
      0.0, cz, sz * cy,    //
      1.0, 0.0, -sy;
  return e.inverse();
}

// Coefficient-space rows G (x) phi^T for a rows x M joint-space gradient G.
Eigen::MatrixXd expand_rows(const Eigen::MatrixXd& g, const Eigen::VectorXd& phi) {
  const Eigen::Index k = phi.size();
  Eigen::MatrixXd out(g.rows(), g.cols() * k);
  for (Eigen::Index m = 0; m < g.cols(); ++m) out.middleCols(m * k, k) = g.col(m) * phi.transpose();
  return out;
}

void check_budget(int rows, const RobotModel& robot, const BasisSet& basis, int active_nodes,
                  const char* what) {
  const int budget = robot.dof() * basis.size();
  if (rows > budget) {
    throw OverConstrainedError(std::string(what) + ": " + std::to_string(rows) +
                               " equality rows from " + std::to_string(active_nodes) +
                               " active nodes exceed the " + std::to_string(budget) +
                               " coefficients of robot '" + robot.name + "'");
  }
}

}  // namespace

TaskRange::TaskRange() {
  bounds.col(0).setConstant(-kInf);
  bounds.col(1).setConstant(kInf);
}

bool TaskRange::is_bounded() const { return (bounds.array().abs() < kInf).any(); }

void TaskRange::validate() const {
  for (int i = 0; i < 6; ++i) {
    if (std::isnan(bounds(i, 0)) || std::isnan(bounds(i, 1)) || bounds(i, 0) > bounds(i, 1)) {
      throw DomainError("task range row " + std::to_string(i) + ": min must not exceed max");
    }
  }
}

Posture desired_posture(const Posture& x, const TaskRange& range) {
  return x.cwiseMin(range.bounds.col(1)).cwiseMax(range.bounds.col(0));
}

TaskError task_error(const RobotModel& robot, const Eigen::VectorXd& q, const TaskRange& range) {
  const std::vector<Transform> frames = forward_kinematics(robot, q);
  const Transform pose = ee_pose(robot, frames);
  const auto geometric = ee_jacobian(robot, frames);

  TaskError out;
  out.posture = posture_of(pose);
  out.desired = desired_posture(out.posture, range);
  out.posture_jacobian.resize(6, robot.dof());
  out.posture_jacobian.topRows(3) =
      euler_rate_inverse(out.posture[0], out.posture[1]) * geometric.topRows(3);
  out.posture_jacobian.bottomRows(3) = geometric.bottomRows(3);

  Eigen::Matrix<double, 6, 6> dl, dl_des;
  const Twist l = posture_log(out.posture, dl);
  const Twist l_des = posture_log(out.desired, dl_des);
  Eigen::Matrix<double, 6, 6> passthrough = Eigen::Matrix<double, 6, 6>::Zero();
  for (int i = 0; i < 6; ++i) passthrough(i, i) = out.posture[i] == out.desired[i] ? 1.0 : 0.0;
  out.h = l - l_des;
  out.jacobian = (dl - dl_des * passthrough) * out.posture_jacobian;
  return out;
}

std::string to_string(RowKind kind) {
  switch (kind) {
    case RowKind::BoundaryPosition: return "boundary-pos";
    case RowKind::BoundaryVelocity: return "boundary-vel";
    case RowKind::BoundaryAcceleration: return "boundary-acc";
    case RowKind::Task: return "task";
    case RowKind::ClosedChain: return "chain";
  }
  return "unknown";
}

void EqualityBlock::append_row(const Eigen::RowVectorXd& row, double rhs, RowLabel label) {
  if (row.size() != A.cols()) throw DimensionError("equality row width mismatch");
  A.conservativeResize(A.rows() + 1, Eigen::NoChange);
  A.bottomRows(1) = row;
  b.conservativeResize(b.size() + 1);
  b[b.size() - 1] = rhs;
  labels.push_back(label);
}

void EqualityBlock::append(const EqualityBlock& other) {
  if (other.rows() == 0) return;
  if (other.A.cols() != A.cols()) throw DimensionError("equality block width mismatch");
  const Eigen::Index r = A.rows();
  A.conservativeResize(r + other.A.rows(), Eigen::NoChange);
  A.bottomRows(other.A.rows()) = other.A;
  b.conservativeResize(r + other.b.size());
  b.tail(other.b.size()) = other.b;
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

void InequalityBlock::append(const InequalityBlock& other) {
  if (other.rows() == 0) return;
  if (other.A.cols() != A.cols()) throw DimensionError("inequality block width mismatch");
  const Eigen::Index r = A.rows();
  A.conservativeResize(r + other.A.rows(), Eigen::NoChange);
  A.bottomRows(other.A.rows()) = other.A;
  b.conservativeResize(r + other.b.size());
  b.tail(other.b.size()) = other.b;
}

EqualityBlock boundary_equalities(const BasisSet& basis, const BoundaryLift& lift,
                                  const CoefficientVector& psi, const BoundaryFlags& flags) {
  const int joints = psi.joints;
  EqualityBlock block(joints * basis.size());
  const double horizon = basis.horizon();
  const RowKind kinds[3] = {RowKind::BoundaryPosition, RowKind::BoundaryVelocity,
                            RowKind::BoundaryAcceleration};
  for (int d = 0; d < 3; ++d) {
    if (d == 1 && !flags.velocity) continue;
    if (d == 2 && !flags.acceleration) continue;
    for (double t : {0.0, horizon}) {
      const Eigen::VectorXd phi = basis.eval(t, d);
      if (phi.norm() <= kZeroRow * std::max(1.0, std::pow(1.0 / horizon, d))) continue;
      const Eigen::VectorXd current = eval_trajectory(psi, lift, basis, t, d);
      // Positions and velocities target the lift's boundary values; accelerations target zero.
      const Eigen::VectorXd target =
          d == 2 ? Eigen::VectorXd::Zero(joints) : lift.eval(t, horizon, d);
      for (int m = 0; m < joints; ++m) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(block.A.cols());
        row.segment(m * basis.size(), basis.size()) = phi.transpose();
        block.append_row(row, target[m] - current[m], {kinds[d], t, m});
      }
    }
  }
  return block;
}

std::vector<double> interior_nodes(double horizon, int count) {
  std::vector<double> nodes;
  for (int k = 1; k <= count; ++k) nodes.push_back(k * horizon / (count + 1));
  return nodes;
}

EqualityBlock task_equalities(const RobotModel& robot, const BasisSet& basis,
                              const BoundaryLift& lift, const CoefficientVector& psi,
                              const TaskRange& range, int node_count, double activation_tol,
                              int existing_rows) {
  EqualityBlock block(robot.dof() * basis.size());
  if (!range.is_bounded()) return block;
  int active_nodes = 0;
  for (double t : interior_nodes(basis.horizon(), node_count)) {
    const Eigen::VectorXd q = eval_trajectory(psi, lift, basis, t, 0);
    const TaskError err = task_error(robot, q, range);
    const Eigen::VectorXd phi = basis.eval(t, 0);
    bool active = false;
    for (int c = 0; c < 6; ++c) {
      const double residual = err.posture[c] - err.desired[c];
      // A component sitting on a bound stays pinned; dropping it lets the
      // next step push it straight back out.
      const double to_bound = std::min(std::abs(err.posture[c] - range.bounds(c, 0)),
                                       std::abs(err.posture[c] - range.bounds(c, 1)));
      if (std::abs(residual) <= activation_tol && to_bound > activation_tol) continue;
      block.append_row(expand_rows(err.posture_jacobian.row(c), phi), -residual,
                       {RowKind::Task, t, c});
      active = true;
    }
    active_nodes += active ? 1 : 0;
  }
  check_budget(existing_rows + block.rows(), robot, basis, active_nodes, "task constraints");
  return block;
}

InequalityBlock joint_limit_inequalities(const BasisSet& basis, const BoundaryLift& lift,
                                         const CoefficientVector& psi, const RobotModel& robot,
                                         const std::vector<double>& nodes) {
  const int joints = robot.dof();
  const int k = basis.size();
  InequalityBlock block(joints * k);
  block.A.resize(2 * joints * static_cast<Eigen::Index>(nodes.size()), joints * k);
  block.A.setZero();
  block.b.resize(block.A.rows());
  Eigen::Index row = 0;
  for (double t : nodes) {
    const Eigen::VectorXd phi = basis.eval(t, 0);
    const Eigen::VectorXd q = eval_trajectory(psi, lift, basis, t, 0);
    for (int j = 0; j < joints; ++j) {
      block.A.block(row, j * k, 1, k) = phi.transpose();
      block.b[row++] = robot.joints[j].upper - q[j];
      block.A.block(row, j * k, 1, k) = -phi.transpose();
      block.b[row++] = q[j] - robot.joints[j].lower;
    }
  }
  return block;
}

std::vector<double> refine_limit_nodes(const BasisSet& basis, const BoundaryLift& lift,
                                       const CoefficientVector& psi, const RobotModel& robot,
                                       std::vector<double> nodes, int dense_count, int max_nodes) {
  if (dense_count < 8 * basis.size()) {
    throw PrecisionError("limit refinement needs at least 8(N+1) dense samples");
  }
  if (static_cast<int>(nodes.size()) >= max_nodes) return nodes;
  const double horizon = basis.horizon();
  double worst = 0.0;
  double worst_time = -1.0;
  for (int i = 0; i < dense_count; ++i) {
    const double t = horizon * i / (dense_count - 1);
    const Eigen::VectorXd q = eval_trajectory(psi, lift, basis, t, 0);
    for (int j = 0; j < robot.dof(); ++j) {
      const double v = std::max(q[j] - robot.joints[j].upper, robot.joints[j].lower - q[j]);
      if (v > worst) {
        worst = v;
        worst_time = t;
      }
    }
  }
  if (worst_time < 0.0) return nodes;
  const double spacing = horizon / (2.0 * dense_count);
  for (double t : nodes) {
    if (std::abs(t - worst_time) <= spacing) return nodes;
  }
  nodes.insert(std::upper_bound(nodes.begin(), nodes.end(), worst_time), worst_time);
  return nodes;
}

void ClosedChainSpec::validate() const {
  if (!(w_p >= 0.0) || !(w_R >= 0.0)) throw DomainError("closed-chain weights must be nonnegative");
  if (collocation < 1) throw DomainError("closed-chain collocation count must be positive");
  if (!(reference.translation.norm() > 0.0)) {
    throw DomainError("closed-chain reference grippers must be apart");
  }
}

ClosedChainErrors closed_chain_errors(const Transform& left, const Transform& right,
                                      const ClosedChainSpec& spec) {
  using Vec3 = Eigen::Matrix<Ad12, 3, 1>;
  using Mat3 = Eigen::Matrix<Ad12, 3, 3>;
  Vec3 w_l, v_l, w_r, v_r;
  for (int i = 0; i < 3; ++i) {
    w_l[i] = Ad12(0.0, 12, i);
    v_l[i] = Ad12(0.0, 12, 3 + i);
    w_r[i] = Ad12(0.0, 12, 6 + i);
    v_r[i] = Ad12(0.0, 12, 9 + i);
  }
  const Mat3 r_l = so3_exp<Ad12>(w_l) * left.rotation.cast<Ad12>();
  const Mat3 r_r = so3_exp<Ad12>(w_r) * right.rotation.cast<Ad12>();
  const Vec3 d = (right.translation.cast<Ad12>() + v_r) - (left.translation.cast<Ad12>() + v_l);

  const Eigen::Vector3d d0 = spec.reference.translation;
  const Rotation r_c0 = so3_geometric_mean<double>(Rotation::Identity(), spec.reference.rotation);
  const Eigen::Vector3d d0_c = r_c0.transpose() * d0;

  using std::sqrt;
  const Ad12 e_pos = sqrt(d.dot(d)) - Ad12(d0.norm());
  const Mat3 r_c = so3_geometric_mean<Ad12>(r_l, r_r);
  const Vec3 pos_res = (r_c.transpose() * d - d0_c.cast<Ad12>()) * Ad12(std::sqrt(spec.w_p));
  const Mat3 r_rl = r_l.transpose() * r_r;
  const Vec3 rot_res =
      so3_log<Ad12>(spec.reference.rotation.transpose().cast<Ad12>() * r_rl) * Ad12(std::sqrt(spec.w_R));

  ClosedChainErrors out;
  out.e_pos = e_pos.value();
  out.e_pos_grad_left = e_pos.derivatives().head<6>().transpose();
  out.e_pos_grad_right = e_pos.derivatives().tail<6>().transpose();
  for (int i = 0; i < 3; ++i) {
    out.posture_residual[i] = pos_res[i].value();
    out.posture_residual[3 + i] = rot_res[i].value();
    out.residual_jac_left.row(i) = pos_res[i].derivatives().head<6>().transpose();
    out.residual_jac_right.row(i) = pos_res[i].derivatives().tail<6>().transpose();
    out.residual_jac_left.row(3 + i) = rot_res[i].derivatives().head<6>().transpose();
    out.residual_jac_right.row(3 + i) = rot_res[i].derivatives().tail<6>().transpose();
  }
  out.e_post = out.posture_residual.squaredNorm();
  out.e_post_grad_left = 2.0 * out.posture_residual.transpose() * out.residual_jac_left;
  out.e_post_grad_right = 2.0 * out.posture_residual.transpose() * out.residual_jac_right;
  return out;
}

EqualityBlock closed_chain_equalities(const RobotModel& robot, const BasisSet& basis,
                                      const BoundaryLift& lift, const CoefficientVector& psi,
                                      const ClosedChainSpec& spec, bool is_left,
                                      const std::vector<Transform>& partner_poses,
                                      int existing_rows) {
  const std::vector<double> nodes = closed_chain_nodes(basis.horizon(), spec);
  if (partner_poses.size() != nodes.size()) {
    throw DimensionError("closed chain: one partner pose per collocation node required");
  }
  EqualityBlock block(robot.dof() * basis.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double t = nodes[k];
    const Eigen::VectorXd q = eval_trajectory(psi, lift, basis, t, 0);
    const std::vector<Transform> frames = forward_kinematics(robot, q);
    const Transform self = ee_pose(robot, frames);
    const auto jac = ee_jacobian(robot, frames);
    const ClosedChainErrors err = is_left ? closed_chain_errors(self, partner_poses[k], spec)
                                          : closed_chain_errors(partner_poses[k], self, spec);
    const Eigen::VectorXd phi = basis.eval(t, 0);

    // With the posture term the residual vector already fixes |d|, so the
    // distance row would only duplicate it.
    Eigen::MatrixXd grads;
    Eigen::VectorXd values;
    if (spec.posture) {
      grads = (is_left ? err.residual_jac_left : err.residual_jac_right) * jac;
      values = err.posture_residual;
    } else {
      grads = (is_left ? err.e_pos_grad_left : err.e_pos_grad_right) * jac;
      values = Eigen::VectorXd::Constant(1, err.e_pos);
    }
    for (Eigen::Index i = 0; i < grads.rows(); ++i) {
      // Rows this arm cannot influence are left to the partner.
      if (grads.row(i).norm() <= 1e-9) continue;
      block.append_row(expand_rows(grads.row(i), phi), -0.5 * values[i],
                       {RowKind::ClosedChain, t, static_cast<int>(i)});
    }
  }
  check_budget(existing_rows + block.rows(), robot, basis, static_cast<int>(nodes.size()),
               "closed-chain constraints");
  return block;
}

}  // namespace facto
