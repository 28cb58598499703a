#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "facto/basis.hpp"
#include "facto/constraints.hpp"
#include "facto/qp.hpp"
#include "facto/robot.hpp"
#include "facto/scene.hpp"
#include "facto/timescale.hpp"

namespace facto {

/// Obstacle quadrature: uniform times on [0, T] with trapezoid weights.
struct ObstacleNodes {
  std::vector<double> times;
  std::vector<double> weights;
};

ObstacleNodes obstacle_nodes(double horizon, int count);

struct GnTerms {
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
};

/// Bias-corrected exponential moving averages of the GN gradient and curvature.
struct EmaState {
  double beta_g = 0.25;
  double beta_h = 0.125;
  int count = 0;
  Eigen::VectorXd s_g;  // current bias-corrected averages
  Eigen::MatrixXd s_h;
};

GnTerms ema_update(EmaState& state, const GnTerms& raw);

/// Scalar residual r_k and its coefficient-space gradient g_k.
struct Residual {
  double r = 0.0;
  Eigen::VectorXd g;
};

/// H = sum g g', g = sum r g.
GnTerms gn_terms(const std::vector<Residual>& residuals);

struct OptimizerConfig {
  double smoothness_weight = 5e-2;  // varrho
  double beta1 = 0.25;
  double beta2 = 0.125;
  double lambda0 = 1e-3;
  double rho_min = 0.25;
  double rho_max = 0.75;
  double gamma_up = 2.0;
  double gamma_down = 0.5;
  double step_tol = 1e-4;
  int max_iters = 300;
  int obstacle_nodes = 40;
  int task_nodes = 10;
  int limit_nodes = 12;
  double activation_tol = 1e-6;
  BoundaryFlags boundary;
  double rank_tol = kDefaultRankTol;
  double qp_tol = 1e-9;
  int qp_max_iter = 20000;

  void validate() const;
};

/// Residual vector r(psi) and, on request, its Jacobian (rows g_k').
class ResidualModel {
 public:
  virtual ~ResidualModel() = default;
  virtual void evaluate(const Eigen::VectorXd& psi, Eigen::VectorXd& r,
                        Eigen::MatrixXd* jacobian) const = 0;
};

/// Everything one damped step of one robot needs.
struct StepProblem {
  Eigen::VectorXd smoothness;  // diagonal of Q over all coefficients
  double smoothness_weight = 0.0;
  const ResidualModel* residuals = nullptr;
  EqualityBlock equalities;
  InequalityBlock inequalities;
};

/// varrho/2 psi'Q psi + 1/2 |r(psi)|^2.
double working_objective(const StepProblem& problem, const Eigen::VectorXd& psi);

struct RobotState {
  Eigen::VectorXd psi;
  EmaState ema;
  double lambda = 1e-3;
  std::optional<QPSolution> warm;
};

struct StepReport {
  Eigen::VectorXd step;  // proposed, whether accepted or not
  bool accepted = false;
  double rho = 0.0;
  double ared = 0.0;
  double pred = 0.0;
  double objective = 0.0;  // at the resulting psi
  double lambda = 0.0;     // after the update
  int equality_rows = 0;
  int inequality_rows = 0;
  QPStatus qp_status = QPStatus::Solved;
  double equality_residual = 0.0;  // |A dpsi - b|_inf of the proposed step
  std::vector<int> dropped_rows;
};

/// Residuals, EMA, null-space reduction, reduced QP and trust-region update.
StepReport update_step(RobotState& state, const StepProblem& problem, const OptimizerConfig& cfg);

/// |step| <= step_tol * max(1, |psi|).
bool stationarity(const Eigen::VectorXd& step_all, const Eigen::VectorXd& psi_all, double step_tol);

/// Minimizer of psi'Q psi subject to the boundary rows at psi = 0.
CoefficientVector init_coefficients(const BasisSet& basis, const BoundaryLift& lift,
                                    const BoundaryFlags& flags = {});

struct RobotSpec {
  RobotModel model;
  Eigen::VectorXd start;
  Eigen::VectorXd goal;
  Eigen::VectorXd start_velocity;  // zero when empty
  Eigen::VectorXd goal_velocity;
  TaskRange task;
};

struct ClosedChainLink {
  int left = 0;
  int right = 1;
  ClosedChainSpec spec;
};

struct MultiRobotProblem {
  BasisSet basis{BasisFamily::Cosine, 6, 1.0};
  std::vector<RobotSpec> robots;
  Scene scene;
  CollisionParams collision;
  std::vector<AcmOverride> acm_overrides;
  std::optional<ClosedChainLink> closed_chain;
  Eigen::Vector3d gravity = kDefaultGravity;
  OptimizerConfig optimizer;
  TimeScaleConfig timescale;
  bool run_timescale = true;

  void validate() const;
  BoundaryLift lift(int robot) const;
  std::vector<RobotModel> models() const;
};

/// Frozen cross-robot data for one SQP iteration.
struct SharedSnapshot {
  std::vector<std::vector<SphereState>> spheres;   // [obstacle node][robot]
  std::vector<std::vector<Transform>> chain_poses;  // [robot][closed-chain node]
};

SharedSnapshot take_snapshot(const MultiRobotProblem& problem,
                             const std::vector<CoefficientVector>& psi,
                             const ObstacleNodes& nodes);

/// Obstacle residuals of one robot against the scene and the snapshot. The
/// robot's own spheres are recomputed from psi. The speed factor |xdot|^q is
/// taken from `speed_reference` when given (frozen, and then left out of the
/// Jacobian), otherwise from psi with its full derivative.
class SceneResidualModel : public ResidualModel {
 public:
  SceneResidualModel(const MultiRobotProblem& problem, int robot, const AllowedCollisionMatrix& acm,
                     const SharedSnapshot& snapshot, const ObstacleNodes& nodes);

  void evaluate(const Eigen::VectorXd& psi, Eigen::VectorXd& r,
                Eigen::MatrixXd* jacobian) const override;

  std::vector<Residual> residuals(const CoefficientVector& psi) const;

  void freeze_speed(std::optional<CoefficientVector> reference) { speed_reference_ = std::move(reference); }

 private:
  const MultiRobotProblem& problem_;
  int robot_;
  const AllowedCollisionMatrix& acm_;
  const SharedSnapshot& snapshot_;
  const ObstacleNodes& nodes_;
  BoundaryLift lift_;
  std::optional<CoefficientVector> speed_reference_;
};

/// Minimum effective distance (environment and ACM partners) of a robot's
/// spheres at configuration q, given every robot's spheres.
struct EffectiveDistance {
  double distance = std::numeric_limits<double>::infinity();
  int sphere = -1;
};
EffectiveDistance effective_distance(const Scene& scene, const AllowedCollisionMatrix& acm,
                                     const std::vector<SphereState>& all_states, int robot);

enum class PlanStatus { Converged, NotConverged };

std::string to_string(PlanStatus status);

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double step_norm = 0.0;
  std::vector<double> lambda;
  std::vector<int> equality_rows;
  std::vector<int> inequality_rows;
  std::vector<bool> accepted;
  std::vector<double> equality_residual;  // |A dpsi - b|_inf of each proposed step
  std::vector<Eigen::VectorXd> psi;       // iterate after this step
};

struct RobotSolution {
  CoefficientVector psi;
  BoundaryLift lift;  // in normalized time, valid for any horizon
};

struct Solution {
  PlanStatus status = PlanStatus::NotConverged;
  BasisSet basis{BasisFamily::Cosine, 6, 1.0};  // planning horizon
  double final_T = 0.0;
  std::vector<RobotSolution> robots;
  std::optional<ScaleReport> scale;
  std::vector<IterationRecord> log;
  int iterations = 0;
};

/// Sequential QP over all robots, then time scaling when enabled.
Solution facto_plan(const MultiRobotProblem& problem);

}  // namespace facto
