#include "facto/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "facto/error.hpp"
#include "facto/log.hpp"

namespace facto {

ObstacleNodes obstacle_nodes(double horizon, int count) {
  if (count < 2) throw DomainError("obstacle quadrature needs at least two nodes");
  ObstacleNodes nodes;
  const double h = horizon / (count - 1);
  for (int k = 0; k < count; ++k) {
    nodes.times.push_back(k == count - 1 ? horizon : k * h);
    nodes.weights.push_back((k == 0 || k == count - 1) ? 0.5 * h : h);
  }
  return nodes;
}

GnTerms ema_update(EmaState& state, const GnTerms& raw) {
  if (state.count == 0) {
    state.s_g = Eigen::VectorXd::Zero(raw.g.size());
    state.s_h = Eigen::MatrixXd::Zero(raw.H.rows(), raw.H.cols());
  }
  if (state.s_g.size() != raw.g.size() || state.s_h.rows() != raw.H.rows()) {
    throw DimensionError("EMA accumulator size changed");
  }
  // Bias-corrected average updated in place: gbar_i = gbar_{i-1} + beta / c_i (x - gbar_{i-1}),
  // c_i = 1 - (1 - beta)^i. Same value as s_i / c_i, but a constant input is reproduced exactly.
  const double i1 = state.count + 1.0;
  const double wg = state.beta_g / (1.0 - std::pow(1.0 - state.beta_g, i1));
  const double wh = state.beta_h / (1.0 - std::pow(1.0 - state.beta_h, i1));
  state.s_g += wg * (raw.g - state.s_g);
  state.s_h += wh * (raw.H - state.s_h);
  GnTerms out{state.s_g, state.s_h};
  ++state.count;
  return out;
}

GnTerms gn_terms(const std::vector<Residual>& residuals) {
  if (residuals.empty()) throw DomainError("gn_terms needs at least one residual");
  const Eigen::Index n = residuals.front().g.size();
  GnTerms out{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  for (const Residual& res : residuals) {
    out.g += res.r * res.g;
    out.H.selfadjointView<Eigen::Lower>().rankUpdate(res.g);
  }
  out.H = out.H.selfadjointView<Eigen::Lower>();
  return out;
}

void OptimizerConfig::validate() const {
  if (!(smoothness_weight >= 0.0)) throw DomainError("smoothness weight must be nonnegative");
  if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0)) {
    throw DomainError("EMA rates must lie in (0, 1)");
  }
  if (!(lambda0 >= 0.0)) throw DomainError("initial damping must be nonnegative");
  if (!(rho_min > 0.0 && rho_min < rho_max && rho_max < 1.0)) {
    throw DomainError("trust thresholds must satisfy 0 < rho_min < rho_max < 1");
  }
  if (!(gamma_up > 1.0 && gamma_down > 0.0 && gamma_down < 1.0)) {
    throw DomainError("damping factors must satisfy gamma_up > 1 > gamma_down > 0");
  }
  if (!(step_tol >= 0.0)) throw DomainError("stepTol must be nonnegative");
  if (max_iters < 1) throw DomainError("max_iters must be positive");
  if (obstacle_nodes < 2) throw DomainError("K_obs must be at least 2");
  if (task_nodes < 0 || limit_nodes < 0) throw DomainError("node counts must be nonnegative");
  if (!(activation_tol >= 0.0)) throw DomainError("activation tolerance must be nonnegative");
}

double working_objective(const StepProblem& problem, const Eigen::VectorXd& psi) {
  double f = 0.5 * problem.smoothness_weight * psi.dot(problem.smoothness.cwiseProduct(psi));
  if (problem.residuals) {
    Eigen::VectorXd r;
    problem.residuals->evaluate(psi, r, nullptr);
    f += 0.5 * r.squaredNorm();
  }
  return f;
}

StepReport update_step(RobotState& state, const StepProblem& problem, const OptimizerConfig& cfg) {
  const Eigen::Index n = state.psi.size();
  if (problem.smoothness.size() != n) throw DimensionError("smoothness diagonal size mismatch");
  StepReport rep;
  rep.equality_rows = problem.equalities.rows();
  rep.inequality_rows = problem.inequalities.rows();

  // 1-2) GN terms from the residuals, then EMA smoothing.
  GnTerms raw{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  if (problem.residuals) {
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    problem.residuals->evaluate(state.psi, r, &jac);
    if (r.size() > 0) {
      raw.g = jac.transpose() * r;
      raw.H = jac.transpose() * jac;
    }
  }
  const GnTerms bar = ema_update(state.ema, raw);

  // 3) Equalities: dpsi = dpsi0 + N z.
  const NullSpaceDecomp dec =
      nullspace_decompose(problem.equalities.A, problem.equalities.b, cfg.rank_tol);
  rep.dropped_rows = dec.dropped_rows;
  if (!dec.dropped_rows.empty()) {
    std::ostringstream msg;
    msg << "warning: dropped " << dec.dropped_rows.size() << " dependent equality row(s):";
    for (int i : dec.dropped_rows) {
      const RowLabel& l = problem.equalities.labels.at(i);
      msg << ' ' << to_string(l.kind) << "@t=" << l.time << '#' << l.index;
    }
    log_line(LogLevel::Info, msg.str());
  }

  // 4-5) Reduced model and projected inequalities.
  Eigen::MatrixXd p = bar.H;
  p.diagonal() += problem.smoothness_weight * problem.smoothness +
                  Eigen::VectorXd::Constant(n, state.lambda);
  const Eigen::VectorXd lin =
      problem.smoothness_weight * problem.smoothness.cwiseProduct(state.psi) + bar.g;
  const Eigen::MatrixXd& nb = dec.basis;
  ReducedQP qp;
  qp.H = nb.transpose() * p * nb;
  qp.H = 0.5 * (qp.H + qp.H.transpose()).eval();
  qp.g = nb.transpose() * (p * dec.particular + lin);
  qp.A = problem.inequalities.A * nb;
  qp.b = problem.inequalities.b - problem.inequalities.A * dec.particular;

  // 6) Solve.
  const QPSolution* warm =
      state.warm && state.warm->z.size() == qp.variables() && state.warm->duals.size() == qp.constraints()
          ? &*state.warm
          : nullptr;
  QPSolution sol;
  try {
    sol = solve_qp(qp, warm, cfg.qp_tol, cfg.qp_max_iter);
  } catch (const DomainError& e) {
    log_line(LogLevel::Info, std::string("warning: reduced QP failed: ") + e.what());
    sol.status = QPStatus::Infeasible;
    sol.z = Eigen::VectorXd::Zero(qp.variables());
  }
  rep.qp_status = sol.status;
  rep.step = dec.particular + nb * sol.z;
  if (problem.equalities.rows() > 0) {
    rep.equality_residual =
        (problem.equalities.A * rep.step - problem.equalities.b).lpNorm<Eigen::Infinity>();
  }

  const double f_now = working_objective(problem, state.psi);
  if (sol.status != QPStatus::Solved) {
    state.lambda *= cfg.gamma_up;
    rep.accepted = false;
    rep.objective = f_now;
    rep.lambda = state.lambda;
    return rep;
  }

  // 7) Trust ratio measured from the feasibility-restored point.
  const double f_feasible =
      dec.particular.isZero(0.0) ? f_now : working_objective(problem, state.psi + dec.particular);
  const double f_new = working_objective(problem, state.psi + rep.step);
  rep.ared = f_feasible - f_new;
  rep.pred = -qp.objective(sol.z);
  const double tiny = 1e-15 * std::max(1.0, std::abs(f_feasible));
  if (rep.pred <= tiny) {
    // No model decrease is available: the step is pure feasibility restoration.
    rep.rho = 1.0;
    rep.accepted = true;
  } else {
    rep.rho = rep.ared / rep.pred;
    if (rep.rho >= cfg.rho_max) {
      rep.accepted = true;
      state.lambda *= cfg.gamma_down;
    } else if (rep.rho <= cfg.rho_min) {
      rep.accepted = false;
      state.lambda *= cfg.gamma_up;
    } else {
      rep.accepted = true;
    }
  }
  if (rep.accepted) {
    state.psi += rep.step;
    state.warm = sol;
    rep.objective = f_new;
  } else {
    rep.objective = f_now;
  }
  rep.lambda = state.lambda;
  return rep;
}

bool stationarity(const Eigen::VectorXd& step_all, const Eigen::VectorXd& psi_all, double step_tol) {
  if (step_all.size() != psi_all.size()) throw DimensionError("stationarity: size mismatch");
  return step_all.norm() <= step_tol * std::max(1.0, psi_all.norm());
}

CoefficientVector init_coefficients(const BasisSet& basis, const BoundaryLift& lift,
                                    const BoundaryFlags& flags) {
  CoefficientVector psi(lift.joints(), basis.order());
  const EqualityBlock rows = boundary_equalities(basis, lift, psi, flags);
  const NullSpaceDecomp dec = nullspace_decompose(rows.A, rows.b);
  const Eigen::VectorXd q = smoothness_matrix(basis).diagonal(lift.joints());
  // Minimize (x0 + N z)'Q(x0 + N z); Q may be singular on the null space.
  const Eigen::MatrixXd h = dec.basis.transpose() * q.asDiagonal() * dec.basis;
  const Eigen::VectorXd g = dec.basis.transpose() * q.cwiseProduct(dec.particular);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(dec.basis.cols());
  if (z.size() > 0 && !g.isZero(0.0)) z = h.completeOrthogonalDecomposition().solve(-g);
  psi.values = dec.particular + dec.basis * z;
  return psi;
}

void MultiRobotProblem::validate() const {
  if (robots.empty()) throw DomainError("problem needs at least one robot");
  for (std::size_t r = 0; r < robots.size(); ++r) {
    const RobotSpec& spec = robots[r];
    spec.model.validate();
    const int m = spec.model.dof();
    const std::string who = "robot " + std::to_string(r);
    if (spec.start.size() != m || spec.goal.size() != m) {
      throw DimensionError(who + ": start/goal size must equal the joint count");
    }
    if ((spec.start_velocity.size() != 0 && spec.start_velocity.size() != m) ||
        (spec.goal_velocity.size() != 0 && spec.goal_velocity.size() != m)) {
      throw DimensionError(who + ": boundary velocity size must equal the joint count");
    }
    for (int j = 0; j < m; ++j) {
      const Joint& joint = spec.model.joints[j];
      if (spec.start[j] < joint.lower || spec.start[j] > joint.upper ||
          spec.goal[j] < joint.lower || spec.goal[j] > joint.upper) {
        throw DomainError(who + " joint " + std::to_string(j) + ": start/goal outside joint limits");
      }
    }
    spec.task.validate();
  }
  scene.validate();
  collision.validate();
  optimizer.validate();
  timescale.validate();
  if (closed_chain) {
    const int n = static_cast<int>(robots.size());
    if (closed_chain->left < 0 || closed_chain->left >= n || closed_chain->right < 0 ||
        closed_chain->right >= n || closed_chain->left == closed_chain->right) {
      throw DomainError("closed chain must name two distinct robots");
    }
    closed_chain->spec.validate();
  }
}

BoundaryLift MultiRobotProblem::lift(int robot) const {
  const RobotSpec& spec = robots.at(robot);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(spec.start.size());
  return make_boundary_lift(spec.start, spec.goal,
                            spec.start_velocity.size() ? spec.start_velocity : zero,
                            spec.goal_velocity.size() ? spec.goal_velocity : zero, basis.horizon());
}

std::vector<RobotModel> MultiRobotProblem::models() const {
  std::vector<RobotModel> out;
  for (const RobotSpec& r : robots) out.push_back(r.model);
  return out;
}

SharedSnapshot take_snapshot(const MultiRobotProblem& problem,
                             const std::vector<CoefficientVector>& psi, const ObstacleNodes& nodes) {
  const int n_robots = static_cast<int>(problem.robots.size());
  SharedSnapshot snap;
  snap.spheres.assign(nodes.times.size(), std::vector<SphereState>(n_robots));
  snap.chain_poses.resize(n_robots);
  std::vector<double> chain_nodes;
  if (problem.closed_chain) chain_nodes = closed_chain_nodes(problem.basis.horizon(), problem.closed_chain->spec);
  for (int r = 0; r < n_robots; ++r) {
    const BoundaryLift lift = problem.lift(r);
    const RobotModel& model = problem.robots[r].model;
    for (std::size_t k = 0; k < nodes.times.size(); ++k) {
      const Eigen::VectorXd q = eval_trajectory(psi[r], lift, problem.basis, nodes.times[k], 0);
      snap.spheres[k][r] = sphere_positions(model, q);
    }
    for (double t : chain_nodes) {
      snap.chain_poses[r].push_back(
          ee_pose(model, eval_trajectory(psi[r], lift, problem.basis, t, 0)));
    }
  }
  return snap;
}

EffectiveDistance effective_distance(const Scene& scene, const AllowedCollisionMatrix& acm,
                                     const std::vector<SphereState>& all_states, int robot) {
  EffectiveDistance best;
  const SphereState& own = all_states[robot];
  for (int i = 0; i < own.size(); ++i) {
    const double env = signed_distance(scene, own.centers.col(i)).distance - own.radii[i];
    const double self = self_distance(all_states, acm, acm.global_index(robot, i)).distance;
    const double d = std::min(env, self);
    if (d < best.distance) best = {d, i};
  }
  return best;
}

SceneResidualModel::SceneResidualModel(const MultiRobotProblem& problem, int robot,
                                       const AllowedCollisionMatrix& acm,
                                       const SharedSnapshot& snapshot, const ObstacleNodes& nodes)
    : problem_(problem), robot_(robot), acm_(acm), snapshot_(snapshot), nodes_(nodes),
      lift_(problem.lift(robot)) {}

std::vector<Residual> SceneResidualModel::residuals(const CoefficientVector& psi) const {
  const RobotModel& model = problem_.robots[robot_].model;
  const BasisSet& basis = problem_.basis;
  const CollisionParams& params = problem_.collision;
  const int m = model.dof();
  const int k_size = basis.size();
  std::vector<Residual> out;
  out.reserve(nodes_.times.size());

  for (std::size_t k = 0; k < nodes_.times.size(); ++k) {
    const double t = nodes_.times[k];
    const double sw = std::sqrt(nodes_.weights[k]);
    const Eigen::VectorXd q = eval_trajectory(psi, lift_, basis, t, 0);
    const Eigen::VectorXd qd =
        eval_trajectory(speed_reference_ ? *speed_reference_ : psi, lift_, basis, t, 1);
    const std::vector<Transform> frames = forward_kinematics(model, q);
    // A frozen factor takes both the configuration and the rate from the reference.
    const std::vector<Transform> speed_frames =
        speed_reference_ ? forward_kinematics(model, eval_trajectory(*speed_reference_, lift_, basis, t, 0))
                         : frames;
    std::vector<SphereState> states = snapshot_.spheres.at(k);
    states[robot_] = sphere_positions(model, frames);
    const SphereState& own = states[robot_];

    double f = 0.0;
    Eigen::RowVectorXd df = Eigen::RowVectorXd::Zero(m);
    Eigen::RowVectorXd df_vel = Eigen::RowVectorXd::Zero(m);  // multiplies dqdot/dpsi
    for (int i = 0; i < own.size(); ++i) {
      const Eigen::Vector3d c = own.centers.col(i);
      const DistanceResult env = signed_distance(problem_.scene, c);
      const double d_env = env.distance - own.radii[i];
      const SelfDistance self = self_distance(states, acm_, acm_.global_index(robot_, i));
      const double d = std::min(d_env, self.distance);
      if (d > params.epsilon) continue;

      const CollisionSphere& sphere = model.spheres[i];
      const Eigen::Matrix3Xd jac = point_jacobian(model, frames, sphere.link, sphere.center);
      const Eigen::Vector3d vel =
          speed_reference_ ? Eigen::Vector3d(point_jacobian(model, speed_frames, sphere.link, sphere.center) * qd)
                           : Eigen::Vector3d(jac * qd);
      const double speed = vel.norm();
      const double factor = params.q == 0.0 ? 1.0 : std::pow(speed, params.q);
      if (factor == 0.0) continue;
      const CostResult cost = collision_cost(d, params);
      f += factor * cost.cost;
      if (!speed_reference_ && params.q != 0.0) {
        // d|v|^q = q |v|^(q-1) v'(dv/dq dq + J dqdot)
        const double scale = params.q * factor / (speed * speed) * cost.cost;
        const Eigen::RowVector3d v = vel.transpose();
        df += scale * v * point_velocity_jacobian(model, frames, sphere.link, sphere.center, qd);
        df_vel += scale * v * jac;
      }

      Eigen::RowVectorXd grad;
      if (d_env <= self.distance) {
        grad = env.gradient.transpose() * jac;
      } else {
        const auto [other, j] = acm_.locate(self.partner);
        const Eigen::Vector3d diff = c - states[other].centers.col(j);
        const double len = diff.norm();
        const Eigen::Vector3d u = len > 0.0 ? Eigen::Vector3d(diff / len) : Eigen::Vector3d::UnitX();
        if (other == robot_) {
          const CollisionSphere& ps = model.spheres[j];
          grad = u.transpose() * (jac - point_jacobian(model, frames, ps.link, ps.center));
        } else {
          grad = u.transpose() * jac;
        }
      }
      df += factor * cost.derivative * grad;
    }

    Residual res;
    res.r = sw * f;
    res.g.resize(m * k_size);
    const Eigen::VectorXd phi = basis.eval(t, 0);
    const Eigen::VectorXd phi_dot = basis.eval(t, 1);
    for (int j = 0; j < m; ++j) {
      res.g.segment(j * k_size, k_size) = sw * (df[j] * phi + df_vel[j] * phi_dot);
    }
    out.push_back(std::move(res));
  }
  return out;
}

void SceneResidualModel::evaluate(const Eigen::VectorXd& psi, Eigen::VectorXd& r,
                                  Eigen::MatrixXd* jacobian) const {
  CoefficientVector c(problem_.robots[robot_].model.dof(), problem_.basis.order());
  if (psi.size() != c.values.size()) throw DimensionError("residual model: coefficient size mismatch");
  c.values = psi;
  const std::vector<Residual> res = residuals(c);
  r.resize(static_cast<Eigen::Index>(res.size()));
  if (jacobian) jacobian->resize(static_cast<Eigen::Index>(res.size()), psi.size());
  for (std::size_t k = 0; k < res.size(); ++k) {
    r[k] = res[k].r;
    if (jacobian) jacobian->row(k) = res[k].g.transpose();
  }
}

std::string to_string(PlanStatus status) {
  return status == PlanStatus::Converged ? "converged" : "not-converged";
}

Solution facto_plan(const MultiRobotProblem& problem) {
  problem.validate();
  const OptimizerConfig& cfg = problem.optimizer;
  const BasisSet& basis = problem.basis;
  const int n_robots = static_cast<int>(problem.robots.size());

  const AllowedCollisionMatrix acm = build_acm(problem.models(), problem.acm_overrides);
  const ObstacleNodes nodes = obstacle_nodes(basis.horizon(), cfg.obstacle_nodes);
  const Eigen::VectorXd q_weights = smoothness_matrix(basis).weights;

  std::vector<BoundaryLift> lifts;
  std::vector<RobotState> states(n_robots);
  std::vector<std::vector<double>> limit_nodes(n_robots);
  std::vector<CoefficientVector> psi;
  for (int r = 0; r < n_robots; ++r) {
    lifts.push_back(problem.lift(r));
    psi.push_back(init_coefficients(basis, lifts[r], cfg.boundary));
    states[r].psi = psi[r].values;
    states[r].ema.beta_g = cfg.beta1;
    states[r].ema.beta_h = cfg.beta2;
    states[r].lambda = cfg.lambda0;
    limit_nodes[r] = interior_nodes(basis.horizon(), cfg.limit_nodes);
  }
  const int dense_limit = std::max(8 * basis.size(), 128);

  Solution sol;
  sol.basis = basis;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    for (int r = 0; r < n_robots; ++r) psi[r].values = states[r].psi;
    const SharedSnapshot snapshot = take_snapshot(problem, psi, nodes);

    IterationRecord rec;
    rec.iteration = iter;
    std::vector<Eigen::VectorXd> steps(n_robots);
    for (int r = 0; r < n_robots; ++r) {
      const RobotSpec& spec = problem.robots[r];
      const RobotModel& model = spec.model;
      limit_nodes[r] = refine_limit_nodes(basis, lifts[r], psi[r], model, limit_nodes[r],
                                          dense_limit, 4 * cfg.limit_nodes);

      StepProblem sp;
      sp.smoothness = q_weights.replicate(model.dof(), 1);
      sp.smoothness_weight = cfg.smoothness_weight;
      SceneResidualModel residuals(problem, r, acm, snapshot, nodes);
      residuals.freeze_speed(psi[r]);
      sp.residuals = &residuals;
      sp.equalities = boundary_equalities(basis, lifts[r], psi[r], cfg.boundary);
      sp.equalities.append(task_equalities(model, basis, lifts[r], psi[r], spec.task, cfg.task_nodes,
                                           cfg.activation_tol, sp.equalities.rows()));
      if (problem.closed_chain &&
          (problem.closed_chain->left == r || problem.closed_chain->right == r)) {
        const bool is_left = problem.closed_chain->left == r;
        const int partner = is_left ? problem.closed_chain->right : problem.closed_chain->left;
        sp.equalities.append(closed_chain_equalities(model, basis, lifts[r], psi[r],
                                                     problem.closed_chain->spec, is_left,
                                                     snapshot.chain_poses[partner],
                                                     sp.equalities.rows()));
      }
      sp.inequalities = joint_limit_inequalities(basis, lifts[r], psi[r], model, limit_nodes[r]);

      const StepReport rep = update_step(states[r], sp, cfg);
      steps[r] = rep.step;
      rec.objective += rep.objective;
      rec.lambda.push_back(rep.lambda);
      rec.equality_rows.push_back(rep.equality_rows);
      rec.inequality_rows.push_back(rep.inequality_rows);
      rec.accepted.push_back(rep.accepted);
      rec.equality_residual.push_back(rep.equality_residual);
      rec.psi.push_back(states[r].psi);
    }

    Eigen::Index total = 0;
    for (const auto& s : steps) total += s.size();
    Eigen::VectorXd step_all(total), psi_all(total);
    Eigen::Index off = 0;
    for (int r = 0; r < n_robots; ++r) {
      step_all.segment(off, steps[r].size()) = steps[r];
      psi_all.segment(off, steps[r].size()) = states[r].psi;
      off += steps[r].size();
    }
    rec.step_norm = step_all.norm();
    sol.log.push_back(rec);
    sol.iterations = iter + 1;

    if (log_level() == LogLevel::Trace) {
      std::ostringstream msg;
      msg << "iter " << iter << " F=" << rec.objective << " |dpsi|=" << rec.step_norm;
      for (int r = 0; r < n_robots; ++r) {
        msg << " [r" << r << " lambda=" << rec.lambda[r] << " eq=" << rec.equality_rows[r]
            << " ineq=" << rec.inequality_rows[r] << (rec.accepted[r] ? " acc" : " rej") << ']';
      }
      log_line(LogLevel::Trace, msg.str());
    }
    if (stationarity(step_all, psi_all, cfg.step_tol)) {
      sol.status = PlanStatus::Converged;
      break;
    }
  }

  for (int r = 0; r < n_robots; ++r) {
    psi[r].values = states[r].psi;
    sol.robots.push_back({psi[r], lifts[r]});
  }
  sol.final_T = basis.horizon();
  {
    std::ostringstream msg;
    msg << "plan " << to_string(sol.status) << " after " << sol.iterations << " iteration(s)";
    log_line(LogLevel::Info, msg.str());
  }

  if (problem.run_timescale) {
    std::vector<ScaledTrajectory> trajectories;
    for (int r = 0; r < n_robots; ++r) {
      trajectories.push_back({&problem.robots[r].model, sol.robots[r].psi, sol.robots[r].lift});
    }
    sol.scale = time_scale(trajectories, basis, problem.timescale, problem.gravity);
    sol.final_T = sol.scale->final_T;
  }
  return sol;
}

}  // namespace facto
