#include "facto/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include "facto/error.hpp"
#include "facto/io.hpp"
#include "facto/log.hpp"

namespace facto {
namespace {

std::string fmt9(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

void report_error(const std::exception& e) { std::cerr << "error: " << e.what() << '\n'; }

}  // namespace

double roughness(const Eigen::MatrixXd& samples) {
  const Eigen::Index k = samples.cols();
  if (k < 3) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 1; i + 1 < k; ++i) {
    sum += (samples.col(i - 1) - 2.0 * samples.col(i) + samples.col(i + 1)).norm();
  }
  return static_cast<double>(k - 1) * sum;
}

void check_compatible(const MultiRobotProblem& problem, const Solution& solution) {
  if (solution.basis.family() != problem.basis.family() ||
      solution.basis.order() != problem.basis.order()) {
    throw SchemaError("solution basis (" + std::string(to_string(solution.basis.family())) + ", N=" +
                      std::to_string(solution.basis.order()) + ") does not match the problem basis");
  }
  if (solution.robots.size() != problem.robots.size()) {
    throw SchemaError("solution has " + std::to_string(solution.robots.size()) +
                      " robot(s), problem has " + std::to_string(problem.robots.size()));
  }
  for (std::size_t r = 0; r < problem.robots.size(); ++r) {
    if (solution.robots[r].psi.joints != problem.robots[r].model.dof() ||
        solution.robots[r].lift.joints() != problem.robots[r].model.dof()) {
      throw SchemaError("robots[" + std::to_string(r) + "]: joint count does not match the model");
    }
  }
  if (!(solution.final_T > 0.0) && !(solution.basis.horizon() > 0.0)) {
    throw SchemaError("solution has no positive horizon");
  }
}

double execution_horizon(const Solution& solution) {
  return solution.final_T > 0.0 ? solution.final_T : solution.basis.horizon();
}

ValidationReport validate_solution(const MultiRobotProblem& problem, const Solution& solution,
                                   const ValidationOptions& options) {
  check_compatible(problem, solution);
  if (options.samples < 2) throw DomainError("validation needs at least 2 samples");
  const int n_robots = static_cast<int>(problem.robots.size());
  const int k = options.samples;
  const double horizon = execution_horizon(solution);
  const BasisSet basis = solution.basis.with_horizon(horizon);
  const AllowedCollisionMatrix acm = build_acm(problem.models(), problem.acm_overrides);

  ValidationReport rep;
  rep.samples = k;
  rep.horizon = horizon;
  rep.min_distance = std::numeric_limits<double>::infinity();
  rep.velocity_checked = solution.scale.has_value();
  std::vector<Eigen::MatrixXd> positions(n_robots);
  std::vector<Eigen::VectorXd> peak_speed(n_robots);
  for (int r = 0; r < n_robots; ++r) {
    const int m = problem.robots[r].model.dof();
    rep.limit_margins.push_back(Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity()));
    positions[r].resize(m, k);
    peak_speed[r] = Eigen::VectorXd::Zero(m);
  }
  if (problem.closed_chain) {
    rep.chain_checked = true;
    rep.chain_pos_tol = options.chain_pos_rel * problem.closed_chain->spec.reference.translation.norm();
  }

  for (int i = 0; i < k; ++i) {
    const double t = horizon * i / (k - 1);
    std::vector<SphereState> states(n_robots);
    std::vector<Eigen::VectorXd> qs(n_robots);
    for (int r = 0; r < n_robots; ++r) {
      const RobotSpec& spec = problem.robots[r];
      const RobotSolution& rs = solution.robots[r];
      qs[r] = eval_trajectory(rs.psi, rs.lift, basis, t, 0);
      positions[r].col(i) = qs[r];
      states[r] = sphere_positions(spec.model, qs[r]);
      const Eigen::VectorXd lo = qs[r] - spec.model.lower_limits();
      const Eigen::VectorXd hi = spec.model.upper_limits() - qs[r];
      rep.limit_margins[r] = rep.limit_margins[r].cwiseMin(lo.cwiseMin(hi));
      if (rep.velocity_checked) {
        peak_speed[r] =
            peak_speed[r].cwiseMax(eval_trajectory(rs.psi, rs.lift, basis, t, 1).cwiseAbs());
      }
      if (spec.task.is_bounded()) {
        const TaskError te = task_error(spec.model, qs[r], spec.task);
        rep.max_task_error = std::max(rep.max_task_error, te.h.lpNorm<Eigen::Infinity>());
      }
    }
    for (int r = 0; r < n_robots; ++r) {
      rep.min_distance = std::min(rep.min_distance, effective_distance(problem.scene, acm, states, r).distance);
    }
    if (problem.closed_chain) {
      const ClosedChainLink& cc = *problem.closed_chain;
      const Transform left = ee_pose(problem.robots[cc.left].model, qs[cc.left]);
      const Transform right = ee_pose(problem.robots[cc.right].model, qs[cc.right]);
      const ClosedChainErrors e = closed_chain_errors(left, right, cc.spec);
      rep.max_chain_pos = std::max(rep.max_chain_pos, std::abs(e.e_pos));
      rep.max_chain_post = std::max(rep.max_chain_post, e.e_post);
    }
  }

  rep.distance_ok = rep.min_distance > 0.0;
  for (int r = 0; r < n_robots; ++r) {
    if (rep.limit_margins[r].minCoeff() < 0.0) rep.limits_ok = false;
    if (rep.velocity_checked) {
      rep.velocity_margins.push_back(problem.robots[r].model.velocity_limits() - peak_speed[r]);
      if (rep.velocity_margins.back().minCoeff() < 0.0) rep.velocity_ok = false;
    }
    // Roughness uses normalized time, independent of the execution horizon.
    rep.roughness.push_back(roughness(positions[r]));
  }
  rep.task_ok = rep.max_task_error <= options.task_tol;
  if (rep.chain_checked) {
    rep.chain_ok = rep.max_chain_pos <= rep.chain_pos_tol && rep.max_chain_post <= options.chain_post_tol;
  }
  rep.pass = rep.distance_ok && rep.limits_ok && rep.velocity_ok && rep.task_ok && rep.chain_ok;
  return rep;
}

nlohmann::json report_to_json(const ValidationReport& rep) {
  nlohmann::json doc;
  doc["samples"] = rep.samples;
  doc["horizon"] = rep.horizon;
  doc["pass"] = rep.pass;
  doc["distance"] = {{"min", number_json(rep.min_distance)}, {"pass", rep.distance_ok}};
  nlohmann::json limits = nlohmann::json::array();
  for (const auto& m : rep.limit_margins) limits.push_back(vector_json(m));
  doc["joint_limits"] = {{"margins", limits}, {"pass", rep.limits_ok}};
  if (rep.velocity_checked) {
    nlohmann::json vel = nlohmann::json::array();
    for (const auto& m : rep.velocity_margins) vel.push_back(vector_json(m));
    doc["velocity_limits"] = {{"margins", vel}, {"pass", rep.velocity_ok}};
  }
  doc["task"] = {{"max_abs_h", rep.max_task_error}, {"pass", rep.task_ok}};
  if (rep.chain_checked) {
    doc["closed_chain"] = {{"max_abs_e_pos", rep.max_chain_pos},
                           {"e_pos_tol", rep.chain_pos_tol},
                           {"max_e_post", rep.max_chain_post},
                           {"pass", rep.chain_ok}};
  }
  doc["roughness"] = rep.roughness;
  return doc;
}

std::vector<double> sample_times(double horizon, std::optional<double> dt, std::optional<int> count) {
  if (!(horizon > 0.0)) throw DomainError("sampling needs a positive horizon");
  if (dt.has_value() == count.has_value()) throw SchemaError("give exactly one of --dt and --count");
  std::vector<double> times;
  if (count) {
    if (*count < 2) throw DomainError("--count must be at least 2");
    for (int i = 0; i < *count; ++i) times.push_back(horizon * i / (*count - 1));
    return times;
  }
  if (!(*dt > 0.0)) throw DomainError("--dt must be positive");
  const double n = horizon / *dt;
  if (n > 1e8) throw CapacityError("--dt yields more than 1e8 samples");
  for (long i = 0;; ++i) {
    const double t = static_cast<double>(i) * *dt;
    if (t >= horizon - 1e-12 * std::max(1.0, horizon)) break;
    times.push_back(t);
  }
  times.push_back(horizon);
  return times;
}

void write_samples_csv(const Solution& solution, const std::vector<double>& times, std::ostream& out) {
  const BasisSet basis = solution.basis.with_horizon(execution_horizon(solution));
  const bool sections = solution.robots.size() > 1;
  for (std::size_t r = 0; r < solution.robots.size(); ++r) {
    const RobotSolution& rs = solution.robots[r];
    const int m = rs.psi.joints;
    if (sections) out << "# robot " << r << '\n';
    out << "time";
    for (const char* prefix : {"joint_", "vel_", "acc_"}) {
      for (int j = 0; j < m; ++j) out << ',' << prefix << j;
    }
    out << '\n';
    for (double t : times) {
      out << fmt9(t);
      for (int d = 0; d < 3; ++d) {
        const Eigen::VectorXd v = eval_trajectory(rs.psi, rs.lift, basis, t, d);
        for (int j = 0; j < m; ++j) out << ',' << fmt9(v[j]);
      }
      out << '\n';
    }
  }
}

Solution rescale_solution(const MultiRobotProblem& problem, const Solution& solution) {
  check_compatible(problem, solution);
  std::vector<ScaledTrajectory> trajectories;
  for (std::size_t r = 0; r < problem.robots.size(); ++r) {
    trajectories.push_back({&problem.robots[r].model, solution.robots[r].psi, solution.robots[r].lift});
  }
  Solution out = solution;
  const BasisSet reference = solution.basis.with_horizon(execution_horizon(solution));
  out.scale = time_scale(trajectories, reference, problem.timescale, problem.gravity);
  out.final_T = out.scale->final_T;
  return out;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InfeasibleEqualitiesError*>(&e) ||
      dynamic_cast<const StaticallyInfeasibleError*>(&e) ||
      dynamic_cast<const OverConstrainedError*>(&e)) {
    return kExitInfeasible;
  }
  return kExitUsage;
}

int command_plan(const std::string& problem_path, const std::string& out_path,
                 const std::vector<std::string>& overrides) {
  try {
    const MultiRobotProblem problem = load_problem(problem_path, overrides);
    const Solution sol = facto_plan(problem);
    write_solution(sol, out_path);
    const bool scaled = !sol.scale || sol.scale->scaled;
    if (!scaled) log_line(LogLevel::Info, "warning: time scaling did not settle within K_max passes");
    return sol.status == PlanStatus::Converged && scaled ? kExitOk : kExitNotConverged;
  } catch (const std::exception& e) {
    report_error(e);
    return exit_code_for(e);
  }
}

int command_validate(const std::string& problem_path, const std::string& solution_path, int samples,
                     const std::optional<std::string>& report_path) {
  try {
    const MultiRobotProblem problem = load_problem(problem_path);
    const Solution sol = read_solution(solution_path);
    ValidationOptions opt;
    opt.samples = samples;
    const ValidationReport rep = validate_solution(problem, sol, opt);
    const nlohmann::json doc = report_to_json(rep);
    if (report_path) {
      write_json_file(doc, *report_path);
    } else {
      std::cout << doc.dump(2) << '\n';
    }
    log_line(LogLevel::Info, std::string("validation ") + (rep.pass ? "passed" : "failed"));
    return rep.pass ? kExitOk : kExitNotConverged;
  } catch (const std::exception& e) {
    report_error(e);
    return exit_code_for(e);
  }
}

int command_timescale(const std::string& problem_path, const std::string& solution_path,
                      const std::string& out_path) {
  try {
    const MultiRobotProblem problem = load_problem(problem_path);
    const Solution sol = rescale_solution(problem, read_solution(solution_path));
    write_solution(sol, out_path);
    return sol.scale->scaled ? kExitOk : kExitNotConverged;
  } catch (const std::exception& e) {
    report_error(e);
    return exit_code_for(e);
  }
}

int command_sample(const std::string& solution_path, std::optional<double> dt,
                   std::optional<int> count, const std::string& csv_path) {
  try {
    const Solution sol = read_solution(solution_path);
    const std::vector<double> times = sample_times(execution_horizon(sol), dt, count);
    std::ofstream out(csv_path);
    if (!out) throw Error(csv_path + ": cannot write file");
    write_samples_csv(sol, times, out);
    if (!out) throw Error(csv_path + ": write failed");
    return kExitOk;
  } catch (const std::exception& e) {
    report_error(e);
    return exit_code_for(e);
  }
}

}  // namespace facto
