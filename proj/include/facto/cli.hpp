#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facto/optimizer.hpp"

namespace facto {

/// Process exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitNotConverged = 2,
  kExitInfeasible = 3,
};

struct ValidationOptions {
  int samples = 2000;
  double task_tol = 5e-3;        // max |h| over dense times
  double chain_pos_rel = 1e-3;   // |e_pos| <= chain_pos_rel * |d0|
  double chain_post_tol = 1e-4;  // e_post
};

struct ValidationReport {
  int samples = 0;
  double horizon = 0.0;

  double min_distance = 0.0;  // effective distance over all robots and samples
  bool distance_ok = true;

  std::vector<Eigen::VectorXd> limit_margins;  // per robot, per joint: min distance to a limit
  bool limits_ok = true;

  bool velocity_checked = false;  // only after time scaling
  std::vector<Eigen::VectorXd> velocity_margins;  // V_lim - max |qdot|
  bool velocity_ok = true;

  double max_task_error = 0.0;  // max |h|_inf over robots with a task range
  bool task_ok = true;

  bool chain_checked = false;
  double max_chain_pos = 0.0;
  double chain_pos_tol = 0.0;
  double max_chain_post = 0.0;
  bool chain_ok = true;

  std::vector<double> roughness;  // per robot, normalized T = 1

  bool pass = false;
};

/// (K-1) * sum_k |theta_{k-1} - 2 theta_k + theta_{k+1}| for uniformly spaced
/// columns of `samples` (joints x K) on a unit horizon.
double roughness(const Eigen::MatrixXd& samples);

/// Throws SchemaError if the solution does not fit the problem's robots and basis.
void check_compatible(const MultiRobotProblem& problem, const Solution& solution);

ValidationReport validate_solution(const MultiRobotProblem& problem, const Solution& solution,
                                   const ValidationOptions& options = {});

nlohmann::json report_to_json(const ValidationReport& report);

/// Horizon the solution executes on: the scaled T when available.
double execution_horizon(const Solution& solution);

/// Uniform times on [0, T]: either `count` points (endpoints included) or a
/// `dt` grid that always ends at T.
std::vector<double> sample_times(double horizon, std::optional<double> dt, std::optional<int> count);

/// CSV with time, joint_*, vel_*, acc_* per robot; one section per robot.
void write_samples_csv(const Solution& solution, const std::vector<double>& times, std::ostream& out);

/// Re-runs time scaling on a solution, taking its current horizon as the
/// reference. psi and the lift are left untouched.
Solution rescale_solution(const MultiRobotProblem& problem, const Solution& solution);

/// Maps an exception to the exit-code contract.
int exit_code_for(const std::exception& e);

// Command drivers. Each returns an exit code and reports errors on stderr.
int command_plan(const std::string& problem_path, const std::string& out_path,
                 const std::vector<std::string>& overrides);
int command_validate(const std::string& problem_path, const std::string& solution_path, int samples,
                     const std::optional<std::string>& report_path);
int command_timescale(const std::string& problem_path, const std::string& solution_path,
                      const std::string& out_path);
int command_sample(const std::string& solution_path, std::optional<double> dt,
                   std::optional<int> count, const std::string& csv_path);

}  // namespace facto
