// Command-line front end: plan, validate, timescale, sample.
#include <CLI11.hpp>

#include <optional>
#include <string>
#include <vector>

#include "facto/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Trajectory optimization in orthogonal-basis coefficient space"};
  app.require_subcommand(1);

  std::string problem, solution, out, report;
  std::vector<std::string> overrides;
  int samples = 2000;
  double dt = 0.0;
  int count = 0;

  auto* plan = app.add_subcommand("plan", "Optimize a trajectory and write the solution");
  plan->add_option("-p,--problem", problem, "Problem file")->required()->check(CLI::ExistingFile);
  plan->add_option("-o,--output", out, "Solution file to write")->required();
  plan->add_option("--set", overrides, "Override a problem field, e.g. optimizer.rho=0.01");

  auto* validate = app.add_subcommand("validate", "Dense continuous-time checks of a solution");
  validate->add_option("-p,--problem", problem)->required()->check(CLI::ExistingFile);
  validate->add_option("-s,--solution", solution)->required()->check(CLI::ExistingFile);
  validate->add_option("--samples", samples, "Uniform sample count")->check(CLI::PositiveNumber);
  auto* report_opt = validate->add_option("-o,--output", report, "Report file (stdout if omitted)");

  auto* scale = app.add_subcommand("timescale", "Re-run time scaling on a solution");
  scale->add_option("-p,--problem", problem)->required()->check(CLI::ExistingFile);
  scale->add_option("-s,--solution", solution)->required()->check(CLI::ExistingFile);
  scale->add_option("-o,--output", out)->required();

  auto* sample = app.add_subcommand("sample", "Write sampled positions, velocities, accelerations as CSV");
  sample->add_option("-s,--solution", solution)->required()->check(CLI::ExistingFile);
  auto* dt_opt = sample->add_option("--dt", dt, "Sample spacing in seconds");
  auto* count_opt = sample->add_option("--count", count, "Number of samples including both ends");
  dt_opt->excludes(count_opt);
  sample->add_option("-o,--output", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : facto::kExitUsage;
  }

  if (*plan) return facto::command_plan(problem, out, overrides);
  if (*validate) {
    std::optional<std::string> path;
    if (*report_opt) path = report;
    return facto::command_validate(problem, solution, samples, path);
  }
  if (*scale) return facto::command_timescale(problem, solution, out);
  std::optional<double> dt_arg;
  std::optional<int> count_arg;
  if (*dt_opt) dt_arg = dt;
  if (*count_opt) count_arg = count;
  return facto::command_sample(solution, dt_arg, count_arg, out);
}
