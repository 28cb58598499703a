#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "facto/cli.hpp"
#include "facto/error.hpp"
#include "facto/io.hpp"

using namespace facto;

namespace {

const std::string kData = FACTO_TEST_DATA;
const std::string kCli = FACTO_CLI_PATH;

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("facto_test_" + name)).string();
}

// Planning is the slow part; share one solution across tests.
const MultiRobotProblem& empty_problem() {
  static const MultiRobotProblem p = load_problem(kData + "/two_link_empty.json");
  return p;
}

const Solution& empty_solution() {
  static const Solution s = facto_plan(empty_problem());
  return s;
}

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2> " + tmp_path("stderr.txt");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string last_stderr() {
  std::ifstream in(tmp_path("stderr.txt"));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, SolutionRoundTripIsBitExact) {
  const Solution& sol = empty_solution();
  const std::string path = tmp_path("roundtrip.json");
  write_solution(sol, path);
  const Solution back = read_solution(path);
  ASSERT_EQ(back.robots.size(), sol.robots.size());
  EXPECT_EQ(back.final_T, sol.final_T);
  EXPECT_EQ(back.basis.horizon(), sol.basis.horizon());
  for (std::size_t r = 0; r < sol.robots.size(); ++r) {
    const Eigen::VectorXd& a = sol.robots[r].psi.values;
    const Eigen::VectorXd& b = back.robots[r].psi.values;
    ASSERT_EQ(a.size(), b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]) << "coefficient " << i;
  }
  // Re-serializing gives the same document.
  EXPECT_EQ(solution_to_json(back).dump(), solution_to_json(sol).dump());
}

TEST(Cli, SchemaErrorNamesFieldPath) {
  nlohmann::json doc = read_json_file(kData + "/two_link_empty.json");
  doc["robots"][0]["start"] = "oops";
  try {
    parse_problem(doc);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("robots[0].start"), std::string::npos) << e.what();
  }
  doc = read_json_file(kData + "/two_link_empty.json");
  doc["basis"]["bogus"] = 1;
  EXPECT_THROW(parse_problem(doc), SchemaError);

  nlohmann::json o = read_json_file(kData + "/two_link_empty.json");
  apply_override(o, "basis.N=9");
  apply_override(o, "robots.0.goal=[1.0,0.5]");
  EXPECT_EQ(o["basis"]["N"], 9);
  EXPECT_EQ(o["robots"][0]["goal"][1], 0.5);
  EXPECT_THROW(apply_override(o, "robots.3.goal=[0,0]"), SchemaError);
  EXPECT_THROW(apply_override(o, "basisN"), SchemaError);
}

TEST(Cli, RoughnessExamples) {
  Eigen::MatrixXd line(1, 5);
  line << 0, 0.25, 0.5, 0.75, 1.0;
  EXPECT_NEAR(roughness(line), 0.0, 1e-15);
  Eigen::MatrixXd bump(1, 3);
  bump << 0, 0, 1;
  EXPECT_DOUBLE_EQ(roughness(bump), 2.0);
}

TEST(Cli, SampleTimes) {
  const std::vector<double> two = sample_times(2.5, std::nullopt, 2);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0], 0.0);
  EXPECT_EQ(two[1], 2.5);
  const std::vector<double> grid = sample_times(1.0, 0.3, std::nullopt);
  ASSERT_EQ(grid.size(), 5u);  // 0, .3, .6, .9, 1
  EXPECT_EQ(grid.back(), 1.0);
  EXPECT_THROW(sample_times(1.0, 0.1, 3), SchemaError);
  EXPECT_THROW(sample_times(1.0, std::nullopt, 1), DomainError);
  EXPECT_THROW(sample_times(1.0, -0.1, std::nullopt), DomainError);
}

TEST(Cli, SampledCsvMatchesBoundariesAndDerivatives) {
  const Solution& sol = empty_solution();
  const double T = execution_horizon(sol);
  const double dt = 1e-3;
  std::vector<double> times;
  for (int i = 0; i <= 20; ++i) times.push_back(T * i / 20.0);
  times.push_back(0.4 * T + dt);
  std::stringstream csv;
  write_samples_csv(sol, times, csv);

  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "time,joint_0,joint_1,vel_0,vel_1,acc_0,acc_1");
  std::vector<std::vector<double>> rows;
  while (std::getline(csv, line)) {
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    ASSERT_EQ(row.size(), 7u);
    rows.push_back(row);
  }
  ASSERT_EQ(rows.size(), times.size());
  const Eigen::VectorXd& start = empty_problem().robots[0].start;
  const Eigen::VectorXd& goal = empty_problem().robots[0].goal;
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(rows.front()[1 + j], start[j], 1e-9);
    EXPECT_NEAR(rows[20][1 + j], goal[j], 1e-9);
    EXPECT_NEAR(rows.front()[3 + j], 0.0, 1e-9);
    // Central difference around 0.4 T from the CSV's own positions.
    const double fd = (rows.back()[1 + j] - rows[8][1 + j]) / dt;
    const double mid = 0.5 * (rows.back()[3 + j] + rows[8][3 + j]);
    EXPECT_NEAR(fd, mid, 1e-3 * std::max(1.0, std::abs(mid)));
  }
}

TEST(Cli, ValidationDetectsInjectedOverlap) {
  const ValidationReport ok = validate_solution(empty_problem(), empty_solution());
  EXPECT_TRUE(ok.pass);
  EXPECT_TRUE(std::isinf(ok.min_distance));

  // A sphere sitting on the start pose of the second link.
  nlohmann::json doc = read_json_file(kData + "/two_link_empty.json");
  const double a = 0.2, b = 0.5;
  doc["scene"] = {{"primitives",
                   {{{"type", "sphere"},
                     {"center", {std::cos(a) + 0.5 * std::cos(b), std::sin(a) + 0.5 * std::sin(b), 0.0}},
                     {"radius", 0.1}}}}};
  const MultiRobotProblem blocked = parse_problem(doc);
  const ValidationReport bad = validate_solution(blocked, empty_solution());
  EXPECT_FALSE(bad.pass);
  EXPECT_FALSE(bad.distance_ok);
  EXPECT_LT(bad.min_distance, 0.0);
}

TEST(Cli, RescaleIsInvariantForScaledSolution) {
  const Solution& sol = empty_solution();
  ASSERT_TRUE(sol.scale.has_value());
  const Solution again = rescale_solution(empty_problem(), sol);
  EXPECT_NEAR(again.final_T, sol.final_T, 1e-12 * sol.final_T);
  for (const RobotScaleRecord& rec : again.scale->robots) {
    for (double s : rec.sigmas) EXPECT_EQ(s, 1.0);
  }

  // Tighter effort: longer horizon, same normalized path.
  MultiRobotProblem tight = empty_problem();
  for (Joint& j : tight.robots[0].model.joints) j.effort_limit = 22.0;
  const Solution slow = rescale_solution(tight, sol);
  EXPECT_GT(slow.final_T, sol.final_T);
  const BasisSet b0 = sol.basis.with_horizon(sol.final_T);
  const BasisSet b1 = sol.basis.with_horizon(slow.final_T);
  for (double s : {0.1, 0.37, 0.8}) {
    const Eigen::VectorXd q0 = eval_trajectory(sol.robots[0].psi, sol.robots[0].lift, b0, s * sol.final_T, 0);
    const Eigen::VectorXd q1 = eval_trajectory(slow.robots[0].psi, slow.robots[0].lift, b1, s * slow.final_T, 0);
    EXPECT_LE((q0 - q1).norm(), 1e-12);
  }
}

TEST(Cli, ExitCodes) {
  const std::string sol = tmp_path("cli_sol.json");
  const std::string empty = kData + "/two_link_empty.json";
  EXPECT_EQ(run("plan -p " + empty + " -o " + sol), kExitOk);
  EXPECT_EQ(run("validate -p " + empty + " -s " + sol + " -o " + tmp_path("report.json")), kExitOk);
  EXPECT_EQ(run("sample -s " + sol + " --count 5 -o " + tmp_path("s.csv")), kExitOk);
  EXPECT_EQ(run("sample -s " + sol + " --count 5 --dt 0.1 -o " + tmp_path("s.csv")), kExitUsage);
  EXPECT_EQ(run("plan -p " + empty + " -o " + sol + " --set robots.0.start=\\\"x\\\""), kExitUsage);
  EXPECT_NE(last_stderr().find("robots[0].start"), std::string::npos) << last_stderr();
  EXPECT_EQ(run("plan -p /nonexistent.json -o " + sol), kExitUsage);

  // A start pose the robot cannot hold against gravity.
  EXPECT_EQ(run("plan -p " + empty + " -o " + sol +
                " --set robots.0.model.joints.0.effort_limit=1.0"),
            kExitInfeasible);
}
