#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facto/optimizer.hpp"

namespace facto {

/// Parses a problem document. `base_dir` resolves relative grid paths.
/// Violations raise SchemaError naming the offending field path.
MultiRobotProblem parse_problem(const nlohmann::json& doc, const std::string& base_dir = ".");

/// Applies one `dotted.path=value` override in place. The value is read as
/// JSON when it parses, otherwise as a string. Array elements are addressed by
/// index (`robots.0.start`).
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Non-finite values become the strings "inf", "-inf" and "nan"; plain JSON has no infinity.
nlohmann::json number_json(double x);
nlohmann::json vector_json(const Eigen::VectorXd& v);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const nlohmann::json& doc, const std::string& path);

/// Reads, overrides and parses a problem file.
MultiRobotProblem load_problem(const std::string& path,
                               const std::vector<std::string>& overrides = {});

nlohmann::json solution_to_json(const Solution& solution);
Solution solution_from_json(const nlohmann::json& doc);

void write_solution(const Solution& solution, const std::string& path);
Solution read_solution(const std::string& path);

}  // namespace facto
