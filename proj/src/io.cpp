#include "facto/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "facto/error.hpp"

namespace facto {
namespace {

using nlohmann::json;

// Read-only view of a JSON value that remembers where it came from, so every
// schema error names the field path.
class Field {
 public:
  Field(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return value_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw SchemaError(path_ + ": " + what);
  }

  bool has(const char* key) const { return value_.is_object() && value_.contains(key); }

  Field operator[](const char* key) const {
    if (!value_.is_object()) fail("expected an object");
    auto it = value_.find(key);
    if (it == value_.end()) throw SchemaError(join(key) + ": missing required field");
    return {*it, join(key)};
  }

  Field operator[](std::size_t i) const {
    if (!value_.is_array()) fail("expected an array");
    if (i >= value_.size()) fail("index out of range");
    return {value_[i], path_ + "[" + std::to_string(i) + "]"};
  }

  std::size_t size() const {
    if (!value_.is_array()) fail("expected an array");
    return value_.size();
  }

  // Rejects keys outside `allowed` to catch misspelled tunables.
  void only(std::initializer_list<const char*> allowed) const {
    if (!value_.is_object()) fail("expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = value_.begin(); it != value_.end(); ++it) {
      if (!ok.count(it.key())) throw SchemaError(join(it.key().c_str()) + ": unknown field");
    }
  }

  double number() const {
    if (value_.is_number()) return value_.get<double>();
    if (value_.is_string()) {
      const std::string s = value_.get<std::string>();
      if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
      if (s == "-inf" || s == "-infinity") return -std::numeric_limits<double>::infinity();
    }
    fail("expected a number");
  }

  int integer() const {
    if (!value_.is_number_integer()) fail("expected an integer");
    return value_.get<int>();
  }

  bool boolean() const {
    if (!value_.is_boolean()) fail("expected true or false");
    return value_.get<bool>();
  }

  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }

  Eigen::VectorXd vector(int expected = -1) const {
    const std::size_t n = size();
    if (expected >= 0 && n != static_cast<std::size_t>(expected)) {
      fail("expected " + std::to_string(expected) + " entries, got " + std::to_string(n));
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = (*this)[i].number();
    return v;
  }

  Eigen::Vector3d vec3() const { return vector(3); }

  template <typename T>
  void read(const char* key, T& out) const {
    if (!has(key)) return;
    const Field f = (*this)[key];
    if constexpr (std::is_same_v<T, int>) {
      out = f.integer();
    } else if constexpr (std::is_same_v<T, bool>) {
      out = f.boolean();
    } else {
      out = f.number();
    }
  }

 private:
  std::string join(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& value_;
  std::string path_;
};

Transform parse_transform(const Field& f) {
  f.only({"translation", "zyx", "rotation"});
  Transform t;
  if (f.has("translation")) t.translation = f["translation"].vec3();
  if (f.has("zyx") && f.has("rotation")) f.fail("give either zyx or rotation, not both");
  if (f.has("zyx")) {
    const Eigen::Vector3d a = f["zyx"].vec3();
    t.rotation = rot_zyx(a[0], a[1], a[2]);
  }
  if (f.has("rotation")) {
    const Field r = f["rotation"];
    if (r.size() != 3) r.fail("expected 3 rows");
    for (std::size_t i = 0; i < 3; ++i) t.rotation.row(static_cast<Eigen::Index>(i)) = r[i].vec3().transpose();
    const double err = (t.rotation.transpose() * t.rotation - Rotation::Identity()).norm();
    if (err > 1e-6 || t.rotation.determinant() < 0.0) r.fail("not a rotation matrix");
  }
  return t;
}

Eigen::Matrix3d parse_inertia(const Field& f) {
  const std::size_t n = f.size();
  if (n == 3 && f[std::size_t{0}].raw().is_array()) {
    Eigen::Matrix3d m;
    for (std::size_t i = 0; i < 3; ++i) m.row(static_cast<Eigen::Index>(i)) = f[i].vec3().transpose();
    return m;
  }
  if (n == 3) return f.vec3().asDiagonal();
  f.fail("expected a 3x3 matrix or 3 principal moments");
}

RobotModel parse_model(const Field& f) {
  f.only({"name", "base", "tool", "joints", "links", "spheres"});
  RobotModel m;
  if (f.has("name")) m.name = f["name"].string();
  if (f.has("base")) m.base = parse_transform(f["base"]);
  if (f.has("tool")) m.tool = parse_transform(f["tool"]);
  const Field joints = f["joints"];
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const Field j = joints[i];
    j.only({"type", "axis", "origin", "lower", "upper", "velocity_limit", "effort_limit"});
    Joint joint;
    if (j.has("type")) {
      const std::string type = j["type"].string();
      if (type == "revolute") {
        joint.type = JointType::Revolute;
      } else if (type == "prismatic") {
        joint.type = JointType::Prismatic;
      } else {
        j["type"].fail("expected revolute or prismatic");
      }
    }
    if (j.has("axis")) joint.axis = j["axis"].vec3();
    if (j.has("origin")) joint.origin = parse_transform(j["origin"]);
    j.read("lower", joint.lower);
    j.read("upper", joint.upper);
    j.read("velocity_limit", joint.velocity_limit);
    j.read("effort_limit", joint.effort_limit);
    m.joints.push_back(joint);
  }
  if (f.has("links")) {
    const Field links = f["links"];
    for (std::size_t i = 0; i < links.size(); ++i) {
      const Field l = links[i];
      l.only({"mass", "com", "inertia"});
      Link link;
      l.read("mass", link.mass);
      if (l.has("com")) link.com = l["com"].vec3();
      if (l.has("inertia")) link.inertia = parse_inertia(l["inertia"]);
      m.links.push_back(link);
    }
  } else {
    m.links.assign(m.joints.size(), Link{});
  }
  if (f.has("spheres")) {
    const Field spheres = f["spheres"];
    for (std::size_t i = 0; i < spheres.size(); ++i) {
      const Field s = spheres[i];
      s.only({"link", "center", "radius"});
      CollisionSphere sphere;
      sphere.link = s["link"].integer();
      if (s.has("center")) sphere.center = s["center"].vec3();
      sphere.radius = s["radius"].number();
      m.spheres.push_back(sphere);
    }
  }
  try {
    m.validate();
  } catch (const Error& e) {
    f.fail(e.what());
  }
  return m;
}

TaskRange parse_task(const Field& f) {
  f.only({"lower", "upper"});
  TaskRange range;
  if (f.has("lower")) range.bounds.col(0) = f["lower"].vector(6);
  if (f.has("upper")) range.bounds.col(1) = f["upper"].vector(6);
  try {
    range.validate();
  } catch (const Error& e) {
    f.fail(e.what());
  }
  return range;
}

Primitive parse_primitive(const Field& f) {
  const std::string type = f["type"].string();
  if (type == "sphere") {
    f.only({"type", "center", "radius"});
    return SpherePrimitive{f["center"].vec3(), f["radius"].number()};
  }
  if (type == "box") {
    f.only({"type", "min", "max"});
    return BoxPrimitive{f["min"].vec3(), f["max"].vec3()};
  }
  if (type == "capsule") {
    f.only({"type", "a", "b", "radius"});
    return CapsulePrimitive{f["a"].vec3(), f["b"].vec3(), f["radius"].number()};
  }
  if (type == "halfspace") {
    f.only({"type", "normal", "offset"});
    return HalfspacePrimitive{f["normal"].vec3(), f["offset"].number()};
  }
  f["type"].fail("unknown primitive type '" + type + "'");
}

BasisSet parse_basis(const Field& f) {
  f.only({"family", "N", "T"});
  BasisFamily family;
  try {
    family = basis_family_from_string(f["family"].string());
  } catch (const Error& e) {
    f["family"].fail(e.what());
  }
  try {
    return BasisSet(family, f["N"].integer(), f["T"].number());
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    f.fail(e.what());
  }
}

// Runs a validate() and reports its failure against the field path.
template <typename T>
void check(const T& value, const Field& f) {
  try {
    value.validate();
  } catch (const Error& e) {
    f.fail(e.what());
  }
}

json basis_json(const BasisSet& b) {
  return {{"family", std::string(to_string(b.family()))}, {"N", b.order()}, {"T", b.horizon()}};
}

}  // namespace

json number_json(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  return x;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_json(v[i]));
  return a;
}

MultiRobotProblem parse_problem(const json& doc, const std::string& base_dir) {
  const Field root(doc, "");
  root.only({"basis", "robots", "scene", "collision", "acm_overrides", "optimizer", "closed_chain",
             "timescale", "gravity"});
  MultiRobotProblem p;
  p.basis = parse_basis(root["basis"]);

  const Field robots = root["robots"];
  if (robots.size() == 0) robots.fail("at least one robot is required");
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const Field r = robots[i];
    r.only({"model", "start", "goal", "start_velocity", "goal_velocity", "task"});
    RobotSpec spec;
    spec.model = parse_model(r["model"]);
    const int m = spec.model.dof();
    spec.start = r["start"].vector(m);
    spec.goal = r["goal"].vector(m);
    if (r.has("start_velocity")) spec.start_velocity = r["start_velocity"].vector(m);
    if (r.has("goal_velocity")) spec.goal_velocity = r["goal_velocity"].vector(m);
    for (int j = 0; j < m; ++j) {
      const Joint& joint = spec.model.joints[j];
      if (spec.start[j] < joint.lower || spec.start[j] > joint.upper) {
        r["start"][static_cast<std::size_t>(j)].fail("outside the joint limits");
      }
      if (spec.goal[j] < joint.lower || spec.goal[j] > joint.upper) {
        r["goal"][static_cast<std::size_t>(j)].fail("outside the joint limits");
      }
    }
    if (r.has("task")) spec.task = parse_task(r["task"]);
    p.robots.push_back(std::move(spec));
  }

  if (root.has("scene")) {
    const Field s = root["scene"];
    s.only({"primitives", "grid"});
    if (s.has("primitives")) {
      const Field prims = s["primitives"];
      for (std::size_t i = 0; i < prims.size(); ++i) p.scene.primitives.push_back(parse_primitive(prims[i]));
    }
    if (s.has("grid")) {
      std::filesystem::path path = s["grid"].string();
      if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
      if (!std::filesystem::exists(path)) s["grid"].fail("grid file not found: " + path.string());
      try {
        p.scene.grid = read_grid(path.string());
      } catch (const Error& e) {
        s["grid"].fail(e.what());
      }
    }
    check(p.scene, s);
  }

  if (root.has("collision")) {
    const Field c = root["collision"];
    c.only({"epsilon", "p", "q"});
    c.read("epsilon", p.collision.epsilon);
    c.read("p", p.collision.p);
    c.read("q", p.collision.q);
    check(p.collision, c);
  }

  if (root.has("acm_overrides")) {
    const Field a = root["acm_overrides"];
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Field o = a[i];
      o.only({"a", "b", "checked"});
      p.acm_overrides.push_back({o["a"].integer(), o["b"].integer(), o["checked"].boolean()});
    }
  }

  if (root.has("optimizer")) {
    const Field o = root["optimizer"];
    o.only({"rho", "beta1", "beta2", "lambda0", "rho_min", "rho_max", "gamma_up", "gamma_down",
            "step_tol", "max_iters", "K_obs", "K_tsk", "K_lmt", "activation_tol",
            "boundary_velocity", "boundary_acceleration", "rank_tol", "qp_tol", "qp_max_iter"});
    OptimizerConfig& c = p.optimizer;
    o.read("rho", c.smoothness_weight);
    o.read("beta1", c.beta1);
    o.read("beta2", c.beta2);
    o.read("lambda0", c.lambda0);
    o.read("rho_min", c.rho_min);
    o.read("rho_max", c.rho_max);
    o.read("gamma_up", c.gamma_up);
    o.read("gamma_down", c.gamma_down);
    o.read("step_tol", c.step_tol);
    o.read("max_iters", c.max_iters);
    o.read("K_obs", c.obstacle_nodes);
    o.read("K_tsk", c.task_nodes);
    o.read("K_lmt", c.limit_nodes);
    o.read("activation_tol", c.activation_tol);
    o.read("boundary_velocity", c.boundary.velocity);
    o.read("boundary_acceleration", c.boundary.acceleration);
    o.read("rank_tol", c.rank_tol);
    o.read("qp_tol", c.qp_tol);
    o.read("qp_max_iter", c.qp_max_iter);
    check(c, o);
  }

  if (root.has("closed_chain")) {
    const Field c = root["closed_chain"];
    c.only({"left", "right", "reference", "w_p", "w_R", "posture", "collocation"});
    ClosedChainLink link;
    c.read("left", link.left);
    c.read("right", link.right);
    link.spec.reference = parse_transform(c["reference"]);
    c.read("w_p", link.spec.w_p);
    c.read("w_R", link.spec.w_R);
    c.read("posture", link.spec.posture);
    c.read("collocation", link.spec.collocation);
    const int n = static_cast<int>(p.robots.size());
    if (link.left < 0 || link.left >= n || link.right < 0 || link.right >= n || link.left == link.right) {
      c.fail("left and right must name two distinct robots");
    }
    check(link.spec, c);
    p.closed_chain = link;
  }

  if (root.has("timescale")) {
    const Field t = root["timescale"];
    t.only({"enabled", "gamma", "varsigma", "L", "K_max", "sigma_max"});
    t.read("enabled", p.run_timescale);
    t.read("gamma", p.timescale.gamma);
    t.read("varsigma", p.timescale.varsigma);
    t.read("L", p.timescale.samples);
    t.read("K_max", p.timescale.max_passes);
    t.read("sigma_max", p.timescale.sigma_max);
    check(p.timescale, t);
  }

  if (root.has("gravity")) p.gravity = root["gravity"].vec3();

  try {
    p.validate();
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(std::string("problem: ") + e.what());
  }
  return p;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw SchemaError("override '" + assignment + "': expected key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const std::string& p = path[i];
    if (p.empty()) throw SchemaError("override '" + key + "': empty path component");
    const bool last = i + 1 == path.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(p, &used);
        if (used != p.size()) throw std::invalid_argument(p);
      } catch (const std::exception&) {
        throw SchemaError("override '" + key + "': '" + p + "' is not an array index");
      }
      if (idx >= node->size()) throw SchemaError("override '" + key + "': index out of range");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw SchemaError("override '" + key + "': '" + p + "' is not an object");
      node = &(*node)[p];
    }
    if (last) *node = value;
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path + ": cannot open file");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw SchemaError(path + ": not valid JSON");
  return doc;
}

void write_json_file(const json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot write file");
  out << doc.dump(2) << '\n';
  if (!out) throw Error(path + ": write failed");
}

MultiRobotProblem load_problem(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = read_json_file(path);
  for (const std::string& o : overrides) apply_override(doc, o);
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  return parse_problem(doc, dir.empty() ? "." : dir.string());
}

json solution_to_json(const Solution& s) {
  json doc;
  doc["status"] = to_string(s.status);
  doc["basis"] = basis_json(s.basis);
  doc["final_T"] = number_json(s.final_T);
  doc["iterations"] = s.iterations;
  json robots = json::array();
  for (const RobotSolution& r : s.robots) {
    json lift = json::array();
    const Eigen::MatrixX4d& c = r.lift.coefficients();
    for (Eigen::Index j = 0; j < c.rows(); ++j) lift.push_back(vector_json(c.row(j).transpose()));
    robots.push_back({{"joints", r.psi.joints}, {"psi", vector_json(r.psi.values)}, {"lift", lift}});
  }
  doc["robots"] = robots;
  if (s.scale) {
    json recs = json::array();
    for (const RobotScaleRecord& rec : s.scale->robots) {
      json sig = json::array();
      for (double x : rec.sigmas) sig.push_back(number_json(x));
      recs.push_back({{"initial_T", number_json(rec.initial_T)},
                      {"velocity_T", number_json(rec.velocity_T)},
                      {"sigmas", sig},
                      {"final_T", number_json(rec.final_T)}});
    }
    doc["scale"] = {{"final_T", number_json(s.scale->final_T)}, {"scaled", s.scale->scaled}, {"robots", recs}};
  }
  json log = json::array();
  for (const IterationRecord& rec : s.log) {
    json lam = json::array();
    for (double x : rec.lambda) lam.push_back(number_json(x));
    log.push_back({{"iteration", rec.iteration},
                   {"objective", number_json(rec.objective)},
                   {"step_norm", number_json(rec.step_norm)},
                   {"lambda", lam},
                   {"equality_rows", rec.equality_rows},
                   {"inequality_rows", rec.inequality_rows},
                   {"accepted", rec.accepted}});
  }
  doc["log"] = log;
  return doc;
}

Solution solution_from_json(const json& doc) {
  const Field root(doc, "");
  Solution s;
  const std::string status = root["status"].string();
  if (status == "converged") {
    s.status = PlanStatus::Converged;
  } else if (status == "not-converged") {
    s.status = PlanStatus::NotConverged;
  } else {
    root["status"].fail("unknown status '" + status + "'");
  }
  s.basis = parse_basis(root["basis"]);
  s.final_T = root["final_T"].number();
  if (root.has("iterations")) s.iterations = root["iterations"].integer();
  const Field robots = root["robots"];
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const Field r = robots[i];
    const int m = r["joints"].integer();
    CoefficientVector psi(m, s.basis.order());
    psi.values = r["psi"].vector(static_cast<int>(psi.values.size()));
    const Field lift = r["lift"];
    if (lift.size() != static_cast<std::size_t>(m)) lift.fail("expected one row per joint");
    Eigen::MatrixX4d c(m, 4);
    for (int j = 0; j < m; ++j) c.row(j) = lift[static_cast<std::size_t>(j)].vector(4).transpose();
    s.robots.push_back({psi, BoundaryLift(c)});
  }
  if (root.has("scale")) {
    const Field sc = root["scale"];
    ScaleReport rep;
    rep.final_T = sc["final_T"].number();
    rep.scaled = sc["scaled"].boolean();
    const Field recs = sc["robots"];
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const Field r = recs[i];
      RobotScaleRecord rec;
      rec.initial_T = r["initial_T"].number();
      rec.velocity_T = r["velocity_T"].number();
      const Eigen::VectorXd sig = r["sigmas"].vector();
      rec.sigmas.assign(sig.data(), sig.data() + sig.size());
      rec.final_T = r["final_T"].number();
      rep.robots.push_back(rec);
    }
    s.scale = rep;
  }
  if (root.has("log")) {
    const Field log = root["log"];
    for (std::size_t i = 0; i < log.size(); ++i) {
      const Field l = log[i];
      IterationRecord rec;
      rec.iteration = l["iteration"].integer();
      rec.objective = l["objective"].number();
      rec.step_norm = l["step_norm"].number();
      const Eigen::VectorXd lam = l["lambda"].vector();
      rec.lambda.assign(lam.data(), lam.data() + lam.size());
      rec.equality_rows = l["equality_rows"].raw().get<std::vector<int>>();
      rec.inequality_rows = l["inequality_rows"].raw().get<std::vector<int>>();
      rec.accepted = l["accepted"].raw().get<std::vector<bool>>();
      s.log.push_back(rec);
    }
  }
  return s;
}

void write_solution(const Solution& solution, const std::string& path) {
  write_json_file(solution_to_json(solution), path);
}

Solution read_solution(const std::string& path) { return solution_from_json(read_json_file(path)); }

}  // namespace facto
