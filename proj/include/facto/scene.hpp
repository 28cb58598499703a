#pragma once

#include <Eigen/Dense>
#include <array>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "facto/robot.hpp"

namespace facto {

struct SpherePrimitive {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1.0;
};

/// Axis-aligned box.
struct BoxPrimitive {
  Eigen::Vector3d min = -Eigen::Vector3d::Ones();
  Eigen::Vector3d max = Eigen::Vector3d::Ones();
};

/// Segment a-b swept by a ball.
struct CapsulePrimitive {
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::UnitZ();
  double radius = 1.0;
};

/// Solid region { x : normal . x <= offset }.
struct HalfspacePrimitive {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;
};

using Primitive = std::variant<SpherePrimitive, BoxPrimitive, CapsulePrimitive, HalfspacePrimitive>;

struct DistanceResult {
  double distance = std::numeric_limits<double>::infinity();
  Eigen::Vector3d gradient = Eigen::Vector3d::UnitX();
};

DistanceResult primitive_distance(const Primitive& primitive, const Eigen::Vector3d& x);

/// Distances sampled on a regular lattice; sample (i, j, k) sits at
/// origin + resolution * (i, j, k). Storage is x-fastest.
class GridSDF {
 public:
  GridSDF() = default;
  GridSDF(Eigen::Vector3d origin, double resolution, std::array<int, 3> dims,
          std::vector<double> values);

  const Eigen::Vector3d& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const std::array<int, 3>& dims() const { return dims_; }
  const std::vector<double>& values() const { return values_; }

  double at(int i, int j, int k) const { return values_[index(i, j, k)]; }
  bool contains(const Eigen::Vector3d& x) const;

  /// Trilinear interpolation of values and of central-difference gradients.
  DistanceResult query(const Eigen::Vector3d& x) const;

 private:
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * k);
  }
  Eigen::Vector3d node_gradient(int i, int j, int k) const;

  Eigen::Vector3d origin_ = Eigen::Vector3d::Zero();
  double resolution_ = 1.0;
  std::array<int, 3> dims_{0, 0, 0};
  std::vector<double> values_;
};

/// Text header "ox oy oz res nx ny nz" on one line, then little-endian float32 values.
void write_grid(const GridSDF& grid, const std::string& path);
GridSDF read_grid(const std::string& path);

struct Scene {
  std::vector<Primitive> primitives;
  std::optional<GridSDF> grid;

  void validate() const;
};

/// Inside the grid the grid answers; elsewhere the primitives do. A scene with
/// neither returns +infinity.
DistanceResult signed_distance(const Scene& scene, const Eigen::Vector3d& x);

inline constexpr double kEmptyGridValue = 1e9;
inline constexpr double kMaxGridCells = 1e8;

/// Samples the primitive distance at the centers of cells of size `resolution`
/// covering [lower, upper].
GridSDF grid_from_primitives(const Scene& scene, const Eigen::Vector3d& lower,
                             const Eigen::Vector3d& upper, double resolution);

struct CollisionParams {
  double epsilon = 0.075;
  int p = 2;
  double q = 1.0;

  void validate() const;
};

struct CostResult {
  double cost = 0.0;
  double derivative = 0.0;  // dc/dd
};

CostResult collision_cost(double d, const CollisionParams& params);

/// Symmetric flag matrix over all spheres of all robots, robot-major.
class AllowedCollisionMatrix {
 public:
  AllowedCollisionMatrix() = default;
  explicit AllowedCollisionMatrix(std::vector<int> sphere_counts);

  int size() const { return size_; }
  int robot_count() const { return static_cast<int>(offsets_.size()) - 1; }
  int offset(int robot) const { return offsets_[robot]; }
  int global_index(int robot, int sphere) const { return offsets_[robot] + sphere; }
  /// (robot, sphere) of a global index.
  std::pair<int, int> locate(int body) const;

  bool checked(int a, int b) const { return flags_[static_cast<std::size_t>(a) * size_ + b] != 0; }
  void set(int a, int b, bool check);

 private:
  int size_ = 0;
  std::vector<int> offsets_{0};
  std::vector<unsigned char> flags_;
};

struct AcmOverride {
  int a = 0;  // global body indices
  int b = 0;
  bool checked = false;
};

AllowedCollisionMatrix build_acm(const std::vector<RobotModel>& robots,
                                 const std::vector<AcmOverride>& overrides = {});

struct SelfDistance {
  double distance = std::numeric_limits<double>::infinity();
  int partner = -1;
};

SelfDistance self_distance(const std::vector<SphereState>& all_states,
                           const AllowedCollisionMatrix& acm, int body);

}  // namespace facto
