#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>

namespace facto {

enum class BasisFamily { Sine, Cosine, Chebyshev };

std::string_view to_string(BasisFamily family);
BasisFamily basis_family_from_string(std::string_view name);

/// Truncated orthogonal basis {phi_0..phi_N} on [0, T].
///
/// Sine functions use the natural index n = i + 1 for storage slot i, so every
/// family yields N + 1 functions and coefficient blocks have the same shape.
class BasisSet {
 public:
  BasisSet(BasisFamily family, int order, double horizon);

  BasisFamily family() const { return family_; }
  int order() const { return order_; }
  int size() const { return order_ + 1; }
  double horizon() const { return horizon_; }

  /// Same family and order on a different horizon.
  BasisSet with_horizon(double horizon) const { return {family_, order_, horizon}; }

  /// phi(t), dphi/dt or d2phi/dt2 for t in [0, T].
  Eigen::VectorXd eval(double t, int derivative) const;

  /// Same as eval() but parameterized by normalized time s = t / T in [0, 1].
  /// Positions (derivative 0) are independent of T.
  Eigen::VectorXd eval_normalized(double s, int derivative) const;

  /// The family's natural frequency index for storage slot i.
  int natural_index(int slot) const { return family_ == BasisFamily::Sine ? slot + 1 : slot; }

 private:
  BasisFamily family_;
  int order_;
  double horizon_;
};

/// Per-joint cubic Hermite polynomial in s = t/T carrying the boundary positions
/// and velocities. Row m holds a0..a3 for joint m.
class BoundaryLift {
 public:
  BoundaryLift() = default;
  explicit BoundaryLift(Eigen::MatrixX4d coefficients) : coeffs_(std::move(coefficients)) {}

  int joints() const { return static_cast<int>(coeffs_.rows()); }
  const Eigen::MatrixX4d& coefficients() const { return coeffs_; }

  Eigen::VectorXd eval(double t, double horizon, int derivative) const;
  Eigen::VectorXd eval_normalized(double s, double horizon, int derivative) const;

 private:
  Eigen::MatrixX4d coeffs_;
};

BoundaryLift make_boundary_lift(const Eigen::VectorXd& start, const Eigen::VectorXd& goal,
                                const Eigen::VectorXd& start_velocity,
                                const Eigen::VectorXd& goal_velocity, double horizon);

/// Stacked coefficients: joint m occupies entries [m(N+1), (m+1)(N+1)).
struct CoefficientVector {
  int joints = 0;
  int order = 0;
  Eigen::VectorXd values;

  CoefficientVector() = default;
  CoefficientVector(int joint_count, int basis_order)
      : joints(joint_count), order(basis_order),
        values(Eigen::VectorXd::Zero(joint_count * (basis_order + 1))) {}

  int block_size() const { return order + 1; }
  auto block(int joint) { return values.segment(joint * block_size(), block_size()); }
  auto block(int joint) const { return values.segment(joint * block_size(), block_size()); }
};

/// Phi(t) = I_M (x) phi(t)^T, an M x M(N+1) matrix.
Eigen::MatrixXd lifted_basis(const BasisSet& basis, int joints, double t, int derivative);

/// xi(t) = lift(t) + Phi(t) psi (or the requested derivative).
Eigen::VectorXd eval_trajectory(const CoefficientVector& psi, const BoundaryLift& lift,
                                const BasisSet& basis, double t, int derivative);
Eigen::VectorXd eval_trajectory_normalized(const CoefficientVector& psi, const BoundaryLift& lift,
                                           const BasisSet& basis, double s, int derivative);

/// Diagonal smoothness weights d_0..d_N, replicated over joints.
struct SmoothnessQuadratic {
  Eigen::VectorXd weights;

  /// Full block-diagonal diagonal over M joints.
  Eigen::VectorXd diagonal(int joints) const { return weights.replicate(joints, 1); }
};

SmoothnessQuadratic smoothness_matrix(const BasisSet& basis);

/// Time samples of a joint-space function for projection.
struct TrajectorySamples {
  Eigen::VectorXd times;
  Eigen::MatrixXd values;  // joints x samples
};

/// Node times suitable for project_function: uniform (endpoints included) for
/// trigonometric families, Gauss-Chebyshev nodes for Chebyshev.
Eigen::VectorXd projection_nodes(const BasisSet& basis, int count);

/// Weighted L2 projection of (samples - lift) onto span{phi_n}.
CoefficientVector project_function(const TrajectorySamples& samples, const BoundaryLift& lift,
                                   const BasisSet& basis);

}  // namespace facto
