#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace facto {

/// Solutions of A x = b written as x = particular + basis * z.
struct NullSpaceDecomp {
  Eigen::MatrixXd basis;        // n x (n - rank), orthonormal columns
  Eigen::VectorXd particular;   // minimum-norm solution
  int rank = 0;
  std::vector<int> dropped_rows;  // rows found linearly dependent on the others
};

inline constexpr double kDefaultRankTol = 1e-10;

/// Rank-revealing QR of A^T. Throws InfeasibleEqualitiesError when the
/// dropped rows are inconsistent with the kept ones.
NullSpaceDecomp nullspace_decompose(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                    double rank_tol = kDefaultRankTol);

/// minimize 1/2 z'Hz + g'z  subject to  A z <= b.
struct ReducedQP {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  int variables() const { return static_cast<int>(g.size()); }
  int constraints() const { return static_cast<int>(b.size()); }
  double objective(const Eigen::VectorXd& z) const { return 0.5 * z.dot(H * z) + g.dot(z); }
};

enum class QPStatus { Solved, MaxIterations, Infeasible };

std::string to_string(QPStatus status);

struct QPSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd duals;
  QPStatus status = QPStatus::MaxIterations;
  int iterations = 0;
};

/// ADMM operator splitting with a final active-set polish.
QPSolution solve_qp(const ReducedQP& qp, const QPSolution* warm = nullptr, double tol = 1e-9,
                    int max_iter = 20000);

struct KktReport {
  bool pass = false;
  double stationarity = 0.0;
  double primal = 0.0;         // max(A z - b)_+
  double dual = 0.0;           // max(-mu)_+
  double complementarity = 0.0;
};

KktReport verify_kkt(const ReducedQP& qp, const QPSolution& sol, double tol);

}  // namespace facto
