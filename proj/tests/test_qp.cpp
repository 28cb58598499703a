#include <gtest/gtest.h>

#include <random>

#include "facto/error.hpp"
#include "facto/qp.hpp"
#include "oracles.hpp"

using namespace facto;

namespace {

// Random strictly convex QP with a feasible point z0; roughly a third of the
// rows pass through z0 so several constraints end up active.
ReducedQP random_qp(std::mt19937& rng, int n, int m) {
  ReducedQP qp;
  qp.H = oracle::random_spd(n, rng);
  qp.g = oracle::random_vector(n, rng, 3.0);
  qp.A = Eigen::MatrixXd::Zero(m, n);
  for (int i = 0; i < m; ++i) qp.A.row(i) = oracle::random_vector(n, rng).transpose();
  const Eigen::VectorXd z0 = oracle::random_vector(n, rng, 0.5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  qp.b = qp.A * z0;
  for (int i = 0; i < m; ++i) {
    if (u(rng) > 0.33) qp.b[i] += u(rng);
  }
  return qp;
}

}  // namespace

TEST(QP, NullspaceExamples) {
  Eigen::MatrixXd a(1, 3);
  a << 1, 1, 1;
  Eigen::VectorXd b(1);
  b << 3;
  const NullSpaceDecomp d = nullspace_decompose(a, b);
  EXPECT_EQ(d.rank, 1);
  EXPECT_EQ(d.basis.cols(), 2);
  EXPECT_LE((d.particular - Eigen::Vector3d(1, 1, 1)).norm(), 1e-14);
  EXPECT_LE((a * d.basis).norm(), 1e-14);
  EXPECT_LE((d.basis.transpose() * d.basis - Eigen::Matrix2d::Identity()).norm(), 1e-14);

  // A duplicated consistent row is dropped; an inconsistent one is rejected.
  Eigen::MatrixXd a2(2, 3);
  a2 << 1, 1, 1, 2, 2, 2;
  Eigen::VectorXd b2(2);
  b2 << 3, 6;
  const NullSpaceDecomp d2 = nullspace_decompose(a2, b2);
  EXPECT_EQ(d2.rank, 1);
  ASSERT_EQ(d2.dropped_rows.size(), 1u);
  b2[1] = 7;
  EXPECT_THROW(nullspace_decompose(a2, b2), InfeasibleEqualitiesError);

  const NullSpaceDecomp none = nullspace_decompose(Eigen::MatrixXd(0, 4), Eigen::VectorXd(0));
  EXPECT_EQ(none.basis.cols(), 4);
  EXPECT_LE(none.particular.norm(), 0.0);
}

TEST(QP, NullspaceRandom) {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 8, r = 1 + trial % 6;
    const Eigen::MatrixXd a = Eigen::MatrixXd::Random(r, n);
    const Eigen::VectorXd b = oracle::random_vector(r, rng);
    const NullSpaceDecomp d = nullspace_decompose(a, b);
    EXPECT_EQ(d.basis.cols(), n - r);
    EXPECT_LE((a * d.particular - b).lpNorm<Eigen::Infinity>(), 1e-12);
    EXPECT_LE((a * d.basis).lpNorm<Eigen::Infinity>(), 1e-12);
    // Minimum norm: particular lies in the row space.
    EXPECT_LE((d.basis.transpose() * d.particular).norm(), 1e-12);
  }
}

TEST(QP, MatchesEnumerationOnRandomInstances) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> dn(1, 4), dm(0, 6);
  for (int trial = 0; trial < 50; ++trial) {
    const ReducedQP qp = random_qp(rng, dn(rng), dm(rng));
    const QPSolution sol = solve_qp(qp);
    ASSERT_EQ(sol.status, QPStatus::Solved) << "trial " << trial;
    const oracle::EnumeratedQP ref = oracle::enumerate_qp(qp.H, qp.g, qp.A, qp.b);
    ASSERT_TRUE(std::isfinite(ref.objective));
    EXPECT_LE((sol.z - ref.z).lpNorm<Eigen::Infinity>(), 1e-6) << "trial " << trial;
    EXPECT_NEAR(qp.objective(sol.z), ref.objective, 1e-6);
    EXPECT_TRUE(verify_kkt(qp, sol, 1e-6).pass) << "trial " << trial;
  }
}

TEST(QP, WarmStartAgrees) {
  std::mt19937 rng(5);
  const ReducedQP qp = random_qp(rng, 4, 6);
  const QPSolution cold = solve_qp(qp);
  const QPSolution warm = solve_qp(qp, &cold);
  EXPECT_LE((cold.z - warm.z).norm(), 1e-8);
  EXPECT_LE(warm.iterations, cold.iterations);
}

TEST(QP, UnconstrainedAndInfeasible) {
  ReducedQP qp;
  qp.H = Eigen::Matrix2d::Identity() * 2.0;
  qp.g = Eigen::Vector2d(2.0, -4.0);
  qp.A = Eigen::MatrixXd(0, 2);
  qp.b = Eigen::VectorXd(0);
  EXPECT_LE((solve_qp(qp).z - Eigen::Vector2d(-1, 2)).norm(), 1e-14);

  qp.A = Eigen::MatrixXd(2, 2);
  qp.A << 1, 0, -1, 0;
  qp.b = Eigen::Vector2d(-1, -1);  // z0 <= -1 and z0 >= 1
  EXPECT_EQ(solve_qp(qp).status, QPStatus::Infeasible);

  qp.H(1, 1) = -1.0;
  EXPECT_THROW(solve_qp(qp), DomainError);
}

TEST(QP, KktDetectsBadPoints) {
  ReducedQP qp;
  qp.H = Eigen::MatrixXd::Identity(1, 1);
  qp.g = Eigen::VectorXd::Constant(1, -2.0);
  qp.A = Eigen::MatrixXd::Ones(1, 1);
  qp.b = Eigen::VectorXd::Ones(1);
  QPSolution s;
  s.z = Eigen::VectorXd::Ones(1);
  s.duals = Eigen::VectorXd::Ones(1);
  EXPECT_TRUE(verify_kkt(qp, s, 1e-12).pass);
  s.duals[0] = 0.5;
  EXPECT_FALSE(verify_kkt(qp, s, 1e-6).pass);
  s.z[0] = 1.5;
  s.duals[0] = 0.0;
  const KktReport r = verify_kkt(qp, s, 1e-6);
  EXPECT_NEAR(r.primal, 0.5, 1e-15);
  EXPECT_FALSE(r.pass);
}
