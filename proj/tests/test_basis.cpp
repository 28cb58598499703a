#include <gtest/gtest.h>

#include <random>

#include "facto/basis.hpp"
#include "facto/error.hpp"
#include "oracles.hpp"

using namespace facto;

namespace {

const BasisFamily kFamilies[] = {BasisFamily::Sine, BasisFamily::Cosine, BasisFamily::Chebyshev};

}  // namespace

TEST(Basis, CosineValues) {
  const BasisSet b(BasisFamily::Cosine, 4, 2.0);
  for (double t : {0.0, 0.3, 1.7, 2.0}) EXPECT_DOUBLE_EQ(b.eval(t, 0)[0], 1.0);
  EXPECT_NEAR(b.eval(1.0, 0)[2], -1.0, 1e-15);
}

TEST(Basis, ChebyshevClosedForm) {
  const double T = 1.6;
  const BasisSet b(BasisFamily::Chebyshev, 5, T);
  const double x = 0.5;
  const double t = 0.5 * (x + 1.0) * T;
  EXPECT_NEAR(b.eval(t, 0)[3], 4 * x * x * x - 3 * x, 1e-14);
  EXPECT_NEAR(b.eval(t, 0)[3], -1.0, 1e-14);
}

TEST(Basis, OutsideHorizonThrows) {
  const BasisSet b(BasisFamily::Sine, 3, 1.0);
  EXPECT_THROW(b.eval(-0.1, 0), DomainError);
  EXPECT_THROW(b.eval(1.1, 1), DomainError);
  EXPECT_THROW(BasisSet(BasisFamily::Cosine, 0, 1.0), DomainError);
  EXPECT_THROW(BasisSet(BasisFamily::Cosine, 3, 0.0), DomainError);
}

TEST(Basis, Orthogonality) {
  const double T = 1.3;
  for (BasisFamily f : kFamilies) {
    const BasisSet b(f, 8, T);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(9, 9);
    if (f == BasisFamily::Chebyshev) {
      for (int n = 0; n < 9; ++n)
        for (int m = 0; m < 9; ++m)
          gram(n, m) = oracle::gauss_chebyshev(
              [&](double x) {
                const Eigen::VectorXd p = b.eval(0.5 * (x + 1.0) * T, 0);
                return p[n] * p[m];
              },
              10000);
    } else {
      for (int n = 0; n < 9; ++n)
        for (int m = 0; m < 9; ++m)
          gram(n, m) = oracle::simpson(
              [&](double t) {
                const Eigen::VectorXd p = b.eval(t, 0);
                return p[n] * p[m];
              },
              0.0, T, 10000);
    }
    for (int n = 0; n < 9; ++n)
      for (int m = 0; m < 9; ++m)
        if (n != m) {
          EXPECT_LE(std::abs(gram(n, m)), 1e-8 * std::sqrt(gram(n, n) * gram(m, m)))
              << to_string(f) << " n=" << n << " m=" << m;
        }
  }
}

TEST(Basis, DerivativesMatchFiniteDifferences) {
  const double T = 2.0, h = 1e-5;
  for (BasisFamily f : kFamilies) {
    const BasisSet b(f, 8, T);
    for (int i = 1; i <= 100; ++i) {
      const double t = T * i / 101.0;
      for (int d = 1; d <= 2; ++d) {
        const Eigen::VectorXd fd = (b.eval(t + h, d - 1) - b.eval(t - h, d - 1)) / (2 * h);
        EXPECT_LE(oracle::rel_error(b.eval(t, d), fd), 1e-5) << to_string(f) << " t=" << t;
      }
    }
  }
}

TEST(Basis, LiftInterpolatesBoundary) {
  Eigen::VectorXd q0(2), qg(2), v0(2), vg(2);
  q0 << 0.3, -1.0;
  qg << 1.1, 2.0;
  v0 << 0.5, 0.0;
  vg << -0.2, 1.0;
  const double T = 2.5;
  const BoundaryLift lift = make_boundary_lift(q0, qg, v0, vg, T);
  EXPECT_LE((lift.eval(0.0, T, 0) - q0).norm(), 1e-15);
  EXPECT_LE((lift.eval(T, T, 0) - qg).norm(), 1e-14);
  EXPECT_LE((lift.eval(0.0, T, 1) - v0).norm(), 1e-14);
  EXPECT_LE((lift.eval(T, T, 1) - vg).norm(), 1e-14);
}

TEST(Basis, LiftExamples) {
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(1, 0.7), z = Eigen::VectorXd::Zero(1);
  const BoundaryLift flat = make_boundary_lift(c, c, z, z, 3.0);
  for (double t : {0.0, 0.4, 1.9, 3.0}) EXPECT_NEAR(flat.eval(t, 3.0, 0)[0], 0.7, 1e-15);
  const BoundaryLift ramp = make_boundary_lift(z, Eigen::VectorXd::Ones(1), z, z, 2.0);
  // 3 s^2 - 2 s^3 at s = 1/2.
  EXPECT_NEAR(ramp.eval(1.0, 2.0, 0)[0], 0.5, 1e-15);
}

TEST(Basis, TrajectoryEvaluation) {
  std::mt19937 rng(3);
  Eigen::VectorXd q0(2), qg(2), z2 = Eigen::VectorXd::Zero(2);
  q0 << 0.1, 0.2;
  qg << -0.4, 1.0;
  const double T = 1.5;
  const BoundaryLift lift = make_boundary_lift(q0, qg, z2, z2, T);
  for (BasisFamily f : kFamilies) {
    const BasisSet b(f, 5, T);
    CoefficientVector psi(2, 5);
    EXPECT_LE((eval_trajectory(psi, lift, b, 0.6, 0) - lift.eval(0.6, T, 0)).norm(), 1e-15);
    psi.values = oracle::random_vector(12, rng);
    if (f == BasisFamily::Sine) {
      EXPECT_LE((eval_trajectory(psi, lift, b, 0.0, 0) - q0).norm(), 1e-15);
    }
    const double h = 1e-6;
    for (double t : {0.2, 0.75, 1.3}) {
      const Eigen::VectorXd fd =
          (eval_trajectory(psi, lift, b, t + h, 0) - eval_trajectory(psi, lift, b, t - h, 0)) / (2 * h);
      EXPECT_LE(oracle::rel_error(eval_trajectory(psi, lift, b, t, 1), fd), 1e-5);
    }
    // Linearity in psi.
    CoefficientVector a(2, 5), c(2, 5), sum(2, 5);
    a.values = oracle::random_vector(12, rng);
    c.values = oracle::random_vector(12, rng);
    sum.values = 2.0 * a.values - 3.0 * c.values;
    const Eigen::VectorXd l = lift.eval(0.9, T, 0);
    const Eigen::VectorXd lhs = eval_trajectory(sum, lift, b, 0.9, 0) - l;
    const Eigen::VectorXd rhs =
        2.0 * (eval_trajectory(a, lift, b, 0.9, 0) - l) - 3.0 * (eval_trajectory(c, lift, b, 0.9, 0) - l);
    EXPECT_LE((lhs - rhs).norm(), 1e-13);
  }
}

TEST(Basis, SmoothnessDiagonal) {
  const BasisSet cosine(BasisFamily::Cosine, 4, M_PI);
  const Eigen::VectorXd d = smoothness_matrix(cosine).weights;
  EXPECT_EQ(d[0], 0.0);
  // 1/2 int_0^pi (d/dt cos t)^2 dt by quadrature.
  const double d1 = 0.5 * oracle::simpson([](double t) { return std::sin(t) * std::sin(t); }, 0, M_PI, 2000);
  EXPECT_NEAR(d[1], d1, 1e-10);
  EXPECT_NEAR(d[1], M_PI / 4, 1e-14);
  for (BasisFamily f : {BasisFamily::Sine, BasisFamily::Cosine}) {
    const BasisSet b(f, 6, 1.7);
    const Eigen::VectorXd w = smoothness_matrix(b).weights;
    // Natural index n sits in slot n for cosine and n - 1 for sine.
    const int s1 = f == BasisFamily::Sine ? 0 : 1;
    EXPECT_NEAR(w[s1 + 1] / w[s1], 4.0, 1e-12);
    for (int i = 1; i < w.size(); ++i) EXPECT_GT(w[i], w[i - 1]);
  }
  const BasisSet cheb(BasisFamily::Chebyshev, 4, 2.0);
  EXPECT_NEAR(smoothness_matrix(cheb).weights[3], M_PI / 4.0 * 9.0, 1e-12);
}

TEST(Basis, ProjectionRoundTrip) {
  std::mt19937 rng(11);
  const double T = 1.2;
  Eigen::VectorXd q0(2), qg(2), z2 = Eigen::VectorXd::Zero(2);
  q0 << 0.5, -0.5;
  qg << 1.0, 0.3;
  const BoundaryLift lift = make_boundary_lift(q0, qg, z2, z2, T);
  for (BasisFamily f : kFamilies) {
    const BasisSet b(f, 6, T);
    CoefficientVector psi(2, 6);
    psi.values = oracle::random_vector(14, rng);
    TrajectorySamples s;
    s.times = projection_nodes(b, 200);
    s.values.resize(2, 200);
    for (int k = 0; k < 200; ++k) s.values.col(k) = eval_trajectory(psi, lift, b, s.times[k], 0);
    const CoefficientVector back = project_function(s, lift, b);
    EXPECT_LE((back.values - psi.values).lpNorm<Eigen::Infinity>(), 1e-6) << to_string(f);
    double sup = 0.0;
    for (int k = 0; k <= 300; ++k) {
      const double t = T * k / 300.0;
      sup = std::max(sup, (eval_trajectory(back, lift, b, t, 0) - eval_trajectory(psi, lift, b, t, 0))
                              .lpNorm<Eigen::Infinity>());
    }
    EXPECT_LE(sup, 1e-6);

    // Lift samples project to zero; a single mode projects to a unit coefficient.
    for (int k = 0; k < 200; ++k) s.values.col(k) = lift.eval(s.times[k], T, 0);
    EXPECT_LE(project_function(s, lift, b).values.norm(), 1e-12);
    for (int k = 0; k < 200; ++k) {
      s.values.col(k) = lift.eval(s.times[k], T, 0) + Eigen::VectorXd::Constant(2, b.eval(s.times[k], 0)[2]);
    }
    const CoefficientVector mode = project_function(s, lift, b);
    for (int m = 0; m < 2; ++m)
      for (int n = 0; n < 7; ++n) EXPECT_NEAR(mode.block(m)[n], n == 2 ? 1.0 : 0.0, 1e-6);
  }
}

TEST(Basis, ProjectionNeedsEnoughSamples) {
  const BasisSet b(BasisFamily::Cosine, 6, 1.0);
  const BoundaryLift lift = make_boundary_lift(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1),
                                               Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), 1.0);
  TrajectorySamples s;
  s.times = projection_nodes(b, 20);
  s.values = Eigen::MatrixXd::Zero(1, 20);
  EXPECT_THROW(project_function(s, lift, b), PrecisionError);
}
