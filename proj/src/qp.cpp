#include "facto/qp.hpp"

#include <algorithm>
#include <cmath>

#include "facto/error.hpp"

namespace facto {

std::string to_string(QPStatus status) {
  switch (status) {
    case QPStatus::Solved: return "solved";
    case QPStatus::MaxIterations: return "max-iterations";
    case QPStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

NullSpaceDecomp nullspace_decompose(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                    double rank_tol) {
  if (a.rows() != b.size()) throw DimensionError("nullspace_decompose: A and b row counts differ");
  const Eigen::Index n = a.cols();
  NullSpaceDecomp out;
  if (a.rows() == 0) {
    out.basis = Eigen::MatrixXd::Identity(n, n);
    out.particular = Eigen::VectorXd::Zero(n);
    return out;
  }
  if (a.rows() > n) throw DimensionError("nullspace_decompose: more rows than unknowns");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.transpose());
  qr.setThreshold(rank_tol);
  const Eigen::Index r = qr.rank();
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const auto& perm = qr.colsPermutation().indices();

  Eigen::VectorXd b_kept(r);
  for (Eigen::Index i = 0; i < r; ++i) b_kept[i] = b[perm[i]];
  for (Eigen::Index i = r; i < a.rows(); ++i) out.dropped_rows.push_back(perm[i]);
  std::sort(out.dropped_rows.begin(), out.dropped_rows.end());

  const Eigen::MatrixXd r1 = qr.matrixR().topLeftCorner(r, r).triangularView<Eigen::Upper>();
  const Eigen::VectorXd y =
      r1.transpose().triangularView<Eigen::Lower>().solve(b_kept);
  out.particular = q.leftCols(r) * y;
  out.basis = q.rightCols(n - r);
  out.rank = static_cast<int>(r);

  const double residual = (a * out.particular - b).norm();
  if (residual > 1e-8 * (1.0 + b.norm())) {
    throw InfeasibleEqualitiesError("dependent equality rows are inconsistent (residual " +
                                    std::to_string(residual) + ")");
  }
  return out;
}

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// Solve the equality-constrained problem on a guessed active set and keep the
// result only if it satisfies the full KKT conditions.
bool polish(const ReducedQP& qp, const std::vector<int>& active, double tol, QPSolution& sol) {
  const int n = qp.variables();
  const int k = static_cast<int>(active.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
  Eigen::VectorXd rhs(n + k);
  kkt.topLeftCorner(n, n) = qp.H;
  rhs.head(n) = -qp.g;
  for (int i = 0; i < k; ++i) {
    kkt.block(n + i, 0, 1, n) = qp.A.row(active[i]);
    kkt.block(0, n + i, n, 1) = qp.A.row(active[i]).transpose();
    rhs[n + i] = qp.b[active[i]];
  }
  const Eigen::VectorXd x = kkt.completeOrthogonalDecomposition().solve(rhs);
  QPSolution candidate = sol;
  candidate.z = x.head(n);
  candidate.duals = Eigen::VectorXd::Zero(qp.constraints());
  for (int i = 0; i < k; ++i) candidate.duals[active[i]] = x[n + i];
  if (!verify_kkt(qp, candidate, tol).pass) return false;
  candidate.duals = candidate.duals.cwiseMax(0.0);
  candidate.status = QPStatus::Solved;
  sol = candidate;
  return true;
}

}  // namespace

QPSolution solve_qp(const ReducedQP& qp, const QPSolution* warm, double tol, int max_iter) {
  const int n = qp.variables();
  const int m = qp.constraints();
  if (qp.H.rows() != n || qp.H.cols() != n || qp.A.rows() != m || (m > 0 && qp.A.cols() != n)) {
    throw DimensionError("solve_qp: inconsistent problem dimensions");
  }
  QPSolution sol;
  sol.duals = Eigen::VectorXd::Zero(m);
  if (n == 0) {
    sol.z = Eigen::VectorXd::Zero(0);
    sol.status = (m == 0 || qp.b.minCoeff() >= -tol) ? QPStatus::Solved : QPStatus::Infeasible;
    return sol;
  }
  if (m == 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(qp.H);
    if (llt.info() != Eigen::Success) throw DomainError("solve_qp: H is not positive definite");
    sol.z = llt.solve(-qp.g);
    sol.status = QPStatus::Solved;
    return sol;
  }

  const double sigma = 1e-6;
  const double alpha = 1.6;
  double rho = std::max(0.1 * qp.H.trace() / n, 1e-8);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  if (warm && warm->z.size() == n) x = warm->z;
  if (warm && warm->duals.size() == m) y = warm->duals;
  Eigen::VectorXd z = (qp.A * x).cwiseMin(qp.b);

  const Eigen::MatrixXd ata = qp.A.transpose() * qp.A;
  auto factor = [&](double r) {
    Eigen::MatrixXd k = qp.H + r * ata;
    k.diagonal().array() += sigma;
    return Eigen::LLT<Eigen::MatrixXd>(k);
  };
  Eigen::LLT<Eigen::MatrixXd> llt = factor(rho);
  if (llt.info() != Eigen::Success) throw DomainError("solve_qp: H is not positive definite");
  bool rescaled = false;

  const double eps_inf = 1e-7;
  int it = 0;
  for (; it < max_iter; ++it) {
    const Eigen::VectorXd y_prev = y;
    const Eigen::VectorXd rhs = sigma * x - qp.g + qp.A.transpose() * (rho * z - y);
    const Eigen::VectorXd x_tilde = llt.solve(rhs);
    const Eigen::VectorXd z_tilde = qp.A * x_tilde;
    x = alpha * x_tilde + (1.0 - alpha) * x;
    const Eigen::VectorXd z_relaxed = alpha * z_tilde + (1.0 - alpha) * z;
    const Eigen::VectorXd z_next = (z_relaxed + y / rho).cwiseMin(qp.b);
    y += rho * (z_relaxed - z_next);
    z = z_next;

    const double r_prim = inf_norm(qp.A * x - z);
    const double r_dual = inf_norm(qp.H * x + qp.g + qp.A.transpose() * y);
    if (r_prim <= tol && r_dual <= tol) {
      ++it;
      sol.status = QPStatus::Solved;
      break;
    }

    if (inf_norm(y) > 1e8) {
      sol.status = QPStatus::Infeasible;
      ++it;
      break;
    }
    const Eigen::VectorXd dy = y - y_prev;
    const double dy_norm = inf_norm(dy);
    if (dy_norm > 1e-12) {
      const Eigen::VectorXd dy_pos = dy.cwiseMax(0.0);
      if (inf_norm(qp.A.transpose() * dy) <= eps_inf * dy_norm &&
          qp.b.dot(dy_pos) < -eps_inf * dy_norm && dy.minCoeff() >= -eps_inf * dy_norm) {
        sol.status = QPStatus::Infeasible;
        ++it;
        break;
      }
    }

    if (!rescaled && it >= 50 && r_dual > 0.0 && r_prim / r_dual > 1e3) {
      rho *= 10.0;
      llt = factor(rho);
      rescaled = true;
    }
  }
  sol.iterations = it;
  sol.z = x;
  sol.duals = y.cwiseMax(0.0);
  if (sol.status == QPStatus::Infeasible) return sol;

  // Active set from the ADMM iterate: positive multipliers, or rows at the bound.
  const double scale = 1.0 + inf_norm(qp.b) + inf_norm(qp.A * x);
  std::vector<int> by_dual, by_slack;
  for (int i = 0; i < m; ++i) {
    const double slack = qp.b[i] - qp.A.row(i).dot(x);
    if (y[i] > 1e-9 * (1.0 + inf_norm(y))) by_dual.push_back(i);
    if (slack < 1e-7 * scale) by_slack.push_back(i);
  }
  const double polish_tol = std::max(tol, 1e-9) * 10.0;
  if (!polish(qp, by_dual, polish_tol, sol) && by_slack != by_dual) {
    polish(qp, by_slack, polish_tol, sol);
  }
  return sol;
}

KktReport verify_kkt(const ReducedQP& qp, const QPSolution& sol, double tol) {
  KktReport rep;
  const int m = qp.constraints();
  Eigen::VectorXd grad = qp.H * sol.z + qp.g;
  if (m > 0) grad += qp.A.transpose() * sol.duals;
  rep.stationarity = inf_norm(grad);
  if (m > 0) {
    const Eigen::VectorXd viol = qp.A * sol.z - qp.b;
    rep.primal = std::max(0.0, viol.maxCoeff());
    rep.dual = std::max(0.0, -sol.duals.minCoeff());
    rep.complementarity = inf_norm(sol.duals.cwiseProduct(viol));
  }
  rep.pass = rep.stationarity <= tol && rep.primal <= tol && rep.dual <= tol &&
             rep.complementarity <= tol;
  return rep;
}

}  // namespace facto
