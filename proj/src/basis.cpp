#include "facto/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "facto/error.hpp"

namespace facto {

namespace {

constexpr double kPi = std::numbers::pi;

// Relative slack for accepting t = T (or t = 0) computed with rounding error.
constexpr double kTimeSlack = 1e-12;

double checked_normalized_time(double t, double horizon) {
  if (!(t >= -kTimeSlack * horizon && t <= horizon * (1.0 + kTimeSlack))) {
    throw DomainError("basis evaluated at t = " + std::to_string(t) + " outside [0, " +
                      std::to_string(horizon) + "]");
  }
  return std::clamp(t / horizon, 0.0, 1.0);
}

}  // namespace

std::string_view to_string(BasisFamily family) {
  switch (family) {
    case BasisFamily::Sine:
      return "sine";
    case BasisFamily::Cosine:
      return "cosine";
    case BasisFamily::Chebyshev:
      return "chebyshev";
  }
  return "unknown";
}

BasisFamily basis_family_from_string(std::string_view name) {
  if (name == "sine" || name == "sin") return BasisFamily::Sine;
  if (name == "cosine" || name == "cos") return BasisFamily::Cosine;
  if (name == "chebyshev" || name == "cheby") return BasisFamily::Chebyshev;
  throw DomainError("unknown basis family '" + std::string(name) + "'");
}

BasisSet::BasisSet(BasisFamily family, int order, double horizon)
    : family_(family), order_(order), horizon_(horizon) {
  if (order < 1) throw DomainError("basis order N must be >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("basis horizon T must be > 0");
}

Eigen::VectorXd BasisSet::eval(double t, int derivative) const {
  return eval_normalized(checked_normalized_time(t, horizon_), derivative);
}

Eigen::VectorXd BasisSet::eval_normalized(double s, int derivative) const {
  if (derivative < 0 || derivative > 2) throw DomainError("derivative order must be 0, 1 or 2");
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("normalized time outside [0, 1]");

  const int count = size();
  Eigen::VectorXd out(count);

  if (family_ == BasisFamily::Chebyshev) {
    // Three-term recurrence for T_n and its x-derivatives, then dx/dt = 2/T.
    const double x = 2.0 * s - 1.0;
    Eigen::VectorXd value(count), d1(count), d2(count);
    value[0] = 1.0;
    d1[0] = 0.0;
    d2[0] = 0.0;
    if (count > 1) {
      value[1] = x;
      d1[1] = 1.0;
      d2[1] = 0.0;
    }
    for (int n = 1; n + 1 < count; ++n) {
      value[n + 1] = 2.0 * x * value[n] - value[n - 1];
      d1[n + 1] = 2.0 * value[n] + 2.0 * x * d1[n] - d1[n - 1];
      d2[n + 1] = 4.0 * d1[n] + 2.0 * x * d2[n] - d2[n - 1];
    }
    const double scale = 2.0 / horizon_;
    switch (derivative) {
      case 0:
        return value;
      case 1:
        return scale * d1;
      default:
        return scale * scale * d2;
    }
  }

  for (int i = 0; i < count; ++i) {
    const double n = natural_index(i);
    const double arg = n * kPi * s;
    const double omega = n * kPi / horizon_;
    if (family_ == BasisFamily::Cosine) {
      switch (derivative) {
        case 0:
          out[i] = std::cos(arg);
          break;
        case 1:
          out[i] = -omega * std::sin(arg);
          break;
        default:
          out[i] = -omega * omega * std::cos(arg);
      }
    } else {
      switch (derivative) {
        case 0:
          out[i] = std::sin(arg);
          break;
        case 1:
          out[i] = omega * std::cos(arg);
          break;
        default:
          out[i] = -omega * omega * std::sin(arg);
      }
    }
  }
  return out;
}

// Coefficients are stored in the cubic Hermite basis: columns hold
// (theta0, T*dtheta0, thetag, T*dthetag). The Hermite polynomials take exact
// 0/1 values at s = 0 and s = 1, so the endpoint conditions hold bit-exactly.
Eigen::VectorXd BoundaryLift::eval(double t, double horizon, int derivative) const {
  return eval_normalized(checked_normalized_time(t, horizon), horizon, derivative);
}

Eigen::VectorXd BoundaryLift::eval_normalized(double s, double horizon, int derivative) const {
  double h00, h10, h01, h11;
  const double s2 = s * s;
  const double s3 = s2 * s;
  switch (derivative) {
    case 0:
      h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
      h10 = s3 - 2.0 * s2 + s;
      h01 = -2.0 * s3 + 3.0 * s2;
      h11 = s3 - s2;
      break;
    case 1:
      h00 = (6.0 * s2 - 6.0 * s) / horizon;
      h10 = (3.0 * s2 - 4.0 * s + 1.0) / horizon;
      h01 = (-6.0 * s2 + 6.0 * s) / horizon;
      h11 = (3.0 * s2 - 2.0 * s) / horizon;
      break;
    case 2: {
      const double inv2 = 1.0 / (horizon * horizon);
      h00 = (12.0 * s - 6.0) * inv2;
      h10 = (6.0 * s - 4.0) * inv2;
      h01 = (-12.0 * s + 6.0) * inv2;
      h11 = (6.0 * s - 2.0) * inv2;
      break;
    }
    default:
      throw DomainError("derivative order must be 0, 1 or 2");
  }
  return h00 * coeffs_.col(0) + h10 * coeffs_.col(1) + h01 * coeffs_.col(2) + h11 * coeffs_.col(3);
}

BoundaryLift make_boundary_lift(const Eigen::VectorXd& start, const Eigen::VectorXd& goal,
                                const Eigen::VectorXd& start_velocity,
                                const Eigen::VectorXd& goal_velocity, double horizon) {
  const auto m = start.size();
  if (goal.size() != m || start_velocity.size() != m || goal_velocity.size() != m) {
    throw DimensionError("boundary lift: start/goal/velocity sizes differ");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("boundary lift: T must be > 0");
  if (!start.allFinite() || !goal.allFinite() || !start_velocity.allFinite() ||
      !goal_velocity.allFinite()) {
    throw DomainError("boundary lift: non-finite boundary values");
  }
  Eigen::MatrixX4d coeffs(m, 4);
  coeffs.col(0) = start;
  coeffs.col(1) = horizon * start_velocity;
  coeffs.col(2) = goal;
  coeffs.col(3) = horizon * goal_velocity;
  return BoundaryLift(std::move(coeffs));
}

Eigen::MatrixXd lifted_basis(const BasisSet& basis, int joints, double t, int derivative) {
  const Eigen::VectorXd phi = basis.eval(t, derivative);
  const int k = basis.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(joints, joints * k);
  for (int m = 0; m < joints; ++m) out.block(m, m * k, 1, k) = phi.transpose();
  return out;
}

namespace {

Eigen::VectorXd apply_blocks(const CoefficientVector& psi, const Eigen::VectorXd& phi) {
  Eigen::VectorXd out(psi.joints);
  for (int m = 0; m < psi.joints; ++m) out[m] = psi.block(m).dot(phi);
  return out;
}

void check_shapes(const CoefficientVector& psi, const BoundaryLift& lift, const BasisSet& basis) {
  if (psi.order != basis.order() || psi.values.size() != psi.joints * basis.size()) {
    throw DimensionError("coefficient vector does not match basis order");
  }
  if (lift.joints() != psi.joints) throw DimensionError("boundary lift joint count mismatch");
}

}  // namespace

Eigen::VectorXd eval_trajectory(const CoefficientVector& psi, const BoundaryLift& lift,
                                const BasisSet& basis, double t, int derivative) {
  return eval_trajectory_normalized(psi, lift, basis,
                                    checked_normalized_time(t, basis.horizon()), derivative);
}

Eigen::VectorXd eval_trajectory_normalized(const CoefficientVector& psi, const BoundaryLift& lift,
                                           const BasisSet& basis, double s, int derivative) {
  check_shapes(psi, lift, basis);
  return lift.eval_normalized(s, basis.horizon(), derivative) +
         apply_blocks(psi, basis.eval_normalized(s, derivative));
}

SmoothnessQuadratic smoothness_matrix(const BasisSet& basis) {
  SmoothnessQuadratic q;
  q.weights.resize(basis.size());
  const double t = basis.horizon();
  for (int i = 0; i < basis.size(); ++i) {
    const double n = basis.natural_index(i);
    if (basis.family() == BasisFamily::Chebyshev) {
      q.weights[i] = kPi / (2.0 * t) * n * n;
    } else {
      // Exact diagonal of 1/2 * int_0^T dphi_n^2 dt.
      const double omega = n * kPi / t;
      q.weights[i] = 0.5 * omega * omega * (t / 2.0);
    }
  }
  return q;
}

Eigen::VectorXd projection_nodes(const BasisSet& basis, int count) {
  if (count < 2) throw PrecisionError("projection needs at least two nodes");
  Eigen::VectorXd t(count);
  const double horizon = basis.horizon();
  if (basis.family() == BasisFamily::Chebyshev) {
    for (int k = 0; k < count; ++k) {
      // Reverse order so times are ascending.
      const double x = std::cos((2.0 * (count - 1 - k) + 1.0) * kPi / (2.0 * count));
      t[k] = 0.5 * (x + 1.0) * horizon;
    }
  } else {
    for (int k = 0; k < count; ++k) t[k] = horizon * static_cast<double>(k) / (count - 1);
  }
  return t;
}

CoefficientVector project_function(const TrajectorySamples& samples, const BoundaryLift& lift,
                                   const BasisSet& basis) {
  const auto count = samples.times.size();
  if (samples.values.cols() != count) throw DimensionError("sample values/times size mismatch");
  if (samples.values.rows() != lift.joints()) throw DimensionError("sample joint count mismatch");
  const int needed = 8 * basis.size();
  if (count < needed) {
    throw PrecisionError("projection needs at least " + std::to_string(needed) + " samples, got " +
                         std::to_string(count));
  }

  const double horizon = basis.horizon();
  Eigen::VectorXd weights(count);
  if (basis.family() == BasisFamily::Chebyshev) {
    const Eigen::VectorXd expected = projection_nodes(basis, static_cast<int>(count));
    if ((expected - samples.times).cwiseAbs().maxCoeff() > 1e-9 * horizon) {
      throw PrecisionError("Chebyshev projection requires Gauss-Chebyshev sample times");
    }
    weights.setConstant(kPi / static_cast<double>(count));
  } else {
    const double tol = 1e-9 * horizon;
    if (std::abs(samples.times[0]) > tol || std::abs(samples.times[count - 1] - horizon) > tol) {
      throw PrecisionError("trigonometric projection samples must span [0, T]");
    }
    weights.setZero();
    for (Eigen::Index k = 0; k + 1 < count; ++k) {
      const double dt = samples.times[k + 1] - samples.times[k];
      if (!(dt > 0.0)) throw PrecisionError("projection sample times must be increasing");
      weights[k] += 0.5 * dt;
      weights[k + 1] += 0.5 * dt;
    }
  }

  const int joints = lift.joints();
  const int k = basis.size();
  Eigen::MatrixXd phi(k, count);
  Eigen::MatrixXd residual(joints, count);
  for (Eigen::Index j = 0; j < count; ++j) {
    const double s = std::clamp(samples.times[j] / horizon, 0.0, 1.0);
    phi.col(j) = basis.eval_normalized(s, 0);
    residual.col(j) = samples.values.col(j) - lift.eval_normalized(s, horizon, 0);
  }

  // Discrete norms under the same quadrature keep span members exact.
  const Eigen::VectorXd norms = phi.cwiseAbs2() * weights;
  CoefficientVector psi(joints, basis.order());
  for (int m = 0; m < joints; ++m) {
    const Eigen::VectorXd inner = phi * residual.row(m).transpose().cwiseProduct(weights);
    psi.block(m) = inner.cwiseQuotient(norms);
  }
  return psi;
}

}  // namespace facto
