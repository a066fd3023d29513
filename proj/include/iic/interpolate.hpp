#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>

#include <cmath>
#include <string>
#include <vector>

#include "iic/dataset.hpp"
#include "iic/errors.hpp"
#include "iic/geometry.hpp"
#include "iic/loss.hpp"
#include "iic/model.hpp"
#include "iic/numeric.hpp"
#include "iic/prior.hpp"

namespace iic::interp {

struct InterpolationResult {
  Vector theta_star;
  double residual = 0.0;   // total squared loss at theta_star
  double r_value = 0.0;    // regularizer value at theta_star
  int iterations = 0;
  bool converged = false;
};

struct SolverOptions {
  int max_iterations = 200;
  double stationarity_tol = 1e-8;  // on ||Pi grad R||
  // Armijo line search: initial step, shrink factor, sufficient decrease.
  double step_init = 1.0;
  double step_shrink = 0.5;
  double armijo_c = 1e-4;
};

inline double residual_tolerance(const RegressionDataset& data) {
  return 1e-10 * (1.0 + data.targets().squaredNorm());
}

/// Minimal-norm interpolator theta = X^+ y for the linear model, via SVD
/// with the shared rank cutoff. Throws Infeasible when y is outside
/// range(X), i.e. the constraint set is empty.
inline InterpolationResult pinv_interpolator(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) {
    throw ContractViolation("pinv_interpolator: X rows != y length");
  }
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double tol =
      sv.size() > 0 ? numeric::rank_tolerance(x.rows(), x.cols(), sv[0]) : 0.0;
  Vector inv_sv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > tol) inv_sv[i] = 1.0 / sv[i];
  }
  const Vector theta =
      svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose() * y;
  const double feas = (x * theta - y).norm();
  if (feas > 1e-8 * y.norm()) {
    throw Infeasible("pinv_interpolator: y is not in range(X), gap " +
                     std::to_string(feas));
  }
  InterpolationResult result;
  result.theta_star = theta;
  result.residual = (x * theta - y).squaredNorm();
  result.r_value = theta.squaredNorm();  // ridgeless convention R = ||theta||^2
  result.iterations = 0;
  result.converged = true;
  return result;
}

/// Gauss-Newton projection onto M = F^{-1}(y): the minimal-norm update
/// theta <- theta - DF^T (DF DF^T)^{-1} (F(theta) - y) with step halving on
/// the squared residual.
inline Vector project_to_manifold(const PredictorModel& model,
                                  const RegressionDataset& data,
                                  const Vector& theta_init,
                                  int max_iterations = 200) {
  const double tol = residual_tolerance(data);
  // Quadratic convergence makes the last iterations nearly free, so keep
  // polishing to the rounding floor once the contract tolerance is met.
  const double floor = 1e-28 * (1.0 + data.targets().squaredNorm());
  const Vector y = data.stacked_targets();
  Vector theta = theta_init;
  Vector r = eval_stacked_vec(model, theta, data) - y;
  double loss = r.squaredNorm();
  if (loss <= floor) return theta;
  for (int iter = 0; iter < max_iterations && loss > floor; ++iter) {
    const Matrix df = jacobian(model, theta, data);
    const Matrix gram = geometry::gram_matrix(df);
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) {
      if (loss <= tol) return theta;
      throw RankDeficient("project_to_manifold: DF lost rank along the path");
    }
    const Vector step = df.transpose() * llt.solve(r);
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Vector cand = theta - alpha * step;
      const Vector cand_r = eval_stacked_vec(model, cand, data) - y;
      const double cand_loss = cand_r.squaredNorm();
      if (cand_loss < loss) {
        theta = cand;
        r = cand_r;
        loss = cand_loss;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (loss <= tol) return theta;
      throw DidNotConverge("project_to_manifold: step halving stalled", loss);
    }
  }
  if (loss <= tol) return theta;
  throw DidNotConverge("project_to_manifold: iteration limit", loss);
}

/// Riemannian descent for min R(theta) subject to theta in M: tangent step
/// along -Pi grad R followed by re-projection, with Armijo backtracking on
/// R evaluated at the re-projected candidate. Every accepted iterate is
/// feasible, which is the point of the two-phase scheme: the soft-penalty
/// objective is not a valid Lagrangian for this problem.
inline InterpolationResult minimize_prior_on_manifold(
    const PredictorModel& model, const RegressionDataset& data,
    const Prior& prior, const Vector& theta_on_manifold,
    const SolverOptions& opts = {}) {
  const double feas_tol = residual_tolerance(data);
  Vector theta = theta_on_manifold;
  double residual = total_loss(eval_stacked(model, theta, data), data.targets());
  if (residual > feas_tol) {
    theta = project_to_manifold(model, data, theta);
    residual = total_loss(eval_stacked(model, theta, data), data.targets());
  }
  double r_value = prior.R(theta);
  int iter = 0;
  bool converged = false;
  for (; iter < opts.max_iterations; ++iter) {
    const Matrix pi = geometry::tangent_projector(jacobian(model, theta, data));
    const Vector tangent_grad = pi * prior.grad_R(theta);
    const double gnorm = tangent_grad.norm();
    if (gnorm <= opts.stationarity_tol) {
      converged = true;
      break;
    }
    double step = opts.step_init;
    bool accepted = false;
    auto retract = [&](double s, Vector& out) {
      try {
        out = project_to_manifold(model, data,
                                  Vector(theta - s * tangent_grad));
        return true;
      } catch (const DidNotConverge&) {
        return false;
      }
    };
    for (int bt = 0; bt < 60; ++bt) {
      Vector cand;
      if (!retract(step, cand)) {
        step *= opts.step_shrink;
        continue;
      }
      double cand_value = prior.R(cand);
      if (cand_value <= r_value - opts.armijo_c * step * gnorm * gnorm) {
        // The weak Armijo bound can admit steps that overshoot the
        // minimizer along the retracted path (near-reflections that shrink
        // R by O(step^4) only). Keep halving while that strictly helps.
        for (int probe = 0; probe < 8; ++probe) {
          Vector refined;
          if (!retract(step * opts.step_shrink, refined)) break;
          const double refined_value = prior.R(refined);
          if (refined_value >= cand_value) break;
          step *= opts.step_shrink;
          cand = refined;
          cand_value = refined_value;
        }
        theta = cand;
        r_value = cand_value;
        accepted = true;
        break;
      }
      step *= opts.step_shrink;
    }
    if (!accepted) {
      throw DidNotConverge("minimize_prior_on_manifold: line search stalled",
                           gnorm);
    }
  }
  if (!converged) {
    throw DidNotConverge("minimize_prior_on_manifold: iteration limit",
                         residual);
  }
  InterpolationResult result;
  result.theta_star = theta;
  result.residual = total_loss(eval_stacked(model, theta, data), data.targets());
  result.r_value = prior.R(theta);
  result.iterations = iter;
  result.converged = true;
  return result;
}

/// Damped (Gauss-)Newton for the tempered objective
/// R(theta) + L(F(theta), y) / gamma. The curvature model
/// hess R + (2/gamma) DF^T DF is exact for linear F and positive
/// semidefinite always; jitter is added only if the factorization fails.
inline Vector map_estimate(const PredictorModel& model,
                           const RegressionDataset& data, const Prior& prior,
                           double gamma, const Vector& theta_init,
                           const SolverOptions& opts = {}) {
  if (!(gamma > 0.0)) {
    throw ContractViolation("map_estimate: gamma must be positive");
  }
  const Vector y = data.stacked_targets();
  const double grad_tol = 1e-8 * (1.0 + 1.0 / gamma);
  const Eigen::Index d = model.param_dim;
  Vector theta = theta_init;
  auto objective = [&](const Vector& t) {
    return prior.R(t) + (eval_stacked_vec(model, t, data) - y).squaredNorm() / gamma;
  };
  double value = objective(theta);
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const Matrix df = jacobian(model, theta, data);
    const Vector r = eval_stacked_vec(model, theta, data) - y;
    const Vector grad = prior.grad_R(theta) + (2.0 / gamma) * (df.transpose() * r);
    if (grad.norm() <= grad_tol) return theta;
    Matrix curv = prior.hess_R(theta) + (2.0 / gamma) * (df.transpose() * df);
    double jitter = 0.0;
    Eigen::LLT<Matrix> llt(curv);
    while (llt.info() != Eigen::Success) {
      jitter = (jitter == 0.0) ? 1e-10 * (1.0 + curv.diagonal().maxCoeff())
                               : 10.0 * jitter;
      if (!std::isfinite(jitter)) {
        throw NumericError("map_estimate: curvature matrix unusable");
      }
      llt.compute(Matrix(curv + jitter * Matrix::Identity(d, d)));
    }
    const Vector step = llt.solve(grad);
    double alpha = opts.step_init;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Vector cand = theta - alpha * step;
      const double cand_value = objective(cand);
      if (cand_value <= value - opts.armijo_c * alpha * grad.dot(step)) {
        theta = cand;
        value = cand_value;
        accepted = true;
        break;
      }
      alpha *= opts.step_shrink;
    }
    if (!accepted) {
      // No further progress; accept if the stationarity gap is already tiny.
      if (grad.norm() <= 1e2 * grad_tol) return theta;
      throw DidNotConverge("map_estimate: line search stalled", grad.norm());
    }
  }
  const Matrix df = jacobian(model, theta, data);
  const Vector r = eval_stacked_vec(model, theta, data) - y;
  const double gnorm =
      (prior.grad_R(theta) + (2.0 / gamma) * (df.transpose() * r)).norm();
  if (gnorm <= grad_tol) return theta;
  throw DidNotConverge("map_estimate: iteration limit", gnorm);
}

/// Trace of tempered estimates along a decreasing temperature schedule,
/// each warm-started from the last, with distances to a reference
/// interpolator. The schedule realizes the limit in which tempered
/// estimates converge to the constrained minimizer.
struct AnnealingTrace {
  std::vector<double> gammas;
  std::vector<Vector> thetas;
  std::vector<double> distances_to_int;
};

inline AnnealingTrace anneal_map(const PredictorModel& model,
                                 const RegressionDataset& data,
                                 const Prior& prior,
                                 const std::vector<double>& gamma_schedule,
                                 const Vector& theta_star_ref,
                                 const SolverOptions& opts = {}) {
  if (gamma_schedule.empty()) {
    throw ContractViolation("anneal_map: empty schedule");
  }
  for (std::size_t i = 0; i + 1 < gamma_schedule.size(); ++i) {
    if (!(gamma_schedule[i] > gamma_schedule[i + 1])) {
      throw ContractViolation("anneal_map: schedule must be strictly decreasing");
    }
  }
  AnnealingTrace trace;
  Vector theta = theta_star_ref;  // warm start near the target basin
  for (double gamma : gamma_schedule) {
    theta = map_estimate(model, data, prior, gamma, theta, opts);
    trace.gammas.push_back(gamma);
    trace.thetas.push_back(theta);
    trace.distances_to_int.push_back((theta - theta_star_ref).norm());
  }
  return trace;
}

}  // namespace iic::interp
