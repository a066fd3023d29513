#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "iic/dataset.hpp"
#include "iic/errors.hpp"
#include "iic/geometry.hpp"
#include "iic/interpolate.hpp"
#include "iic/loss.hpp"
#include "iic/model.hpp"
#include "iic/numeric.hpp"
#include "iic/prior.hpp"

namespace iic::criteria {

inline constexpr double kPi = 3.14159265358979323846;

/// Interpolating information criterion with its per-term breakdown. The
/// criterion value is always the exact sum of the four stored terms.
struct CriterionReport {
  double iic = 0.0;
  double term_iterated_log_prior = 0.0;  // log(R(theta*) - R(theta0))
  double term_sharpness = 0.0;           // (1/N) log det DF DF^T
  double term_curvature = 0.0;           // (1/N) log K
  double term_correction = 0.0;          // -log N
  double tau_star = 0.0;                 // 2 (R(theta*) - R(theta0)) / N
  double delta_r = 0.0;                  // R(theta*) - R(theta0)
  double free_energy_at_tau_star = 0.0;
  Eigen::Index stacked_size = 0;         // N = m n

  /// Line-oriented key=value block, full double precision.
  std::string to_key_value() const {
    char buf[512];
    std::string out;
    auto put = [&](const char* key, double value) {
      std::snprintf(buf, sizeof(buf), "%s=%.17g\n", key, value);
      out += buf;
    };
    put("iic", iic);
    put("term_iterated_log_prior", term_iterated_log_prior);
    put("term_sharpness", term_sharpness);
    put("term_curvature", term_curvature);
    put("term_correction", term_correction);
    put("tau_star", tau_star);
    put("delta_R", delta_r);
    put("free_energy_at_tau_star", free_energy_at_tau_star);
    std::snprintf(buf, sizeof(buf), "N=%lld\n",
                  static_cast<long long>(stacked_size));
    out += buf;
    return out;
  }
};

/// Leading-order Bayes free energy at prior concentration tau:
/// delta_R / tau + (1/2) log det J + (N/2) log(tau pi) + (1/2) log K.
inline double free_energy_bar(double delta_r, double log_det_gram,
                              double log_curvature, Eigen::Index stacked_size,
                              double tau) {
  if (!(tau > 0.0)) {
    throw ContractViolation("free_energy_bar: tau must be positive");
  }
  const double n = static_cast<double>(stacked_size);
  return delta_r / tau + 0.5 * log_det_gram + 0.5 * n * std::log(tau * kPi) +
         0.5 * log_curvature;
}

/// Empirical-Bayes temperature: the stationary point of free_energy_bar in
/// tau, 2 delta_R / N. Degenerate when the prior mode interpolates.
inline double optimal_tau(double delta_r, Eigen::Index stacked_size) {
  if (!(delta_r > 1e-12)) {
    throw PriorDegenerate("optimal_tau: R(theta*) - R(theta0) = " +
                          std::to_string(delta_r) +
                          " is not positive; theta* is the prior mode");
  }
  return 2.0 * delta_r / static_cast<double>(stacked_size);
}

/// Free energy evaluated on a tau grid, with the grid argmin.
struct FreeEnergyCurve {
  std::vector<double> taus;
  std::vector<double> values;
  double argmin_tau = 0.0;
};

inline FreeEnergyCurve free_energy_curve(double delta_r, double log_det_gram,
                                         double log_curvature,
                                         Eigen::Index stacked_size,
                                         const std::vector<double>& taus) {
  FreeEnergyCurve curve;
  curve.taus = taus;
  curve.values.reserve(taus.size());
  double best = std::numeric_limits<double>::infinity();
  for (double tau : taus) {
    const double value =
        free_energy_bar(delta_r, log_det_gram, log_curvature, stacked_size, tau);
    if (value < best) {
      best = value;
      curve.argmin_tau = tau;
    }
    curve.values.push_back(value);
  }
  return curve;
}

/// log K = log det(manifold Hessian of R at theta_star)
///       - log det(ambient Hessian of R at theta0).
/// For a linear model under an isotropic Gaussian prior both determinants
/// are powers of 1/tau0 and the difference collapses to mn * log(tau0);
/// this exact shortcut keeps large sweeps free of d x d eigenproblems.
inline double log_relative_curvature(const PredictorModel& model,
                                     const RegressionDataset& data,
                                     const Prior& prior,
                                     const Vector& theta_star,
                                     const Vector& theta0) {
  if (model.linear && prior.kind == Prior::Kind::IsotropicGaussian) {
    return static_cast<double>(data.stacked_size()) * std::log(prior.tau0);
  }
  const geometry::ManifoldHessianResult mh =
      geometry::manifold_hessian(model, data, prior, theta_star);
  const double log_det_ambient = numeric::chol_log_det(prior.hess_R(theta0));
  return mh.log_det - log_det_ambient;
}

/// Relative curvature factor K itself, in log space internally.
inline double relative_curvature(const PredictorModel& model,
                                 const RegressionDataset& data,
                                 const Prior& prior, const Vector& theta_star,
                                 const Vector& theta0) {
  return std::exp(
      log_relative_curvature(model, data, prior, theta_star, theta0));
}

/// Assembles the interpolating information criterion at a converged
/// interpolator theta_star:
///   log(delta_R) + (1/N) log det J + (1/N) log K - log N,
/// with delta_R = R(theta*) - R(theta0). The iterated-log term works on the
/// R-difference directly; exponentiating a density ratio first would only
/// lose precision.
inline CriterionReport iic(const PredictorModel& model,
                           const RegressionDataset& data, const Prior& prior,
                           const Vector& theta_star) {
  const double residual =
      total_loss(eval_stacked(model, theta_star, data), data.targets());
  if (residual > 1e-8 * (1.0 + data.targets().squaredNorm())) {
    throw ContractViolation(
        "iic: theta_star does not interpolate (loss " +
        std::to_string(residual) + ")");
  }
  const double delta_r = prior.R(theta_star) - prior.R(prior.theta0);
  if (!(delta_r > 1e-12)) {
    throw PriorDegenerate("iic: R(theta*) - R(theta0) = " +
                          std::to_string(delta_r) + " is not positive");
  }
  const Matrix df = jacobian(model, theta_star, data);
  const double log_det_j = geometry::log_det_gram(geometry::gram_matrix(df));
  const double log_k =
      log_relative_curvature(model, data, prior, theta_star, prior.theta0);
  const double n = static_cast<double>(data.stacked_size());

  CriterionReport report;
  report.stacked_size = data.stacked_size();
  report.delta_r = delta_r;
  report.term_iterated_log_prior = std::log(delta_r);
  report.term_sharpness = log_det_j / n;
  report.term_curvature = log_k / n;
  report.term_correction = -std::log(n);
  report.iic = report.term_iterated_log_prior + report.term_sharpness +
               report.term_curvature + report.term_correction;
  report.tau_star = optimal_tau(delta_r, data.stacked_size());
  report.free_energy_at_tau_star = free_energy_bar(
      delta_r, log_det_j, log_k, data.stacked_size(), report.tau_star);
  return report;
}

/// Closed-form IIC for overparameterized least-squares regression:
/// 2 log ||X^+ y|| + (1/n) log det(X X^T) - log n.
inline double iic_linear(const Matrix& x, const Vector& y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (d <= n) {
    throw ContractViolation("iic_linear: requires d > n");
  }
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double tol = numeric::rank_tolerance(n, d, sv[0]);
  if (sv[n - 1] <= tol) {
    throw RankDeficient("iic_linear: X is rank deficient", sv);
  }
  const Vector theta = svd.matrixV() * sv.cwiseInverse().asDiagonal() *
                       svd.matrixU().transpose() * y;
  if ((x * theta - y).norm() > 1e-8 * y.norm()) {
    throw Infeasible("iic_linear: y is not in range(X)");
  }
  const double norm = theta.norm();
  if (!(norm > 0.0)) {
    throw PriorDegenerate("iic_linear: X^+ y = 0, prior mode interpolates");
  }
  const double log_det = 2.0 * sv.array().log().sum();
  return 2.0 * std::log(norm) + log_det / static_cast<double>(n) -
         std::log(static_cast<double>(n));
}

/// Classical BIC (normalized by n) for the underparameterized regime:
/// 2 log ||(I - X X^+) y|| + (d/n - 1) log n.
inline double bic_linear(const Matrix& x, const Vector& y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n <= d) {
    throw ContractViolation("bic_linear: requires n > d");
  }
  const Vector res = y - x * x.colPivHouseholderQr().solve(y);
  const double res_norm = res.norm();
  if (res_norm <= 1e-12 * (1.0 + y.norm())) {
    throw DegenerateResidual(
        "bic_linear: zero residual; the interpolating regime needs the IIC");
  }
  const double nn = static_cast<double>(n);
  return 2.0 * std::log(res_norm) +
         (static_cast<double>(d) / nn - 1.0) * std::log(nn);
}

/// BIC with a ridge-regularized residual, defined in all regimes:
/// 2 log ||y - X theta_lambda|| + (d/n - 1) log n,
/// theta_lambda = (X^T X + lambda I)^{-1} X^T y.
inline double bic_ridge(const Matrix& x, const Vector& y, double lambda) {
  if (!(lambda > 0.0)) {
    throw ContractViolation("bic_ridge: lambda must be positive");
  }
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Vector theta;
  if (d <= n) {
    const Matrix a =
        x.transpose() * x + lambda * Matrix::Identity(d, d);
    theta = Eigen::LLT<Matrix>(a).solve(x.transpose() * y);
  } else {
    // Dual form keeps the solve at size n when d is large.
    const Matrix a = x * x.transpose() + lambda * Matrix::Identity(n, n);
    theta = x.transpose() * Eigen::LLT<Matrix>(a).solve(y);
  }
  const double res_norm = (y - x * theta).norm();
  const double nn = static_cast<double>(n);
  return 2.0 * std::log(res_norm) +
         (static_cast<double>(d) / nn - 1.0) * std::log(nn);
}

}  // namespace iic::criteria
