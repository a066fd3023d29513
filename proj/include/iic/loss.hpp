#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "iic/errors.hpp"
#include "iic/numeric.hpp"

namespace iic {

/// Squared-error loss: per pair l(y, y') = ||y - y'||^2, total
/// L(Y, Y') = sum_i l(y_i, y_i'). Its Hessian in the first argument is 2I.
struct SquaredLoss {
  static double pair(const Vector& y, const Vector& y_prime) {
    return (y - y_prime).squaredNorm();
  }
};

/// L(preds, targets) = sum of squared row differences; zero iff equal.
inline double total_loss(const Matrix& preds, const Matrix& targets) {
  if (preds.rows() != targets.rows() || preds.cols() != targets.cols()) {
    throw ContractViolation("total_loss: shape mismatch " +
                            std::to_string(preds.rows()) + "x" +
                            std::to_string(preds.cols()) + " vs " +
                            std::to_string(targets.rows()) + "x" +
                            std::to_string(targets.cols()));
  }
  return (preds - targets).squaredNorm();
}

inline double total_loss(const Vector& preds, const Vector& targets) {
  if (preds.size() != targets.size()) {
    throw ContractViolation("total_loss: length mismatch");
  }
  return (preds - targets).squaredNorm();
}

/// Tempered likelihood p_gamma(y | theta, x) = c * exp(-l(f(x,theta), y) / gamma).
/// For squared loss the per-coordinate normalizer is (pi*gamma)^(-1/2), so
/// the stacked normalizer over N = m*n coordinates is (pi*gamma)^(-N/2).
struct GibbsLikelihood {
  double gamma = 1.0;
  SquaredLoss loss;

  explicit GibbsLikelihood(double gamma_in) : gamma(gamma_in) {
    if (!(gamma > 0.0)) {
      throw ContractViolation("GibbsLikelihood: gamma must be positive");
    }
  }

  double log_normalizer(Eigen::Index stacked_size) const {
    return -0.5 * static_cast<double>(stacked_size) *
           std::log(3.14159265358979323846 * gamma);
  }

  /// log p(y | z) for stacked prediction z and stacked targets y.
  double log_density(const Vector& z, const Vector& y) const {
    if (z.size() != y.size()) {
      throw ContractViolation("GibbsLikelihood: length mismatch");
    }
    return log_normalizer(y.size()) - loss.pair(z, y) / gamma;
  }
};

}  // namespace iic
