#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <optional>
#include <utility>

#include "iic/errors.hpp"
#include "iic/numeric.hpp"

namespace iic {

/// A prior over parameters, stored through its negative log-density
/// R(theta) = -log pi(theta) + const. Working with R avoids density
/// underflow: every consumer uses R-differences, and the absolute density
/// exp(-R - log_norm_const) is reconstructed only where one is required
/// (fiber integration). theta0 is the unique global minimizer of R.
struct Prior {
  enum class Kind { IsotropicGaussian, Custom };

  Kind kind = Kind::Custom;
  std::function<double(const Vector&)> R;
  std::function<Vector(const Vector&)> grad_R;
  std::function<Matrix(const Vector&)> hess_R;
  Vector theta0;
  /// log of the normalizer Z with pi = exp(-R)/Z; only consumed where an
  /// absolute density is needed.
  double log_norm_const = 0.0;
  /// Variance of the isotropic Gaussian kind; unset meaning for Custom.
  double tau0 = 0.0;

  double log_density(const Vector& theta) const {
    return -R(theta) - log_norm_const;
  }
  double density(const Vector& theta) const {
    return std::exp(log_density(theta));
  }

  /// N(mu, tau0 * I): R(theta) = ||theta - mu||^2 / (2 tau0), R(theta0) = 0.
  static Prior isotropic_gaussian(Eigen::Index d, double tau0, Vector mu) {
    if (!(tau0 > 0.0)) {
      throw ContractViolation("Prior: tau0 must be positive");
    }
    if (mu.size() != d) {
      throw ContractViolation("Prior: mean dimension mismatch");
    }
    Prior prior;
    prior.kind = Kind::IsotropicGaussian;
    prior.tau0 = tau0;
    prior.theta0 = mu;
    prior.R = [mu, tau0](const Vector& theta) {
      return (theta - mu).squaredNorm() / (2.0 * tau0);
    };
    prior.grad_R = [mu, tau0](const Vector& theta) {
      return Vector((theta - mu) / tau0);
    };
    prior.hess_R = [d, tau0](const Vector&) {
      return Matrix(Matrix::Identity(d, d) / tau0);
    };
    prior.log_norm_const =
        0.5 * static_cast<double>(d) *
        std::log(2.0 * 3.14159265358979323846 * tau0);
    return prior;
  }

  static Prior isotropic_gaussian(Eigen::Index d, double tau0) {
    return isotropic_gaussian(d, tau0, Vector::Zero(d));
  }

  /// Custom prior with an explicitly supplied global minimizer.
  static Prior custom(std::function<double(const Vector&)> r,
                      std::function<Vector(const Vector&)> grad,
                      std::function<Matrix(const Vector&)> hess, Vector theta0,
                      double log_norm_const = 0.0) {
    Prior prior;
    prior.kind = Kind::Custom;
    prior.R = std::move(r);
    prior.grad_R = std::move(grad);
    prior.hess_R = std::move(hess);
    prior.theta0 = std::move(theta0);
    prior.log_norm_const = log_norm_const;
    return prior;
  }

  /// Custom prior whose minimizer is located numerically: backtracking
  /// gradient descent from theta_init until ||grad R|| <= 1e-9. The
  /// downstream theory needs the unique global minimizer, so multimodal
  /// R remains the caller's responsibility.
  static Prior custom_with_minimizer(std::function<double(const Vector&)> r,
                                     std::function<Vector(const Vector&)> grad,
                                     std::function<Matrix(const Vector&)> hess,
                                     const Vector& theta_init,
                                     double log_norm_const = 0.0) {
    constexpr double kGradTol = 1e-9;
    constexpr int kMaxIter = 20000;
    Vector theta = theta_init;
    double value = r(theta);
    int iter = 0;
    for (; iter < kMaxIter; ++iter) {
      const Vector g = grad(theta);
      const double gnorm = g.norm();
      if (gnorm <= kGradTol) break;
      double step = 1.0;
      bool accepted = false;
      for (int bt = 0; bt < 80; ++bt) {
        const Vector cand = theta - step * g;
        const double cand_value = r(cand);
        if (cand_value <= value - 1e-4 * step * gnorm * gnorm) {
          theta = cand;
          value = cand_value;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        throw DidNotConverge("Prior minimizer: line search stalled", gnorm);
      }
    }
    if (iter == kMaxIter) {
      throw DidNotConverge("Prior minimizer: iteration limit",
                           grad(theta).norm());
    }
    return custom(std::move(r), std::move(grad), std::move(hess), theta,
                  log_norm_const);
  }
};

}  // namespace iic
