#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "iic/dataset.hpp"
#include "iic/errors.hpp"
#include "iic/geometry.hpp"
#include "iic/model.hpp"
#include "iic/numeric.hpp"
#include "iic/prior.hpp"
#include "iic/quadrature.hpp"

namespace iic::laplace {

inline constexpr double kPi = 3.14159265358979323846;

/// Leading-order Laplace value, stored in both linear and log scale. The
/// [1 + O(temperature)] factor is always discarded.
struct LaplaceEstimate {
  double value = 0.0;
  double log_value = 0.0;
  bool leading_order = true;
};

/// Laplace approximation of int exp(-eta(x)/gamma) g(x) dx over R^k around
/// a unique interior minimum:
/// (2 pi gamma)^{k/2} det(hess eta)^{-1/2} exp(-eta_min/gamma) g_min.
inline LaplaceEstimate laplace_point(double eta_at_min, const Matrix& hess_eta,
                                     double g_at_min, double gamma,
                                     Eigen::Index k) {
  if (!(gamma > 0.0) || !(g_at_min > 0.0)) {
    throw ContractViolation("laplace_point: gamma and g must be positive");
  }
  if (hess_eta.rows() != k || hess_eta.cols() != k) {
    throw ContractViolation("laplace_point: Hessian must be k x k");
  }
  const double log_det = numeric::chol_log_det(hess_eta);
  LaplaceEstimate est;
  est.log_value = 0.5 * static_cast<double>(k) * std::log(2.0 * kPi * gamma) -
                  0.5 * log_det - eta_at_min / gamma + std::log(g_at_min);
  est.value = std::exp(est.log_value);
  return est;
}

/// Shared closed form behind the constrained approximation:
/// (2 pi tau)^{k/2} exp(-eta_star/tau) q_star det(H)^{-1/2} with H the
/// manifold Hessian in an orthonormal tangent basis and k the manifold
/// dimension. With no constraints (k = ambient dimension, H the full
/// Hessian) this reduces exactly to laplace_point.
inline LaplaceEstimate laplace_manifold_from_hessian(double eta_at_star,
                                                     double log_det_hessian,
                                                     Eigen::Index manifold_dim,
                                                     double tau,
                                                     double q_at_star) {
  if (!(tau > 0.0) || !(q_at_star > 0.0)) {
    throw ContractViolation("laplace_manifold: tau and Q must be positive");
  }
  LaplaceEstimate est;
  est.log_value =
      0.5 * static_cast<double>(manifold_dim) * std::log(2.0 * kPi * tau) -
      eta_at_star / tau - 0.5 * log_det_hessian + std::log(q_at_star);
  est.value = std::exp(est.log_value);
  return est;
}

/// Laplace approximation of int_M exp(-R(theta)/tau) Q(theta) dH(theta)
/// over the (d - mn)-dimensional zero-loss manifold, around the constrained
/// minimizer theta_star of R.
inline LaplaceEstimate laplace_manifold(const PredictorModel& model,
                                        const RegressionDataset& data,
                                        const Prior& prior,
                                        const Vector& theta_star, double tau,
                                        double q_at_star) {
  const geometry::ManifoldHessianResult mh =
      geometry::manifold_hessian(model, data, prior, theta_star);
  const Eigen::Index manifold_dim = model.param_dim - data.stacked_size();
  return laplace_manifold_from_hessian(prior.R(theta_star), mh.log_det,
                                       manifold_dim, tau, q_at_star);
}

/// Tensor-product Gauss-Legendre over an axis-aligned box, k <= 4. This is
/// the desk-scale verification oracle, not a general-purpose integrator.
inline double quadrature_nd(const std::function<double(const Vector&)>& f,
                            const Vector& lo, const Vector& hi,
                            int points_per_axis) {
  const Eigen::Index k = lo.size();
  if (hi.size() != k) {
    throw ContractViolation("quadrature_nd: box bounds disagree");
  }
  if (k < 1 || k > 4) {
    throw Unsupported("quadrature_nd: supported dimensions are 1..4");
  }
  if (points_per_axis < 1) {
    throw ContractViolation("quadrature_nd: need at least one point per axis");
  }
  const quad::Rule& rule = quad::gauss_legendre_rule(points_per_axis);
  std::vector<double> mid(k), half(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    mid[a] = 0.5 * (lo[a] + hi[a]);
    half[a] = 0.5 * (hi[a] - lo[a]);
  }
  const std::size_t n = static_cast<std::size_t>(points_per_axis);
  std::size_t total = 1;
  for (Eigen::Index a = 0; a < k; ++a) total *= n;
  std::vector<double> terms(total);
  Vector x(k);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double w = 1.0;
    for (Eigen::Index a = 0; a < k; ++a) {
      const std::size_t idx = rem % n;
      rem /= n;
      x[a] = mid[a] + half[a] * rule.nodes[idx];
      w *= half[a] * rule.weights[idx];
    }
    const double fx = f(x);
    if (!std::isfinite(fx)) {
      throw NumericError("quadrature_nd: integrand not finite on the box");
    }
    terms[flat] = w * fx;
  }
  return numeric::pairwise_sum(terms);
}

/// Line integral of a scalar field over a parameterized curve with respect
/// to arc length: int f(theta(t)) ||theta'(t)|| dt, composite Gauss with a
/// central-difference speed. `points` is the total node budget.
inline double curve_integral(
    const std::function<Vector(double)>& parameterization,
    const std::function<double(const Vector&)>& integrand, double t_begin,
    double t_end, int points) {
  if (points < 2) {
    throw ContractViolation("curve_integral: need at least two points");
  }
  const double h =
      numeric::cbrt_eps() * std::max(1.0, std::max(std::abs(t_begin), std::abs(t_end)));
  auto speed_weighted = [&](double t) {
    const Vector dtheta = parameterization(t + h) - parameterization(t - h);
    const double speed = dtheta.norm() / (2.0 * h);
    if (!(speed > 0.0) || !std::isfinite(speed)) {
      throw DegenerateParameterization(
          "curve_integral: vanishing speed at t = " + std::to_string(t));
    }
    return integrand(parameterization(t)) * speed;
  };
  const int panels = std::max(1, points / 16);
  return quad::composite_gauss_legendre(speed_weighted, t_begin, t_end, panels);
}

}  // namespace iic::laplace
