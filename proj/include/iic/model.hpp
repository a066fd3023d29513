#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <utility>

#include "iic/dataset.hpp"
#include "iic/errors.hpp"
#include "iic/numeric.hpp"

namespace iic {

enum class JacobianMode { Analytic, FiniteDifference };

/// A smooth parameterized predictor f(x, theta) -> R^m together with the
/// stacked map F(theta) it induces on a dataset. When an analytic Jacobian
/// is supplied it must use the same vectorization order as eval_stacked:
/// row i*m + j holds d f_j(x_i, theta) / d theta.
struct PredictorModel {
  Eigen::Index param_dim = 0;
  std::function<Vector(const Vector& x, const Vector& theta)> predict;
  JacobianMode jacobian_mode = JacobianMode::FiniteDifference;
  std::function<Matrix(const RegressionDataset&, const Vector& theta)>
      analytic_jacobian;
  /// True when F is linear in theta (DF constant). Downstream code uses this
  /// to drop derivative-of-projector terms, which vanish identically.
  bool linear = false;
};

/// F(theta): row i holds f(x_i, theta).
inline Matrix eval_stacked(const PredictorModel& model, const Vector& theta,
                           const RegressionDataset& data) {
  if (theta.size() != model.param_dim) {
    throw ContractViolation("eval_stacked: theta has dimension " +
                            std::to_string(theta.size()) + ", model expects " +
                            std::to_string(model.param_dim));
  }
  if (!theta.allFinite()) {
    throw ContractViolation("eval_stacked: theta has non-finite entries");
  }
  Matrix out(data.n(), data.m());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    Vector fx = model.predict(data.inputs().row(i).transpose(), theta);
    if (fx.size() != data.m()) {
      throw ContractViolation("eval_stacked: predictor returned dimension " +
                              std::to_string(fx.size()) + ", targets have m = " +
                              std::to_string(data.m()));
    }
    out.row(i) = fx.transpose();
  }
  return out;
}

/// F(theta) flattened in the vectorization order (i, j) -> i*m + j.
inline Vector eval_stacked_vec(const PredictorModel& model, const Vector& theta,
                               const RegressionDataset& data) {
  const Matrix f = eval_stacked(model, theta, data);
  Vector out(data.stacked_size());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out.segment(i * data.m(), data.m()) = f.row(i).transpose();
  }
  return out;
}

/// Central-difference Jacobian of the vectorized stacked map, mn x d.
/// Per-coordinate step h_k = step_scale * max(1, |theta_k|); the default
/// step_scale = cbrt(eps) balances truncation against rounding.
inline Matrix jacobian_fd(const PredictorModel& model, const Vector& theta,
                          const RegressionDataset& data,
                          double step_scale = numeric::cbrt_eps()) {
  const Eigen::Index d = model.param_dim;
  Matrix jac(data.stacked_size(), d);
  Vector probe = theta;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double h = step_scale * std::max(1.0, std::abs(theta[k]));
    probe[k] = theta[k] + h;
    const Vector fp = eval_stacked_vec(model, probe, data);
    probe[k] = theta[k] - h;
    const Vector fm = eval_stacked_vec(model, probe, data);
    probe[k] = theta[k];
    jac.col(k) = (fp - fm) / (2.0 * h);
  }
  if (!numeric::all_finite(jac)) {
    throw NumericError("jacobian_fd: non-finite entries (model overflow?)");
  }
  return jac;
}

/// Jacobian of the vectorized stacked map in the model's configured mode.
inline Matrix jacobian(const PredictorModel& model, const Vector& theta,
                       const RegressionDataset& data) {
  if (theta.size() != model.param_dim || !theta.allFinite()) {
    throw ContractViolation("jacobian: bad theta");
  }
  if (model.jacobian_mode == JacobianMode::Analytic) {
    if (!model.analytic_jacobian) {
      throw ContractViolation("jacobian: analytic mode but no jacobian map");
    }
    Matrix jac = model.analytic_jacobian(data, theta);
    if (jac.rows() != data.stacked_size() || jac.cols() != model.param_dim) {
      throw ContractViolation("jacobian: analytic map returned wrong shape");
    }
    if (!numeric::all_finite(jac)) {
      throw NumericError("jacobian: non-finite entries");
    }
    return jac;
  }
  return jacobian_fd(model, theta, data);
}

/// f(x, theta) = x . theta with m = 1; DF(theta) is the design matrix.
inline PredictorModel linear_model(Eigen::Index d) {
  PredictorModel model;
  model.param_dim = d;
  model.predict = [](const Vector& x, const Vector& theta) {
    Vector out(1);
    out[0] = x.dot(theta);
    return out;
  };
  model.jacobian_mode = JacobianMode::Analytic;
  model.analytic_jacobian = [](const RegressionDataset& data,
                               const Vector& /*theta*/) {
    return data.inputs();
  };
  model.linear = true;
  return model;
}

}  // namespace iic
