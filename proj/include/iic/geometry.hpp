#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <string>
#include <utility>

#include "iic/dataset.hpp"
#include "iic/errors.hpp"
#include "iic/loss.hpp"
#include "iic/model.hpp"
#include "iic/numeric.hpp"
#include "iic/prior.hpp"

namespace iic::geometry {

/// Pointwise tangent-space data of the zero-loss manifold at theta:
/// the Gram matrix DF DF^T, the orthogonal projector onto ker(DF), and an
/// orthonormal basis of that kernel.
struct TangentFrame {
  Vector theta;
  Matrix gram;        // mn x mn, DF DF^T
  Matrix projector;   // d x d, symmetric idempotent onto ker(DF)
  Matrix basis;       // d x (d - mn), orthonormal columns spanning ker(DF)
  Vector singular_values;  // of DF, descending
};

/// DF DF^T. Exact symmetry is enforced on the product.
inline Matrix gram_matrix(const Matrix& df) {
  Matrix j = df * df.transpose();
  j = 0.5 * (j + j.transpose()).eval();
  return j;
}

/// log det(DF DF^T) via Cholesky; a failed factorization means DF lost rank,
/// reported as RankDeficient (the full-rank-on-M assumption is broken).
inline double log_det_gram(const Matrix& gram) {
  if (gram.rows() != gram.cols()) {
    throw ContractViolation("log_det_gram: matrix must be square");
  }
  if (gram.rows() == 0) return 0.0;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw RankDeficient("log_det_gram: Gram matrix not positive definite");
  }
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

namespace detail {

inline Eigen::JacobiSVD<Matrix> full_svd_checked(const Matrix& df,
                                                 const char* where) {
  Eigen::JacobiSVD<Matrix> svd(df, Eigen::ComputeFullV | Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  if (df.rows() > 0) {
    const double tol = numeric::rank_tolerance(df.rows(), df.cols(), sv[0]);
    if (sv[sv.size() - 1] <= tol) {
      throw RankDeficient(std::string(where) + ": DF is rank deficient", sv);
    }
  }
  return svd;
}

}  // namespace detail

/// Orthogonal projector onto ker(DF): I - DF^T (DF DF^T)^{-1} DF, computed
/// as I - V V^T from the compact SVD for stability.
inline Matrix tangent_projector(const Matrix& df) {
  const Eigen::Index d = df.cols();
  if (df.rows() == 0) return Matrix::Identity(d, d);
  if (df.rows() > d) {
    throw ContractViolation("tangent_projector: more constraints than parameters");
  }
  auto svd = detail::full_svd_checked(df, "tangent_projector");
  const Matrix v_row = svd.matrixV().leftCols(df.rows());
  Matrix pi = Matrix::Identity(d, d) - v_row * v_row.transpose();
  pi = 0.5 * (pi + pi.transpose()).eval();
  return pi;
}

/// Orthonormal basis of range(pi) for a rank-(d - mn) projector, from its
/// eigendecomposition. Eigenvalues must split cleanly at 1/2.
inline Matrix tangent_basis(const Matrix& pi, Eigen::Index mn) {
  const Eigen::Index d = pi.rows();
  if (pi.cols() != d) {
    throw ContractViolation("tangent_basis: projector must be square");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(pi);
  if (eig.info() != Eigen::Success) {
    throw NumericError("tangent_basis: eigendecomposition failed");
  }
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (eig.eigenvalues()[i] > 0.5) ++rank;
  }
  if (rank != d - mn) {
    throw RankDeficient("tangent_basis: projector rank " +
                            std::to_string(rank) + ", expected " +
                            std::to_string(d - mn),
                        eig.eigenvalues());
  }
  // Ascending eigenvalues: the trailing columns carry the unit eigenvalues.
  return eig.eigenvectors().rightCols(rank);
}

/// Builds the frame at theta in one pass over a single SVD of DF. The kernel
/// basis comes from the trailing right singular vectors, exactly orthonormal.
inline TangentFrame tangent_frame(const PredictorModel& model,
                                  const RegressionDataset& data,
                                  const Vector& theta) {
  const Matrix df = jacobian(model, theta, data);
  const Eigen::Index d = df.cols();
  const Eigen::Index mn = df.rows();
  auto svd = detail::full_svd_checked(df, "tangent_frame");
  const Matrix& v = svd.matrixV();
  TangentFrame frame;
  frame.theta = theta;
  frame.gram = gram_matrix(df);
  const Matrix v_row = v.leftCols(mn);
  Matrix pi = Matrix::Identity(d, d) - v_row * v_row.transpose();
  frame.projector = 0.5 * (pi + pi.transpose());
  frame.basis = v.rightCols(d - mn);
  frame.singular_values = svd.singularValues();
  return frame;
}

/// Directional derivative of the projector applied to w:
/// S(u, w) = ((Pi(theta + h u) - Pi(theta - h u)) / (2h)) w, the shape
/// operator when u is tangent and w is normal. u must be tangent at theta.
inline Vector weingarten_fd(const PredictorModel& model,
                            const RegressionDataset& data, const Vector& theta,
                            const Vector& u, const Vector& w) {
  if (!(u.norm() > 0.0)) {
    throw ContractViolation("weingarten_fd: u must be nonzero");
  }
  const Matrix pi0 = tangent_projector(jacobian(model, theta, data));
  const double residual_u = (u - pi0 * u).norm();
  if (residual_u > 1e-6 * u.norm()) {
    throw ContractViolation(
        "weingarten_fd: u is not tangent (normal component " +
        std::to_string(residual_u) + ")");
  }
  const double h = numeric::cbrt_eps() * std::max(1.0, theta.norm());
  const Vector scaled = (h / u.norm()) * u;
  const Matrix pi_plus =
      tangent_projector(jacobian(model, Vector(theta + scaled), data));
  const Matrix pi_minus =
      tangent_projector(jacobian(model, Vector(theta - scaled), data));
  // Derivative along the unnormalized u, by linearity of the direction.
  return ((pi_plus - pi_minus) * w) * (u.norm() / (2.0 * h));
}

/// Manifold Hessian of R at a point of M, in kernel-basis coordinates:
/// H[k,l] = u_k^T (Pi grad^2 R u_l + S(u_l, (I - Pi) grad R)).
struct ManifoldHessianResult {
  Matrix hessian;     // (d - mn) x (d - mn), exactly symmetric
  double asymmetry;   // ||H - H^T||_F before symmetrization
  double log_det;     // via Cholesky of the symmetrized matrix
};

inline ManifoldHessianResult manifold_hessian(const PredictorModel& model,
                                              const RegressionDataset& data,
                                              const Prior& prior,
                                              const Vector& theta) {
  const double residual =
      total_loss(eval_stacked(model, theta, data), data.targets());
  if (residual > 1e-8) {
    throw ContractViolation("manifold_hessian: theta is off the manifold "
                            "(loss " + std::to_string(residual) + ")");
  }
  const TangentFrame frame = tangent_frame(model, data, theta);
  const Eigen::Index k = frame.basis.cols();
  const Vector grad = prior.grad_R(theta);
  const Matrix hess = prior.hess_R(theta);
  Matrix h = frame.basis.transpose() * hess * frame.basis;
  if (!model.linear) {
    const Vector normal_grad = grad - frame.projector * grad;
    for (Eigen::Index l = 0; l < k; ++l) {
      const Vector s = weingarten_fd(model, data, theta,
                                     Vector(frame.basis.col(l)), normal_grad);
      h.col(l) += frame.basis.transpose() * s;
    }
  }
  ManifoldHessianResult result;
  result.asymmetry = (h - h.transpose()).norm();
  result.hessian = 0.5 * (h + h.transpose());
  if (result.asymmetry > 1e-4 * (1.0 + result.hessian.norm())) {
    throw NumericError("manifold_hessian: asymmetry " +
                       std::to_string(result.asymmetry) +
                       " exceeds the finite-difference budget");
  }
  Eigen::LLT<Matrix> llt(result.hessian);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite(
        "manifold_hessian: not positive definite; theta is not a strict "
        "constrained minimizer");
  }
  result.log_det =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return result;
}

}  // namespace iic::geometry
