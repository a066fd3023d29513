#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <vector>

#include "iic/errors.hpp"

namespace iic {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace numeric {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Central-difference step scale cbrt(eps), balancing truncation and rounding.
inline double cbrt_eps() {
  static const double v = std::cbrt(kEps);
  return v;
}

/// Standard pseudoinverse cutoff: singular values at or below
/// max(rows, cols) * eps * sigma_max are treated as zero.
inline double rank_tolerance(Eigen::Index rows, Eigen::Index cols,
                             double sigma_max) {
  return static_cast<double>(std::max(rows, cols)) * kEps * sigma_max;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// log det of a symmetric positive definite matrix via Cholesky.
/// Throws NotPositiveDefinite when the factorization fails.
inline double chol_log_det(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw ContractViolation("chol_log_det: matrix must be square");
  }
  if (a.rows() == 0) return 0.0;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("chol_log_det: matrix is not positive definite");
  }
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

/// Sums values in a fixed pairwise order, independent of how they were
/// produced; keeps large quadrature accumulations bit-stable.
inline double pairwise_sum(const std::vector<double>& values) {
  struct Impl {
    static double run(const double* v, std::size_t n) {
      if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
      }
      const std::size_t half = n / 2;
      return run(v, half) + run(v + half, n - half);
    }
  };
  return Impl::run(values.data(), values.size());
}

}  // namespace numeric
}  // namespace iic
