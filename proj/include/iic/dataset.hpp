#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>

#include "iic/errors.hpp"
#include "iic/numeric.hpp"

namespace iic {

/// A fixed regression dataset: n input rows of dimension p and n target rows
/// of dimension m. The stacked data size is N = m * n, always derived.
class RegressionDataset {
 public:
  RegressionDataset(Matrix inputs, Matrix targets)
      : inputs_(std::move(inputs)), targets_(std::move(targets)) {
    if (inputs_.rows() < 1 || targets_.cols() < 1) {
      throw ContractViolation("RegressionDataset: need n >= 1 and m >= 1");
    }
    if (inputs_.rows() != targets_.rows()) {
      throw ContractViolation(
          "RegressionDataset: inputs have " + std::to_string(inputs_.rows()) +
          " rows but targets have " + std::to_string(targets_.rows()));
    }
    if (!numeric::all_finite(inputs_) || !numeric::all_finite(targets_)) {
      throw NumericError("RegressionDataset: non-finite entries");
    }
  }

  const Matrix& inputs() const { return inputs_; }
  const Matrix& targets() const { return targets_; }

  Eigen::Index n() const { return inputs_.rows(); }
  Eigen::Index m() const { return targets_.cols(); }
  Eigen::Index p() const { return inputs_.cols(); }
  Eigen::Index stacked_size() const { return n() * m(); }

  /// Targets flattened in the library-wide vectorization order:
  /// row-major over (data point, output coordinate).
  Vector stacked_targets() const {
    Vector out(stacked_size());
    for (Eigen::Index i = 0; i < n(); ++i) {
      out.segment(i * m(), m()) = targets_.row(i).transpose();
    }
    return out;
  }

 private:
  Matrix inputs_;
  Matrix targets_;
};

}  // namespace iic
