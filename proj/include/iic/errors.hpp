#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace iic {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A caller violated a documented precondition (shape or argument mismatch).
struct ContractViolation : Error {
  using Error::Error;
};

/// A computation produced non-finite values (overflow in a model, bad weights).
struct NumericError : Error {
  using Error::Error;
};

/// A matrix that must be full rank was not; carries the singular-value
/// spectrum that triggered the failure.
struct RankDeficient : Error {
  Eigen::VectorXd singular_values;
  RankDeficient(const std::string& what, Eigen::VectorXd spectrum)
      : Error(what), singular_values(std::move(spectrum)) {}
  explicit RankDeficient(const std::string& what) : Error(what) {}
};

/// A matrix required to be symmetric positive definite failed its Cholesky
/// factorization.
struct NotPositiveDefinite : Error {
  using Error::Error;
};

/// An iterative solver hit its iteration limit; carries the final residual.
struct DidNotConverge : Error {
  double residual = 0.0;
  DidNotConverge(const std::string& what, double final_residual)
      : Error(what), residual(final_residual) {}
};

/// The interpolation constraint set is empty (targets not attainable).
struct Infeasible : Error {
  using Error::Error;
};

/// The requested configuration is outside the supported envelope.
struct Unsupported : Error {
  using Error::Error;
};

/// The prior mode interpolates the data, so criteria built on
/// R(theta_star) - R(theta0) > 0 are undefined.
struct PriorDegenerate : Error {
  using Error::Error;
};

/// Zero training residual where a positive one is required (BIC in the
/// interpolating regime).
struct DegenerateResidual : Error {
  using Error::Error;
};

/// A radial integral whose tail never fell below the resolution target.
struct TailNotResolved : Error {
  using Error::Error;
};

/// A curve parameterization with vanishing speed.
struct DegenerateParameterization : Error {
  using Error::Error;
};

/// Malformed binary or text input; carries the offending byte offset.
struct FormatError : Error {
  std::size_t byte_offset = 0;
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        byte_offset(offset) {}
};

/// Invalid configuration document (unknown keys, bad values).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace iic
