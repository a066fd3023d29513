#include <gtest/gtest.h>

#include <cmath>

#include "iic/geometry.hpp"
#include "iic/laplace.hpp"
#include "iic/quadrature.hpp"
#include "iic/verify.hpp"
#include "test_oracles.hpp"

using iic::Matrix;
using iic::Vector;
namespace lp = iic::laplace;
namespace fix = iic::verify::fixtures;

namespace {

TEST(LaplacePoint, ExactForQuadratic) {
  Matrix hess(1, 1);
  hess << 1.0;
  const auto est = lp::laplace_point(0.0, hess, 1.0, 0.1, 1);
  EXPECT_NEAR(est.value, std::sqrt(2.0 * M_PI * 0.1), 1e-12);
  EXPECT_NEAR(est.value, 0.79266545952120915, 1e-10);
  EXPECT_DOUBLE_EQ(est.value, std::exp(est.log_value));
  EXPECT_TRUE(est.leading_order);
  // The Gaussian integral oracle agrees to quadrature accuracy; the box is
  // ten standard deviations of the integrand.
  const double sd = std::sqrt(0.1);
  const double quad = lp::quadrature_nd(
      [](const Vector& x) { return std::exp(-x[0] * x[0] / (2.0 * 0.1)); },
      Vector::Constant(1, -10.0 * sd), Vector::Constant(1, 10.0 * sd), 64);
  EXPECT_NEAR(est.value, quad, 1e-10);
}

TEST(LaplacePoint, QuarticPerturbationErrorLaw) {
  Matrix hess(1, 1);
  hess << 1.0;
  auto quadrature_value = [](double gamma) {
    return iic::quad::adaptive_gk(
        [gamma](double x) {
          return std::exp(-(0.5 * x * x + x * x * x * x) / gamma);
        },
        -1.0, 1.0, 1e-13);
  };
  auto rel_error = [&](double gamma) {
    const auto est = lp::laplace_point(0.0, hess, 1.0, gamma, 1);
    const double exact = quadrature_value(gamma);
    return std::abs(est.value - exact) / exact;
  };
  EXPECT_LE(rel_error(1e-3), 5e-3);
  const double ratio = rel_error(2e-3) / rel_error(1e-3);
  EXPECT_GE(ratio, 1.5);
  EXPECT_LE(ratio, 2.5);
}

TEST(LaplacePoint, DeterminantScaling) {
  const double gamma = 0.05;
  Matrix iso = Matrix::Identity(2, 2);
  Matrix aniso = Matrix::Zero(2, 2);
  aniso(0, 0) = 1.0;
  aniso(1, 1) = 4.0;
  const auto a = lp::laplace_point(0.0, iso, 1.0, gamma, 2);
  const auto b = lp::laplace_point(0.0, aniso, 1.0, gamma, 2);
  EXPECT_NEAR(b.value / a.value, 0.5, 1e-12);
}

TEST(LaplacePoint, RejectsBadInputs) {
  Matrix hess = -Matrix::Identity(2, 2);
  EXPECT_THROW(lp::laplace_point(0.0, hess, 1.0, 0.1, 2),
               iic::NotPositiveDefinite);
  EXPECT_THROW(lp::laplace_point(0.0, Matrix::Identity(2, 2), -1.0, 0.1, 2),
               iic::ContractViolation);
}

TEST(LaplaceManifold, CircleFormulaWiring) {
  const auto model = fix::sphere_model(2);
  const auto data = fix::scalar_constraint_data(1.0);
  Vector center(2);
  center << 2.0, 0.0;
  const auto prior = fix::quadratic_prior(center);
  Vector theta(2);
  theta << 1.0, 0.0;
  const double tau = 0.01;
  const auto est = lp::laplace_manifold(model, data, prior, theta, tau, 1.0);
  // Hand value (2 pi tau)^{1/2} e^{-0.5/tau} 2^{-1/2}.
  const double expected_log = 0.5 * std::log(2.0 * M_PI * tau) - 0.5 / tau -
                              0.5 * std::log(2.0);
  EXPECT_NEAR(est.log_value, expected_log, 1e-5);
}

TEST(LaplaceManifold, CircleAgainstArcLengthQuadrature) {
  const auto model = fix::sphere_model(2);
  const auto data = fix::scalar_constraint_data(1.0);
  Vector center(2);
  center << 2.0, 0.0;
  const auto prior = fix::quadratic_prior(center);
  Vector theta(2);
  theta << 1.0, 0.0;
  const double tau = 0.01;
  const auto est = lp::laplace_manifold(model, data, prior, theta, tau, 1.0);
  const double oracle = lp::curve_integral(
      [](double t) {
        Vector p(2);
        p << std::cos(t), std::sin(t);
        return p;
      },
      [&](const Vector& p) { return std::exp(-prior.R(p) / tau); }, 0.0,
      2.0 * M_PI, 12800);
  EXPECT_LE(std::abs(est.value - oracle) / oracle, 0.02);
}

TEST(LaplaceManifold, NoConstraintsDegeneratesToPoint) {
  // mn = 0: the frame machinery on an empty Jacobian reproduces the
  // unconstrained Laplace value in a rotated basis.
  const Matrix df(0, 2);
  const Matrix pi = iic::geometry::tangent_projector(df);
  EXPECT_EQ((pi - Matrix::Identity(2, 2)).norm(), 0.0);
  const Matrix u = iic::geometry::tangent_basis(pi, 0);
  const Matrix b = oracles::random_matrix(2, 2, 801);
  const Matrix hess = b.transpose() * b + Matrix::Identity(2, 2);
  const Matrix sandwiched = u.transpose() * hess * u;
  const double tau = 0.07;
  const auto manifold = lp::laplace_manifold_from_hessian(
      1.3, iic::numeric::chol_log_det(sandwiched), 2, tau, 0.6);
  const auto point = lp::laplace_point(1.3, hess, 0.6, tau, 2);
  EXPECT_NEAR(manifold.value, point.value, 1e-8 * point.value);
}

TEST(QuadratureNd, NormalizedGaussians) {
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * M_PI);
  const double one_d = lp::quadrature_nd(
      [&](const Vector& x) {
        return inv_sqrt_2pi * std::exp(-0.5 * x[0] * x[0]);
      },
      Vector::Constant(1, -8.0), Vector::Constant(1, 8.0), 64);
  EXPECT_NEAR(one_d, 1.0, 1e-10);

  const double two_d = lp::quadrature_nd(
      [&](const Vector& x) {
        return inv_sqrt_2pi * inv_sqrt_2pi *
               std::exp(-0.5 * x.squaredNorm());
      },
      Vector::Constant(2, -8.0), Vector::Constant(2, 8.0), 64);
  EXPECT_NEAR(two_d, 1.0, 1e-8);
}

TEST(QuadratureNd, GaussianWidthGamma) {
  const double gamma = 0.05;
  const double value = lp::quadrature_nd(
      [&](const Vector& x) { return std::exp(-x[0] * x[0] / gamma); },
      Vector::Constant(1, -3.0), Vector::Constant(1, 3.0), 96);
  EXPECT_NEAR(value, std::sqrt(M_PI * gamma), 1e-8);
}

TEST(QuadratureNd, DeterministicAndBounded) {
  auto f = [](const Vector& x) { return std::cos(x[0]) * std::exp(-x[0] * x[0]); };
  const double a = lp::quadrature_nd(f, Vector::Constant(1, -4.0),
                                     Vector::Constant(1, 4.0), 48);
  const double b = lp::quadrature_nd(f, Vector::Constant(1, -4.0),
                                     Vector::Constant(1, 4.0), 48);
  EXPECT_EQ(a, b);
  EXPECT_THROW(lp::quadrature_nd(f, Vector::Constant(5, -1.0),
                                 Vector::Constant(5, 1.0), 8),
               iic::Unsupported);
}

TEST(CurveIntegral, UnitCircleArcLength) {
  auto circle = [](double t) {
    Vector p(2);
    p << std::cos(t), std::sin(t);
    return p;
  };
  const double circumference = lp::curve_integral(
      circle, [](const Vector&) { return 1.0; }, 0.0, 2.0 * M_PI, 256);
  EXPECT_NEAR(circumference, 2.0 * M_PI, 1e-8);
}

TEST(CurveIntegral, FirstCoordinateSquared) {
  auto circle = [](double t) {
    Vector p(2);
    p << std::cos(t), std::sin(t);
    return p;
  };
  const double value = lp::curve_integral(
      circle, [](const Vector& p) { return p[0] * p[0]; }, 0.0, 2.0 * M_PI,
      256);
  EXPECT_NEAR(value, M_PI, 1e-8);
}

TEST(CurveIntegral, ReparameterizationInvariance) {
  auto fast = [](double t) {
    Vector p(2);
    p << std::cos(2.0 * M_PI * t), std::sin(2.0 * M_PI * t);
    return p;
  };
  auto integrand = [](const Vector& p) { return 1.0 + p[1] * p[1]; };
  const double slow_value = lp::curve_integral(
      [](double t) {
        Vector p(2);
        p << std::cos(t), std::sin(t);
        return p;
      },
      integrand, 0.0, 2.0 * M_PI, 512);
  const double fast_value = lp::curve_integral(fast, integrand, 0.0, 1.0, 512);
  EXPECT_NEAR(slow_value, fast_value, 1e-8 * std::abs(slow_value));
}

TEST(CurveIntegral, DegenerateSpeedRejected) {
  auto constant = [](double) { return Vector::Zero(2).eval(); };
  EXPECT_THROW(lp::curve_integral(constant, [](const Vector&) { return 1.0; },
                                  0.0, 1.0, 64),
               iic::DegenerateParameterization);
}

}  // namespace
