#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "iic/geometry.hpp"
#include "iic/interpolate.hpp"
#include "iic/verify.hpp"
#include "test_oracles.hpp"

using iic::Matrix;
using iic::Vector;
namespace geo = iic::geometry;
namespace fix = iic::verify::fixtures;

namespace {

TEST(GramMatrix, HandExamples) {
  Matrix x(1, 2);
  x << 1.0, 1.0;
  const Matrix j = geo::gram_matrix(x);
  ASSERT_EQ(j.rows(), 1);
  EXPECT_DOUBLE_EQ(j(0, 0), 2.0);

  Matrix ortho(2, 3);
  ortho << 1, 0, 0, 0, 1, 0;
  EXPECT_EQ((geo::gram_matrix(ortho) - Matrix::Identity(2, 2)).norm(), 0.0);
}

TEST(GramMatrix, MatchesNaiveMatmul) {
  const Matrix df = oracles::random_matrix(3, 7, 101);
  const Matrix expected = oracles::naive_matmul(df, df.transpose());
  EXPECT_LE((geo::gram_matrix(df) - expected).norm(), 1e-12);
}

TEST(TangentProjector, RowOfOnes) {
  Matrix x(1, 2);
  x << 1.0, 1.0;
  const Matrix pi = geo::tangent_projector(x);
  Matrix expected(2, 2);
  expected << 0.5, -0.5, -0.5, 0.5;
  EXPECT_LE((pi - expected).norm(), 1e-14);
  EXPECT_LE((pi * pi - pi).norm(), 1e-14);
  EXPECT_LE((pi * x.transpose()).norm(), 1e-14);
}

TEST(TangentProjector, CoordinateKernel) {
  Matrix x(2, 4);
  x << 1, 0, 0, 0, 0, 1, 0, 0;
  Matrix expected = Matrix::Zero(4, 4);
  expected(2, 2) = expected(3, 3) = 1.0;
  EXPECT_LE((geo::tangent_projector(x) - expected).norm(), 1e-14);
}

TEST(TangentProjector, TraceIsRankNullity) {
  const Matrix df = oracles::random_matrix(2, 6, 111);
  const Matrix pi = geo::tangent_projector(df);
  EXPECT_NEAR(pi.trace(), 4.0, 1e-8);
}

TEST(TangentProjector, RankDeficientCarriesSpectrum) {
  Matrix x(2, 3);
  x << 1, 2, 3, 2, 4, 6;  // second row is a multiple of the first
  try {
    geo::tangent_projector(x);
    FAIL() << "expected RankDeficient";
  } catch (const iic::RankDeficient& e) {
    ASSERT_EQ(e.singular_values.size(), 2);
    EXPECT_GT(e.singular_values[0], 1.0);
    EXPECT_LE(e.singular_values[1], 1e-12 * e.singular_values[0]);
  }
}

TEST(TangentBasis, TwoDimensionalKernelVector) {
  Matrix pi(2, 2);
  pi << 0.5, -0.5, -0.5, 0.5;
  const Matrix u = geo::tangent_basis(pi, 1);
  ASSERT_EQ(u.cols(), 1);
  // Unique up to sign.
  Vector expected(2);
  expected << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
  const double err =
      std::min((u.col(0) - expected).norm(), (u.col(0) + expected).norm());
  EXPECT_LE(err, 1e-12);
}

TEST(TangentBasis, FullSpaceEdge) {
  const Matrix u = geo::tangent_basis(Matrix::Identity(3, 3), 0);
  ASSERT_EQ(u.cols(), 3);
  EXPECT_LE((u.transpose() * u - Matrix::Identity(3, 3)).norm(), 1e-10);
}

TEST(TangentBasis, SpansRangeOfProjector) {
  const Matrix df = oracles::random_matrix(3, 9, 121);
  const Matrix pi = geo::tangent_projector(df);
  const Matrix u = geo::tangent_basis(pi, 3);
  EXPECT_LE((pi * u - u).norm(), 1e-8);
  EXPECT_LE((u.transpose() * u - Matrix::Identity(6, 6)).norm(), 1e-10);
}

TEST(TangentBasis, WrongRankIsRankDeficient) {
  const Matrix df = oracles::random_matrix(2, 5, 131);
  const Matrix pi = geo::tangent_projector(df);
  EXPECT_THROW(geo::tangent_basis(pi, 1), iic::RankDeficient);
}

TEST(TangentFrame, ProjectorIdentities) {
  for (std::uint64_t seed : {201, 202, 203}) {
    const Eigen::Index n = 3, d = 8;
    const Matrix x = oracles::random_matrix(n, d, seed);
    const Vector y = x * oracles::random_vector(d, seed + 50);
    const iic::RegressionDataset data(x, Matrix(y));
    const auto model = iic::linear_model(d);
    const auto frame =
        geo::tangent_frame(model, data, oracles::random_vector(d, seed + 90));
    const Matrix& pi = frame.projector;
    EXPECT_LE((pi - pi.transpose()).norm(), 1e-14);
    EXPECT_LE((pi * pi - pi).norm(), 1e-8 * d);
    EXPECT_LE((pi * x.transpose()).norm(), 1e-8 * x.norm());
    EXPECT_LE((frame.basis.transpose() * frame.basis -
               Matrix::Identity(d - n, d - n))
                  .norm(),
              1e-10);
    EXPECT_NEAR(pi.trace(), static_cast<double>(d - n), 1e-6);
    Eigen::LLT<Matrix> llt(frame.gram);
    EXPECT_EQ(llt.info(), Eigen::Success);
    ASSERT_EQ(frame.singular_values.size(), n);
  }
}

TEST(Weingarten, LinearModelIsZero) {
  const Eigen::Index d = 5;
  const Matrix x = oracles::random_matrix(2, d, 301);
  const Vector y = x * oracles::random_vector(d, 302);
  const iic::RegressionDataset data(x, Matrix(y));
  const auto model = iic::linear_model(d);
  const Vector theta = oracles::random_vector(d, 303);
  const auto frame = geo::tangent_frame(model, data, theta);
  const Vector u = frame.basis.col(0);
  const Vector w = oracles::random_vector(d, 304);
  EXPECT_EQ(geo::weingarten_fd(model, data, theta, u, w).norm(), 0.0);
}

TEST(Weingarten, CircleAnalyticValue) {
  // On the unit circle the projector is I - theta theta^T / ||theta||^2;
  // its directional derivative at (1,0) along (0,1) is -[[0,1],[1,0]].
  const auto model = fix::sphere_model(2);
  const auto data = fix::scalar_constraint_data(1.0);
  Vector theta(2), u(2), w(2);
  theta << 1.0, 0.0;
  u << 0.0, 1.0;
  w << -1.0, 0.0;
  const Vector s = geo::weingarten_fd(model, data, theta, u, w);
  Vector expected(2);
  expected << 0.0, 1.0;
  EXPECT_LE((s - expected).norm(), 1e-8);
}

TEST(Weingarten, LinearInSecondArgument) {
  const auto model = fix::sphere_model(3);
  const auto data = fix::scalar_constraint_data(1.0);
  Vector theta(3);
  theta << 1.0, 0.0, 0.0;
  const auto frame = geo::tangent_frame(model, data, theta);
  const Vector u = frame.basis.col(0);
  const Vector w = oracles::random_vector(3, 311);
  const Vector s1 = geo::weingarten_fd(model, data, theta, u, w);
  const Vector s2 = geo::weingarten_fd(model, data, theta, u, Vector(2.5 * w));
  EXPECT_LE((s2 - 2.5 * s1).norm(), 1e-8 * (1.0 + s1.norm()));
}

TEST(Weingarten, MapsNormalVectorsToTangentSpace) {
  const auto model = fix::sphere_model(3);
  const auto data = fix::scalar_constraint_data(1.0);
  Vector theta = oracles::random_vector(3, 321).normalized();
  const auto frame = geo::tangent_frame(model, data, theta);
  const Vector u = frame.basis.col(1);
  const Vector normal = theta;  // radial direction is normal to the sphere
  const Vector s = geo::weingarten_fd(model, data, theta, u, normal);
  const Vector residual = s - frame.projector * s;
  EXPECT_LE(residual.norm(), 1e-4 * s.norm());
}

TEST(Weingarten, NonTangentDirectionRejected) {
  const auto model = fix::sphere_model(2);
  const auto data = fix::scalar_constraint_data(1.0);
  Vector theta(2), u(2);
  theta << 1.0, 0.0;
  u << 1.0, 0.0;  // normal, not tangent
  EXPECT_THROW(geo::weingarten_fd(model, data, theta, u, u),
               iic::ContractViolation);
}

TEST(ManifoldHessian, LinearGaussianIsIdentity) {
  const Eigen::Index n = 2, d = 6;
  const Matrix x = oracles::random_matrix(n, d, 401);
  const Vector y = x * oracles::random_vector(d, 402);
  const auto fit = iic::interp::pinv_interpolator(x, y);
  const iic::RegressionDataset data(x, Matrix(y));
  const auto model = iic::linear_model(d);
  const auto prior = iic::Prior::isotropic_gaussian(d, 1.0);
  const auto mh = geo::manifold_hessian(model, data, prior, fit.theta_star);
  EXPECT_LE((mh.hessian - Matrix::Identity(d - n, d - n)).norm(), 1e-8);
  EXPECT_NEAR(mh.log_det, 0.0, 1e-10);
  EXPECT_EQ(mh.asymmetry, 0.0);
}

TEST(ManifoldHessian, LinearReducesToBasisSandwich) {
  // With a constant Jacobian the Weingarten term vanishes, so the manifold
  // Hessian must equal U^T A U at any feasible point, stationary or not.
  const Eigen::Index n = 2, d = 5;
  const Matrix x = oracles::random_matrix(n, d, 411);
  const Vector y = x * oracles::random_vector(d, 412);
  const auto fit = iic::interp::pinv_interpolator(x, y);
  const Matrix b = oracles::random_matrix(d, d, 413);
  const Matrix a = b.transpose() * b + Matrix::Identity(d, d);
  auto prior = iic::Prior::custom(
      [a](const Vector& t) { return 0.5 * t.dot(a * t); },
      [a](const Vector& t) { return Vector(a * t); },
      [a](const Vector&) { return a; }, Vector::Zero(d));
  const iic::RegressionDataset data(x, Matrix(y));
  const auto model = iic::linear_model(d);
  const auto frame = geo::tangent_frame(model, data, fit.theta_star);
  const Matrix expected = frame.basis.transpose() * a * frame.basis;
  const auto mh = geo::manifold_hessian(model, data, prior, fit.theta_star);
  EXPECT_LE((mh.hessian - expected).norm(), 1e-10 * expected.norm());
}

TEST(ManifoldHessian, CircleGeodesicValue) {
  const auto model = fix::sphere_model(2);
  const auto data = fix::scalar_constraint_data(1.0);
  Vector center(2);
  center << 2.0, 0.0;
  const auto prior = fix::quadratic_prior(center);
  Vector theta(2);
  theta << 1.0, 0.0;
  const auto mh = geo::manifold_hessian(model, data, prior, theta);
  ASSERT_EQ(mh.hessian.rows(), 1);
  EXPECT_NEAR(mh.hessian(0, 0), 2.0, 1e-5);
  EXPECT_LE(mh.asymmetry, 1e-4 * (1.0 + mh.hessian.norm()));
  EXPECT_NEAR(mh.log_det, std::log(2.0), 1e-5);
}

TEST(ManifoldHessian, SaddleIsNotPositiveDefinite) {
  // Prior centered at (-2, 0): theta = (1, 0) is the constrained maximum.
  const auto model = fix::sphere_model(2);
  const auto data = fix::scalar_constraint_data(1.0);
  Vector center(2);
  center << -2.0, 0.0;
  const auto prior = fix::quadratic_prior(center);
  Vector theta(2);
  theta << 1.0, 0.0;
  EXPECT_THROW(geo::manifold_hessian(model, data, prior, theta),
               iic::NotPositiveDefinite);
}

TEST(ManifoldHessian, OffManifoldRejected) {
  const auto model = fix::sphere_model(2);
  const auto data = fix::scalar_constraint_data(1.0);
  Vector center(2);
  center << 2.0, 0.0;
  const auto prior = fix::quadratic_prior(center);
  Vector theta(2);
  theta << 1.5, 0.0;
  EXPECT_THROW(geo::manifold_hessian(model, data, prior, theta),
               iic::ContractViolation);
}

TEST(LogDetGram, Examples) {
  Matrix j1(1, 1);
  j1 << 2.0;
  EXPECT_NEAR(geo::log_det_gram(j1), std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(geo::log_det_gram(Matrix::Identity(4, 4)), 0.0);
}

TEST(LogDetGram, MatchesEigenvalueOracle) {
  const Matrix b = oracles::random_matrix(5, 5, 501);
  const Matrix j = b * b.transpose() + Matrix::Identity(5, 5);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(j);
  const double expected = eig.eigenvalues().array().log().sum();
  EXPECT_NEAR(geo::log_det_gram(j), expected, 1e-10);
}

TEST(LogDetGram, SingularIsRankDeficient) {
  Matrix j = Matrix::Zero(2, 2);
  j(0, 0) = 1.0;
  EXPECT_THROW(geo::log_det_gram(j), iic::RankDeficient);
}

TEST(RotationEquivariance, GramAndProjector) {
  const Matrix df = oracles::random_matrix(2, 6, 601);
  // Random orthogonal Q from a QR factorization.
  const Matrix g = oracles::random_matrix(6, 6, 602);
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  const Matrix df_rot = df * q;
  EXPECT_LE((geo::gram_matrix(df_rot) - geo::gram_matrix(df)).norm(), 1e-10);
  EXPECT_NEAR(geo::log_det_gram(geo::gram_matrix(df_rot)),
              geo::log_det_gram(geo::gram_matrix(df)), 1e-10);
  const Matrix pi = geo::tangent_projector(df);
  const Matrix pi_rot = geo::tangent_projector(df_rot);
  EXPECT_LE((q * pi_rot * q.transpose() - pi).norm(), 1e-8);
}

}  // namespace
