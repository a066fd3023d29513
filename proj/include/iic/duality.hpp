#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "iic/dataset.hpp"
#include "iic/errors.hpp"
#include "iic/loss.hpp"
#include "iic/model.hpp"
#include "iic/numeric.hpp"
#include "iic/prior.hpp"
#include "iic/quadrature.hpp"
#include "iic/rng.hpp"

namespace iic::duality {

inline constexpr double kPi = 3.14159265358979323846;

/// The data-space prior dual to an isotropic Gaussian parameter prior under
/// a linear model: zero mean, covariance tau0 * X X^T.
struct DualGaussianPrior {
  Vector mean;
  Matrix covariance;
  double log_det_cov = 0.0;

  double log_density(const Vector& z) const {
    const Eigen::Index n = mean.size();
    Eigen::LLT<Matrix> llt(covariance);
    const Vector centered = z - mean;
    const double quad_form = centered.dot(llt.solve(centered));
    return -0.5 * (static_cast<double>(n) * std::log(2.0 * kPi) + log_det_cov +
                   quad_form);
  }
  double density(const Vector& z) const { return std::exp(log_density(z)); }
};

inline DualGaussianPrior dual_prior_linear(const Matrix& x, double tau0) {
  if (!(tau0 > 0.0)) {
    throw ContractViolation("dual_prior_linear: tau0 must be positive");
  }
  DualGaussianPrior dual;
  dual.mean = Vector::Zero(x.rows());
  dual.covariance = tau0 * (x * x.transpose());
  dual.covariance = 0.5 * (dual.covariance + dual.covariance.transpose()).eval();
  Eigen::LLT<Matrix> llt(dual.covariance);
  if (llt.info() != Eigen::Success) {
    Eigen::JacobiSVD<Matrix> svd(x);
    throw RankDeficient("dual_prior_linear: X X^T is singular",
                        svd.singularValues());
  }
  dual.log_det_cov =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return dual;
}

namespace detail {

struct KernelBasis {
  Matrix pinv;    // d x n, X^+
  Matrix kernel;  // d x (d - n), orthonormal basis of ker(X)
  double log_det_gram = 0.0;
};

inline KernelBasis kernel_basis(const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n >= d) {
    throw ContractViolation("kernel_basis: model must be overparameterized");
  }
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullV | Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  const double tol = numeric::rank_tolerance(n, d, sv[0]);
  if (sv[n - 1] <= tol) {
    throw RankDeficient("kernel_basis: X is rank deficient", sv);
  }
  KernelBasis basis;
  basis.pinv = svd.matrixV().leftCols(n) * sv.cwiseInverse().asDiagonal() *
               svd.matrixU().transpose();
  basis.kernel = svd.matrixV().rightCols(d - n);
  basis.log_det_gram = 2.0 * sv.array().log().sum();
  return basis;
}

}  // namespace detail

/// Monte Carlo estimate of the dual prior density
/// pi*(z) = det(X X^T)^{-1/2} int pi(X^+ z + Q w) dw over the kernel
/// coordinates, by importance sampling with w ~ N(0, I). Returns the
/// estimate and its standard error.
inline std::pair<double, double> fiber_density_mc(const Matrix& x,
                                                  const Prior& prior,
                                                  const Vector& z,
                                                  std::size_t samples,
                                                  std::uint64_t seed) {
  if (z.size() != x.rows()) {
    throw ContractViolation("fiber_density_mc: z has wrong dimension");
  }
  if (samples == 0) {
    throw ContractViolation("fiber_density_mc: need at least one sample");
  }
  const auto basis = detail::kernel_basis(x);
  const Eigen::Index k = basis.kernel.cols();
  const Vector anchor = basis.pinv * z;
  const double log_scale = -0.5 * basis.log_det_gram;
  // Proposal: standard normal in kernel coordinates; the weight is
  // pi(anchor + Q w) / phi(w).
  const double log_phi_const = -0.5 * static_cast<double>(k) * std::log(2.0 * kPi);
  // Accumulate per fixed-size chunk so a parallel evaluation (one substream
  // per chunk) would reproduce the serial result exactly.
  constexpr std::size_t kChunk = 65536;
  double sum = 0.0, sum_sq = 0.0;
  std::size_t done = 0;
  std::uint64_t chunk_id = 0;
  Vector w(k);
  while (done < samples) {
    const std::size_t count = std::min(kChunk, samples - done);
    rng::Substream stream(seed, 0x66696265ULL, chunk_id);
    double chunk_sum = 0.0, chunk_sum_sq = 0.0;
    for (std::size_t s = 0; s < count; ++s) {
      for (Eigen::Index i = 0; i < k; ++i) w[i] = stream.normal();
      const double log_phi = log_phi_const - 0.5 * w.squaredNorm();
      const double log_weight =
          prior.log_density(Vector(anchor + basis.kernel * w)) - log_phi;
      const double weight = std::exp(log_weight);
      if (!std::isfinite(weight)) {
        throw NumericError("fiber_density_mc: non-finite importance weight");
      }
      chunk_sum += weight;
      chunk_sum_sq += weight * weight;
    }
    sum += chunk_sum;
    sum_sq += chunk_sum_sq;
    done += count;
    ++chunk_id;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  const double scale = std::exp(log_scale);
  return {scale * mean, scale * std::sqrt(var / n)};
}

enum class EvidenceMethod { Quadrature, MonteCarlo };

/// Primal and dual evidence values for one instance, with the shared
/// temperature and the combined Monte Carlo standard error (zero for
/// quadrature).
struct EvidencePair {
  double primal = 0.0;
  double dual = 0.0;
  double gamma = 0.0;
  EvidenceMethod method = EvidenceMethod::Quadrature;
  double std_error = 0.0;
};

namespace detail {

/// Composite Gauss-Legendre over a box with 16-point panels; the panel
/// count per axis is budget/16. Feature widths below the panel width are
/// not resolved, so callers pass budgets sized to the narrowest factor.
inline double composite_box_integral(
    const std::function<double(const Vector&)>& f, const Vector& lo,
    const Vector& hi, int points_per_axis) {
  const Eigen::Index k = lo.size();
  const int panels = std::max(1, points_per_axis / 16);
  const quad::Rule& rule = quad::gauss_legendre_rule(16);
  std::vector<double> nodes, weights;
  nodes.reserve(static_cast<std::size_t>(panels) * 16);
  weights.reserve(static_cast<std::size_t>(panels) * 16);
  std::vector<std::vector<double>> axis_nodes(k), axis_weights(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const double width = (hi[a] - lo[a]) / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = lo[a] + (p + 0.5) * width;
      for (int i = 0; i < 16; ++i) {
        axis_nodes[a].push_back(mid + 0.5 * width * rule.nodes[i]);
        axis_weights[a].push_back(0.5 * width * rule.weights[i]);
      }
    }
  }
  const std::size_t per_axis = axis_nodes[0].size();
  std::size_t total = 1;
  for (Eigen::Index a = 0; a < k; ++a) total *= per_axis;
  std::vector<double> terms(total);
  Vector point(k);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double w = 1.0;
    for (Eigen::Index a = 0; a < k; ++a) {
      const std::size_t idx = rem % per_axis;
      rem /= per_axis;
      point[a] = axis_nodes[a][idx];
      w *= axis_weights[a][idx];
    }
    terms[flat] = w * f(point);
  }
  return numeric::pairwise_sum(terms);
}

}  // namespace detail

/// Marginal likelihood over parameter space:
/// Z = int c_{n,gamma} exp(-L(F(theta), y)/gamma) pi(theta) dtheta.
/// Quadrature supports d <= 4 (box: prior mean +- 8 prior standard
/// deviations); Monte Carlo draws from an isotropic Gaussian prior.
/// For Monte Carlo, *std_error_out (if given) receives the standard error.
inline double evidence_primal(const PredictorModel& model,
                              const RegressionDataset& data, const Prior& prior,
                              double gamma, EvidenceMethod method,
                              std::size_t budget, std::uint64_t seed = 0,
                              double* std_error_out = nullptr) {
  if (!(gamma > 0.0)) {
    throw ContractViolation("evidence_primal: gamma must be positive");
  }
  const GibbsLikelihood gibbs(gamma);
  const Vector y = data.stacked_targets();
  const double log_c = gibbs.log_normalizer(data.stacked_size());
  if (std_error_out) *std_error_out = 0.0;
  if (method == EvidenceMethod::Quadrature) {
    if (model.param_dim > 4) {
      throw Unsupported("evidence_primal: quadrature supports d <= 4");
    }
    if (prior.kind != Prior::Kind::IsotropicGaussian) {
      throw Unsupported(
          "evidence_primal: quadrature box requires a Gaussian prior");
    }
    const double half_width = 8.0 * std::sqrt(prior.tau0);
    const Vector lo = prior.theta0.array() - half_width;
    const Vector hi = prior.theta0.array() + half_width;
    auto integrand = [&](const Vector& theta) {
      const Vector f = eval_stacked_vec(model, theta, data);
      return std::exp(log_c - (f - y).squaredNorm() / gamma +
                      prior.log_density(theta));
    };
    return detail::composite_box_integral(integrand, lo, hi,
                                          static_cast<int>(budget));
  }
  if (prior.kind != Prior::Kind::IsotropicGaussian) {
    throw Unsupported("evidence_primal: Monte Carlo samples a Gaussian prior");
  }
  const double sd = std::sqrt(prior.tau0);
  constexpr std::size_t kChunk = 65536;
  double sum = 0.0, sum_sq = 0.0;
  std::size_t done = 0;
  std::uint64_t chunk_id = 0;
  Vector theta(model.param_dim);
  while (done < budget) {
    const std::size_t count = std::min(kChunk, budget - done);
    rng::Substream stream(seed, 0x65766964ULL, chunk_id);
    for (std::size_t s = 0; s < count; ++s) {
      for (Eigen::Index i = 0; i < model.param_dim; ++i) {
        theta[i] = prior.theta0[i] + sd * stream.normal();
      }
      const Vector f = eval_stacked_vec(model, theta, data);
      const double value = std::exp(log_c - (f - y).squaredNorm() / gamma);
      sum += value;
      sum_sq += value * value;
    }
    done += count;
    ++chunk_id;
  }
  const double n = static_cast<double>(budget);
  const double mean = sum / n;
  if (std_error_out) {
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    *std_error_out = std::sqrt(var / n);
  }
  return mean;
}

/// Marginal likelihood of the dual model over data space:
/// Z* = int c_{n,gamma} exp(-L(z, y)/gamma) pi*(z) dz, with pi* the dual
/// Gaussian prior. Quadrature supports mn <= 4.
inline double evidence_dual(const DualGaussianPrior& dual, const Vector& y,
                            double gamma, EvidenceMethod method,
                            std::size_t budget, std::uint64_t seed = 0,
                            double* std_error_out = nullptr) {
  if (!(gamma > 0.0)) {
    throw ContractViolation("evidence_dual: gamma must be positive");
  }
  const Eigen::Index mn = y.size();
  if (dual.mean.size() != mn) {
    throw ContractViolation("evidence_dual: dimension mismatch");
  }
  const GibbsLikelihood gibbs(gamma);
  const double log_c = gibbs.log_normalizer(mn);
  if (std_error_out) *std_error_out = 0.0;
  if (method == EvidenceMethod::Quadrature) {
    if (mn > 4) {
      throw Unsupported("evidence_dual: quadrature supports mn <= 4");
    }
    // Box covering both Gaussian factors: the dual prior and the likelihood
    // kernel centered at y with per-coordinate scale sqrt(gamma/2).
    const double lik_sd = std::sqrt(0.5 * gamma);
    Vector lo(mn), hi(mn);
    for (Eigen::Index i = 0; i < mn; ++i) {
      const double prior_sd = std::sqrt(dual.covariance(i, i));
      lo[i] = std::min(dual.mean[i] - 8.0 * prior_sd, y[i] - 8.0 * lik_sd);
      hi[i] = std::max(dual.mean[i] + 8.0 * prior_sd, y[i] + 8.0 * lik_sd);
    }
    auto integrand = [&](const Vector& z) {
      return std::exp(log_c - (z - y).squaredNorm() / gamma +
                      dual.log_density(z));
    };
    return detail::composite_box_integral(integrand, lo, hi,
                                          static_cast<int>(budget));
  }
  // Monte Carlo: sample z ~ pi* by Cholesky, average the likelihood factor.
  Eigen::LLT<Matrix> llt(dual.covariance);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("evidence_dual: covariance not PD");
  }
  const Matrix chol = llt.matrixL();
  constexpr std::size_t kChunk = 65536;
  double sum = 0.0, sum_sq = 0.0;
  std::size_t done = 0;
  std::uint64_t chunk_id = 0;
  Vector g(mn);
  while (done < budget) {
    const std::size_t count = std::min(kChunk, budget - done);
    rng::Substream stream(seed, 0x7A647561ULL, chunk_id);
    for (std::size_t s = 0; s < count; ++s) {
      for (Eigen::Index i = 0; i < mn; ++i) g[i] = stream.normal();
      const Vector z = dual.mean + chol * g;
      const double value = std::exp(log_c - (z - y).squaredNorm() / gamma);
      sum += value;
      sum_sq += value * value;
    }
    done += count;
    ++chunk_id;
  }
  const double n = static_cast<double>(budget);
  const double mean = sum / n;
  if (std_error_out) {
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    *std_error_out = std::sqrt(var / n);
  }
  return mean;
}

/// Closed-form evidence of the linear-Gaussian instance: the Gaussian
/// convolution N(y; 0, tau0 X X^T + (gamma/2) I).
inline double evidence_closed_form_linear_gaussian(const Matrix& x,
                                                   const Vector& y, double tau0,
                                                   double gamma) {
  const Eigen::Index n = y.size();
  Matrix cov = tau0 * (x * x.transpose()) +
               0.5 * gamma * Matrix::Identity(n, n);
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("evidence_closed_form: covariance not PD");
  }
  const double log_det =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double quad_form = y.dot(llt.solve(y));
  return std::exp(-0.5 * (static_cast<double>(n) * std::log(2.0 * kPi) +
                          log_det + quad_form));
}

/// Evaluates both sides of the duality identity on a linear-Gaussian
/// instance with the same method and budget.
inline EvidencePair duality_evidence_pair(const Matrix& x, const Vector& y,
                                          double tau0, double gamma,
                                          EvidenceMethod method,
                                          std::size_t budget,
                                          std::uint64_t seed = 0) {
  const PredictorModel model = linear_model(x.cols());
  const RegressionDataset data(x, Matrix(y));
  const Prior prior = Prior::isotropic_gaussian(x.cols(), tau0);
  const DualGaussianPrior dual = dual_prior_linear(x, tau0);
  EvidencePair pair;
  pair.gamma = gamma;
  pair.method = method;
  double se_primal = 0.0, se_dual = 0.0;
  pair.primal = evidence_primal(model, data, prior, gamma, method, budget,
                                seed, &se_primal);
  pair.dual = evidence_dual(dual, y, gamma, method, budget, seed + 1, &se_dual);
  pair.std_error = std::sqrt(se_primal * se_primal + se_dual * se_dual);
  return pair;
}

/// Radial coarea identity: int_{R^d} g(||theta||) dtheta
/// = (2 pi^{d/2} / Gamma(d/2)) int_0^inf r^{d-1} g(r) dr.
/// The radial integral runs adaptively over dyadic segments until two
/// consecutive segments contribute less than 1e-12 of the accumulated
/// value; an unresolved tail raises TailNotResolved. `max_evals` caps the
/// total integrand-evaluation work.
inline double radial_integral(const std::function<double(double)>& g,
                              Eigen::Index d,
                              std::size_t max_evals = 50'000'000) {
  if (d < 1) throw ContractViolation("radial_integral: d must be >= 1");
  auto integrand = [&](double r) {
    const double value = std::pow(r, static_cast<double>(d - 1)) * g(r);
    if (!std::isfinite(value)) {
      throw NumericError("radial_integral: non-finite integrand");
    }
    return value;
  };
  double accumulated = 0.0;
  double segment_lo = 0.0;
  double segment_hi = 1.0;
  int quiet_segments = 0;
  for (int segment = 0; segment < 64; ++segment) {
    // Tolerance anchored to this segment's own rough estimate and the
    // running total, so near-zero segments resolve in one pass.
    double rough_err = 0.0;
    const double rough =
        quad::detail::gk15(integrand, segment_lo, segment_hi, rough_err);
    const double tol =
        1e-13 * std::max({std::abs(rough), std::abs(accumulated), 1e-30});
    double part;
    try {
      part = quad::adaptive_gk(integrand, segment_lo, segment_hi, tol,
                               max_evals);
    } catch (const Unsupported&) {
      throw TailNotResolved("radial_integral: evaluation budget exhausted");
    }
    accumulated += part;
    if (std::abs(part) < 1e-12 * std::max(1.0, std::abs(accumulated))) {
      if (++quiet_segments >= 2) {
        const double surface =
            2.0 * std::pow(kPi, 0.5 * static_cast<double>(d)) /
            std::tgamma(0.5 * static_cast<double>(d));
        return surface * accumulated;
      }
    } else {
      quiet_segments = 0;
    }
    segment_lo = segment_hi;
    segment_hi *= 2.0;
  }
  throw TailNotResolved("radial_integral: tail still active at r = 2^63");
}

}  // namespace iic::duality
