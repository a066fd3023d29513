#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "iic/dataset.hpp"
#include "iic/errors.hpp"
#include "iic/rng.hpp"

namespace iic::harness {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

struct SyntheticSpec {
  // p = 4 keeps the Gaussian-kernel Gram matrix at full numerical rank for
  // interpolation while the radial target saturates within a few dozen
  // random features; lower p loses rank, higher p defeats small-d fits.
  Eigen::Index p = 4;
  Eigen::Index n = 200;
  double noise = 0.1;  // standard deviation of additive target noise
};

/// Draws inputs with standard normal entries and targets
/// y = sin(||x||) + noise * eps. Deterministic in the seed.
inline RegressionDataset synthetic_dataset(const SyntheticSpec& spec,
                                           std::uint64_t seed) {
  rng::Substream stream(seed, 0x73796E74ULL);
  Matrix inputs(spec.n, spec.p);
  Matrix targets(spec.n, 1);
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    for (Eigen::Index j = 0; j < spec.p; ++j) {
      inputs(i, j) = stream.normal();
    }
    targets(i, 0) =
        std::sin(inputs.row(i).norm()) + spec.noise * stream.normal();
  }
  return RegressionDataset(std::move(inputs), std::move(targets));
}

/// Median pairwise Euclidean distance over at most 500 rows; the usual
/// kernel-bandwidth heuristic.
inline double median_heuristic_bandwidth(const Matrix& inputs) {
  const Eigen::Index n = std::min<Eigen::Index>(inputs.rows(), 500);
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dists.push_back((inputs.row(i) - inputs.row(j)).norm());
    }
  }
  if (dists.empty()) {
    throw ContractViolation("median_heuristic_bandwidth: need >= 2 rows");
  }
  auto mid = dists.begin() + dists.size() / 2;
  std::nth_element(dists.begin(), mid, dists.end());
  return *mid;
}

/// Random Fourier features sqrt(2/d) cos(W x + b) approximating the
/// Gaussian kernel exp(-||x - x'||^2 / (2 bw^2)): W entries are
/// N(0, 1/bw^2), b is uniform on [0, 2 pi). The draw is keyed by
/// (seed, d) so every grid point of a sweep is reproducible on its own.
inline Matrix rff_transform(const Matrix& raw_inputs, Eigen::Index d,
                            double bandwidth, std::uint64_t seed) {
  if (d < 1) throw ContractViolation("rff_transform: d must be >= 1");
  if (!(bandwidth > 0.0)) {
    throw ContractViolation("rff_transform: bandwidth must be positive");
  }
  const Eigen::Index p = raw_inputs.cols();
  rng::Substream stream(seed, 0x72666631ULL, static_cast<std::uint64_t>(d));
  Matrix w(d, p);
  Vector b(d);
  const double w_sd = 1.0 / bandwidth;
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index j = 0; j < p; ++j) w(k, j) = w_sd * stream.normal();
    b[k] = kTwoPi * stream.uniform();
  }
  Matrix phases = raw_inputs * w.transpose();  // n x d
  phases.rowwise() += b.transpose();
  const double scale = std::sqrt(2.0 / static_cast<double>(d));
  return scale * phases.array().cos().matrix();
}

}  // namespace iic::harness
