#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "iic/errors.hpp"
#include "iic/numeric.hpp"

namespace iic::quad {

struct Rule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // summing to 2
};

/// Gauss-Legendre rule of order n: Newton iteration on P_n from the
/// Chebyshev-like initial guess, weights 2 / ((1 - x^2) P_n'(x)^2).
inline Rule gauss_legendre_rule_uncached(int n) {
  if (n < 1) throw ContractViolation("gauss_legendre: order must be >= 1");
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Evaluate P_n and P_n' by the three-term recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

inline const Rule& gauss_legendre_rule(int n) {
  static std::mutex mutex;
  static std::map<int, Rule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, gauss_legendre_rule_uncached(n)).first;
  }
  return it->second;
}

/// Fixed-order Gauss-Legendre on [a, b].
template <class F>
double gauss_legendre(const F& f, double a, double b, int n) {
  const Rule& rule = gauss_legendre_rule(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::vector<double> terms(rule.nodes.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    terms[i] = rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return half * numeric::pairwise_sum(terms);
}

/// Composite Gauss-Legendre: `panels` equal panels of a 16-point rule.
template <class F>
double composite_gauss_legendre(const F& f, double a, double b, int panels,
                                int points_per_panel = 16) {
  if (panels < 1) panels = 1;
  std::vector<double> parts(static_cast<std::size_t>(panels));
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    parts[p] = gauss_legendre(f, a + p * width, a + (p + 1) * width,
                              points_per_panel);
  }
  return numeric::pairwise_sum(parts);
}

namespace detail {

// Gauss-Kronrod 7-15 pair: abscissa, G7 weight, K15 weight.
inline constexpr double kGk15[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529}};

template <class F>
double gk15(const F& f, double a, double b, double& err) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double y0 = f(mid);
  double g7 = kGk15[0][1] * y0;
  double k15 = kGk15[0][2] * y0;
  for (int i = 1; i < 8; ++i) {
    const double dx = half * kGk15[i][0];
    const double yi = f(mid + dx) + f(mid - dx);
    g7 += kGk15[i][1] * yi;
    k15 += kGk15[i][2] * yi;
  }
  err = std::abs(half * (k15 - g7));
  return half * k15;
}

template <class F>
double adaptive_gk_impl(const F& f, double a, double b, double tol, int depth,
                        std::size_t& evals, std::size_t max_evals) {
  double err = 0.0;
  const double value = gk15(f, a, b, err);
  evals += 15;
  if (evals > max_evals) {
    throw Unsupported("adaptive quadrature: evaluation budget exhausted");
  }
  if (err <= tol || depth >= 60) return value;
  const double mid = 0.5 * (a + b);
  return adaptive_gk_impl(f, a, mid, 0.5 * tol, depth + 1, evals, max_evals) +
         adaptive_gk_impl(f, mid, b, 0.5 * tol, depth + 1, evals, max_evals);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (7, 15) with bisection to the given absolute
/// error target.
template <class F>
double adaptive_gk(const F& f, double a, double b, double abs_tol,
                   std::size_t max_evals = 50'000'000) {
  std::size_t evals = 0;
  return detail::adaptive_gk_impl(f, a, b, abs_tol, 0, evals, max_evals);
}

}  // namespace iic::quad
