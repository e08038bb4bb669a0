#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "compactnet/errors.hpp"

namespace compactnet::quadrature {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the three-term recurrence.
inline Rule gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: need at least one node");
  if (n == 1) return Rule{{0.0}, {2.0}};
  // Returns (P_n(x), P_n'(x)).
  auto legendre = [n](double x) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

/// Quadrature for E[f(g)], g ~ N(0, 1).
///
/// Composite Gauss-Legendre over [-cutoff, cutoff] with panel boundaries on a
/// grid that contains 0, so integrands with a kink at the origin (ReLU-type
/// derivatives) are integrated with spectral accuracy on each side. Weights
/// already include the Gaussian density. `scale` shrinks panels for integrands
/// that vary on the length scale 1/scale near the origin.
class GaussianExpectation {
 public:
  explicit GaussianExpectation(int nodes_per_panel = 16, double scale = 1.0,
                               double cutoff = 12.0) {
    if (nodes_per_panel < 1) throw DomainError("GaussianExpectation: nodes_per_panel < 1");
    if (!(scale > 0.0) || !(cutoff > 0.0)) {
      throw DomainError("GaussianExpectation: scale and cutoff must be positive");
    }
    const Rule base = gauss_legendre(nodes_per_panel);
    const double width = 0.5 / std::max(1.0, std::min(scale, 100.0));
    const int panels_per_side = static_cast<int>(std::ceil(cutoff / width));
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (int side = -1; side <= 1; side += 2) {
      for (int k = 0; k < panels_per_side; ++k) {
        const double a = side * k * width;
        const double b = side * (k + 1) * width;
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * std::abs(b - a);
        for (std::size_t q = 0; q < base.nodes.size(); ++q) {
          const double g = mid + half * base.nodes[q];
          nodes_.push_back(g);
          weights_.push_back(base.weights[q] * half * norm * std::exp(-0.5 * g * g));
        }
      }
    }
  }

  template <typename F>
  double expect(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) acc += weights_[i] * f(nodes_[i]);
    return acc;
  }

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

}  // namespace compactnet::quadrature
