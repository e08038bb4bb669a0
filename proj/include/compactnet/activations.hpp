#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "compactnet/errors.hpp"
#include "compactnet/quadrature.hpp"

namespace compactnet {

/// Scalar activations. `relu` and `identity` are included for experiment
/// parity and as degenerate baselines; they violate the smoothness and
/// nonlinearity requirements of the local convergence theory respectively.
enum class ActivationKind { sigmoid, tanh, erf, squared_relu, softplus, relu, identity };

inline constexpr std::array<ActivationKind, 7> kAllActivations = {
    ActivationKind::sigmoid,  ActivationKind::tanh, ActivationKind::erf,
    ActivationKind::squared_relu, ActivationKind::softplus, ActivationKind::relu,
    ActivationKind::identity};

inline std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::erf: return "erf";
    case ActivationKind::squared_relu: return "squared_relu";
    case ActivationKind::softplus: return "softplus";
    case ActivationKind::relu: return "relu";
    case ActivationKind::identity: return "identity";
  }
  return "unknown";
}

inline std::optional<ActivationKind> parse_activation(std::string_view name) {
  for (auto kind : kAllActivations) {
    if (to_string(kind) == name) return kind;
  }
  if (name == "squared-relu") return ActivationKind::squared_relu;
  return std::nullopt;
}

/// True when sigma' is Lipschitz (the smoothness half of the activation assumption).
inline bool is_smooth(ActivationKind kind) { return kind != ActivationKind::relu; }

namespace act {

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Sigmoid {
  static double value(double x) { return logistic(x); }
  static double deriv(double x) {
    const double s = logistic(x);
    return s * (1.0 - s);
  }
  static double second(double x) {
    const double s = logistic(x);
    return s * (1.0 - s) * (1.0 - 2.0 * s);
  }
};

struct Tanh {
  static double value(double x) { return std::tanh(x); }
  static double deriv(double x) {
    const double t = std::tanh(x);
    return 1.0 - t * t;
  }
  static double second(double x) {
    const double t = std::tanh(x);
    return -2.0 * t * (1.0 - t * t);
  }
};

/// sigma(x) = int_0^x exp(-t^2) dt, i.e. sqrt(pi)/2 * erf(x).
struct ErfIntegral {
  static double value(double x) { return 0.5 * std::sqrt(std::numbers::pi) * std::erf(x); }
  static double deriv(double x) { return std::exp(-x * x); }
  static double second(double x) { return -2.0 * x * std::exp(-x * x); }
};

struct SquaredRelu {
  static double value(double x) { return x > 0.0 ? x * x : 0.0; }
  static double deriv(double x) { return x > 0.0 ? 2.0 * x : 0.0; }
  static double second(double x) { return x > 0.0 ? 2.0 : 0.0; }
};

struct Softplus {
  static double value(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }
  static double deriv(double x) { return logistic(x); }
  static double second(double x) {
    const double s = logistic(x);
    return s * (1.0 - s);
  }
};

/// sigma'(0) is taken to be 0.
struct Relu {
  static double value(double x) { return x > 0.0 ? x : 0.0; }
  static double deriv(double x) { return x > 0.0 ? 1.0 : 0.0; }
  static double second(double) { return 0.0; }
};

struct Identity {
  static double value(double x) { return x; }
  static double deriv(double) { return 1.0; }
  static double second(double) { return 0.0; }
};

}  // namespace act

/// Calls `f(Act{})` with the static activation type matching `kind`, so hot
/// loops can be instantiated per activation instead of switching per entry.
template <typename F>
decltype(auto) visit_activation(ActivationKind kind, F&& f) {
  switch (kind) {
    case ActivationKind::sigmoid: return f(act::Sigmoid{});
    case ActivationKind::tanh: return f(act::Tanh{});
    case ActivationKind::erf: return f(act::ErfIntegral{});
    case ActivationKind::squared_relu: return f(act::SquaredRelu{});
    case ActivationKind::softplus: return f(act::Softplus{});
    case ActivationKind::relu: return f(act::Relu{});
    case ActivationKind::identity: return f(act::Identity{});
  }
  throw DomainError("unknown activation kind");
}

inline void require_finite(double x, const char* where) {
  if (!std::isfinite(x)) throw DomainError(std::string(where) + ": non-finite input");
}

inline double act_value(ActivationKind kind, double x) {
  require_finite(x, "act_value");
  return visit_activation(kind, [x](auto a) { return a.value(x); });
}

inline double act_deriv(ActivationKind kind, double x) {
  require_finite(x, "act_deriv");
  return visit_activation(kind, [x](auto a) { return a.deriv(x); });
}

inline double act_second_deriv(ActivationKind kind, double x) {
  require_finite(x, "act_second_deriv");
  return visit_activation(kind, [x](auto a) { return a.second(x); });
}

/// L bounds the Lipschitz constant of sigma', L0 bounds |sigma'(0)|.
struct LipschitzConstants {
  double L = 0.0;
  double L0 = 0.0;
};

namespace detail {

inline double sup_abs_second_derivative(ActivationKind kind) {
  if (!is_smooth(kind)) return std::numeric_limits<double>::infinity();
  auto f = [kind](double x) { return std::abs(act_second_deriv(kind, x)); };
  constexpr double lo = -20.0;
  constexpr double step = 1e-3;
  double best_x = lo;
  double best = f(lo);
  for (int i = 1; i <= 40000; ++i) {
    const double x = lo + i * step;
    const double v = f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  // golden-section refinement around the grid maximiser
  double a = best_x - step;
  double b = best_x + step;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 60; ++it) {
    const double c = b - ratio * (b - a);
    const double d = a + ratio * (b - a);
    if (f(c) > f(d)) b = d; else a = c;
  }
  return std::max(best, f(0.5 * (a + b)));
}

}  // namespace detail

/// (L, L0) per activation. L is sup |sigma''| found by a dense 1-D search over
/// [-20, 20] (outside that window every supported sigma'' is monotone towards
/// its limit); L0 = |sigma'(0)|. ReLU reports L = +inf.
inline LipschitzConstants lipschitz_constants(ActivationKind kind) {
  static const auto table = [] {
    std::array<LipschitzConstants, kAllActivations.size()> t{};
    for (std::size_t i = 0; i < kAllActivations.size(); ++i) {
      const auto k = kAllActivations[i];
      t[i] = {detail::sup_abs_second_derivative(k), std::abs(act_deriv(k, 0.0))};
    }
    return t;
  }();
  return table[static_cast<std::size_t>(kind)];
}

/// Default panel resolution of the Gaussian expectation rule used by zeta.
inline constexpr int kZetaNodesPerPanel = 16;

namespace detail {

/// Gaussian moments of eta = sigma'(theta g) needed by both nonlinearity measures.
struct EtaMoments {
  double var_eta_resid;   // var[eta] - E[g eta]^2
  double var_geta_resid;  // var[g eta] - E[g^2 eta]^2
  double var_eta;         // var[eta]
  double mean_g_eta;      // E[g eta]
};

inline EtaMoments eta_moments(ActivationKind kind, double theta,
                              const quadrature::GaussianExpectation& rule) {
  return visit_activation(kind, [&](auto a) {
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    const auto& g = rule.nodes();
    const auto& w = rule.weights();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double eta = a.deriv(theta * g[i]);
      m0 += w[i] * eta;
      m1 += w[i] * eta * g[i];
      m2 += w[i] * eta * g[i] * g[i];
    }
    // Residual forms: projecting onto span{1, g} keeps both terms nonnegative
    // and avoids cancellation when zeta is small.
    double r1 = 0.0, r2 = 0.0, v = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double eta = a.deriv(theta * g[i]);
      const double e1 = eta - m0 - m1 * g[i];
      const double e2 = eta * g[i] - m1 - m2 * g[i];
      r1 += w[i] * e1 * e1;
      r2 += w[i] * e2 * e2;
      v += w[i] * (eta - m0) * (eta - m0);
    }
    return EtaMoments{r1, r2, v, m1};
  });
}

inline bool derivative_is_constant(ActivationKind kind) {
  return kind == ActivationKind::identity;
}

}  // namespace detail

/// Nonlinearity measure
///   zeta(theta) = min{ var[s'(theta g)] - E[s'(theta g) g]^2,
///                      var[s'(theta g) g] - E[s'(theta g) g^2]^2 },  g ~ N(0,1).
inline double zeta(ActivationKind kind, double theta,
                   int nodes_per_panel = kZetaNodesPerPanel) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError("zeta: theta must be positive");
  if (detail::derivative_is_constant(kind)) return 0.0;
  const quadrature::GaussianExpectation rule(nodes_per_panel, theta);
  const auto m = detail::eta_moments(kind, theta, rule);
  return std::min(m.var_eta_resid, m.var_geta_resid);
}

/// Interval nonlinearity zeta(alpha, beta) = min{theta1, theta2}, with the two
/// infima over [alpha, beta] evaluated on a uniform grid of `grid_points`
/// (endpoints included; a single point when alpha == beta).
inline double zeta_interval(ActivationKind kind, double alpha, double beta, int grid_points = 65,
                            int nodes_per_panel = kZetaNodesPerPanel) {
  if (!(alpha > 0.0) || !(alpha <= beta) || !std::isfinite(beta)) {
    throw DomainError("zeta_interval: need 0 < alpha <= beta");
  }
  if (grid_points < 1) throw DomainError("zeta_interval: grid_points < 1");
  if (detail::derivative_is_constant(kind)) return 0.0;
  const int m = alpha == beta ? 1 : std::max(grid_points, 2);
  const quadrature::GaussianExpectation rule(nodes_per_panel, beta);
  std::vector<double> var(m), mean_g(m);
  double theta2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    const double x = m == 1 ? alpha : alpha + (beta - alpha) * i / (m - 1);
    const auto mom = detail::eta_moments(kind, x, rule);
    var[i] = mom.var_eta;
    mean_g[i] = mom.mean_g_eta;
    theta2 = std::min(theta2, mom.var_geta_resid);
  }
  double theta1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const double d = var[i] - var[j];
      const double c = 2.0 * mean_g[i] * mean_g[j];
      theta1 = std::min(theta1, 0.5 * (var[i] + var[j] - std::sqrt(d * d + c * c)));
    }
  }
  return std::min(theta1, theta2);
}

}  // namespace compactnet
