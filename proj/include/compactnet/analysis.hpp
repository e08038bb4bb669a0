#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "compactnet/activations.hpp"
#include "compactnet/model.hpp"
#include "compactnet/rng.hpp"

namespace compactnet {

/// Largest hp for which hp x hp Hessian-type matrices are materialised.
inline constexpr Eigen::Index kMaxHessianDim = 4096;

namespace detail {

inline void check_hessian_capacity(Eigen::Index hp) {
  if (hp > kMaxHessianDim) {
    throw CapacityError("hessian: hp = " + std::to_string(hp) + " exceeds the limit of " +
                        std::to_string(kMaxHessianDim));
  }
}

/// Kronecker product d ⊗ x, row-major to match vec(W).
inline Vector kron(const Vector& d, const Vector& x) {
  Vector out(d.size() * x.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) out.segment(i * x.size(), x.size()) = d(i) * x;
  return out;
}

}  // namespace detail

/// rho(W; x) = (o ⊙ sigma'(W x)) ⊗ x.
inline Vector rho_features(const Vector& o, const Matrix& w, const Vector& x, ActivationKind kind) {
  detail::check_model_shapes(o, w, x.size(), "rho_features");
  const Vector z = w * x;
  Vector d(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) d(i) = o(i) * act_deriv(kind, z(i));
  return detail::kron(d, x);
}

/// Below this |W_i x - U_i x| the secant slope is replaced by the derivative.
inline constexpr double kSecantTolerance = 1e-12;

/// rho(W, U; x) = d(W, U; x) ⊗ x with the secant slopes
/// d_i = o_i (sigma(W_i x) - sigma(U_i x)) / (W_i x - U_i x).
inline Vector secant_features(const Vector& o, const Matrix& w, const Matrix& u, const Vector& x,
                              ActivationKind kind) {
  detail::check_model_shapes(o, w, x.size(), "secant_features");
  require_same_shape(w, u, "secant_features");
  const Vector zw = w * x;
  const Vector zu = u * x;
  Vector d(zw.size());
  for (Eigen::Index i = 0; i < zw.size(); ++i) {
    const double den = zw(i) - zu(i);
    d(i) = std::abs(den) < kSecantTolerance
               ? o(i) * act_deriv(kind, zw(i))
               : o(i) * (act_value(kind, zw(i)) - act_value(kind, zu(i))) / den;
  }
  return detail::kron(d, x);
}

/// H_{W*} = (1/n) sum_i rho(x_i) rho(x_i)^T.
inline Matrix hessian_ground_truth(const Vector& o, const Matrix& w_star, const Dataset& data,
                                   ActivationKind kind) {
  detail::check_dataset(data, "hessian_ground_truth");
  detail::check_model_shapes(o, w_star, data.dim(), "hessian_ground_truth");
  const Eigen::Index hp = w_star.size();
  detail::check_hessian_capacity(hp);
  Matrix features(data.size(), hp);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    features.row(i) = rho_features(o, w_star, data.inputs.row(i).transpose(), kind).transpose();
  }
  Matrix h = Matrix::Zero(hp, hp);
  h.selfadjointView<Eigen::Lower>().rankUpdate(features.transpose(), 1.0 / static_cast<double>(data.size()));
  return h.selfadjointView<Eigen::Lower>();
}

/// Split of the secant "Hessian" H = (1/n) sum rho(U) rho(U, W*)^T into
/// H1 (ground-truth Hessian) plus two perturbations that vanish at U = W*:
///   H1 = mean rho* rho*^T,  H2 = mean rho* (rho_sec - rho*)^T,
///   H3 = mean (rho_U - rho*) rho_sec^T.
/// For labels generated by W*, grad L(U) = (H1 + H2 + H3) vec(U - W*).
struct HessianDecomposition {
  Matrix h1, h2, h3;
  Matrix u, w_star;

  Matrix total() const { return h1 + h2 + h3; }
};

inline HessianDecomposition hessian_decomposition(const Vector& o, const Matrix& w_star,
                                                  const Matrix& u, const Dataset& data,
                                                  ActivationKind kind) {
  detail::check_dataset(data, "hessian_decomposition");
  detail::check_model_shapes(o, w_star, data.dim(), "hessian_decomposition");
  require_same_shape(w_star, u, "hessian_decomposition");
  const Eigen::Index hp = w_star.size();
  detail::check_hessian_capacity(hp);
  const Eigen::Index n = data.size();
  Matrix star(hp, n), at_u(hp, n), sec(hp, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector x = data.inputs.row(i).transpose();
    star.col(i) = rho_features(o, w_star, x, kind);
    at_u.col(i) = rho_features(o, u, x, kind);
    sec.col(i) = secant_features(o, u, w_star, x, kind);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  HessianDecomposition out;
  out.h1 = star * star.transpose() * inv_n;
  out.h2 = star * (sec - star).transpose() * inv_n;
  out.h3 = (at_u - star) * sec.transpose() * inv_n;
  out.u = u;
  out.w_star = w_star;
  return out;
}

namespace directions {
struct Full {};
/// Orthonormal columns spanning the admissible directions.
struct Subspace {
  Matrix basis;
};
/// Unit vectors supported on at most `s` coordinates.
struct SparseCone {
  Eigen::Index s;
  /// Enumerate every support when C(m, s) is at most this, otherwise sample.
  double exhaustive_limit = 1e5;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
};
}  // namespace directions

using Directions = std::variant<directions::Full, directions::Subspace, directions::SparseCone>;

struct RestrictedEigenvalue {
  double value;
  /// Supports examined for the sparse cone (0 for full/subspace).
  std::size_t supports_checked = 0;
  bool exhaustive = true;
};

namespace detail {

inline double min_eig(const Matrix& h) {
  if (h.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double binomial(Eigen::Index m, Eigen::Index s) {
  double c = 1.0;
  for (Eigen::Index i = 0; i < s; ++i) c = c * static_cast<double>(m - i) / static_cast<double>(i + 1);
  return c;
}

inline Matrix principal_submatrix(const Matrix& h, const std::vector<Eigen::Index>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Matrix sub(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = h(idx[a], idx[b]);
  }
  return sub;
}

}  // namespace detail

/// inf over unit v in the direction set of v^T H v.
inline RestrictedEigenvalue restricted_eigenvalue(const Matrix& h, const Directions& dirs) {
  if (h.rows() != h.cols()) throw ShapeError("restricted_eigenvalue: matrix is not square");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw DomainError("restricted_eigenvalue: matrix is not symmetric");
  }
  const Matrix sym = 0.5 * (h + h.transpose());
  return std::visit(
      [&](const auto& d) -> RestrictedEigenvalue {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, directions::Full>) {
          return {detail::min_eig(sym)};
        } else if constexpr (std::is_same_v<T, directions::Subspace>) {
          if (d.basis.rows() != h.rows()) throw ShapeError("restricted_eigenvalue: basis size mismatch");
          return {detail::min_eig(d.basis.transpose() * sym * d.basis)};
        } else {
          const Eigen::Index m = h.rows();
          if (d.s < 1 || d.s > m) throw DomainError("restricted_eigenvalue: need 1 <= s <= m");
          RestrictedEigenvalue out{std::numeric_limits<double>::infinity(), 0, true};
          if (detail::binomial(m, d.s) <= d.exhaustive_limit) {
            std::vector<Eigen::Index> idx(static_cast<std::size_t>(d.s));
            std::iota(idx.begin(), idx.end(), Eigen::Index{0});
            while (true) {
              out.value = std::min(out.value, detail::min_eig(detail::principal_submatrix(sym, idx)));
              ++out.supports_checked;
              // next combination in lexicographic order
              Eigen::Index k = d.s - 1;
              while (k >= 0 && idx[k] == m - d.s + k) --k;
              if (k < 0) break;
              ++idx[k];
              for (Eigen::Index j = k + 1; j < d.s; ++j) idx[j] = idx[j - 1] + 1;
            }
          } else {
            out.exhaustive = false;
            Rng rng(d.seed);
            std::vector<Eigen::Index> all(static_cast<std::size_t>(m));
            std::iota(all.begin(), all.end(), Eigen::Index{0});
            for (std::size_t t = 0; t < d.samples; ++t) {
              std::vector<Eigen::Index> idx;
              std::sample(all.begin(), all.end(), std::back_inserter(idx), d.s, rng);
              out.value = std::min(out.value, detail::min_eig(detail::principal_submatrix(sym, idx)));
              ++out.supports_checked;
            }
          }
          return out;
        }
      },
      dirs);
}

/// Problem-conditioning constants of the local convergence theory. The
/// unspecified absolute constant C inside upsilon is an input (default 1), so
/// mu_theory and rho_theory are only meaningful up to constants.
struct CriticalQuantities {
  double theta = 0, omega = 0, q = 0, upsilon = 0, mu_theory = 0, rho_theory = 0;
  double s_min = 0, s_max = 0, kappa_o = 0, kappa_w = 0, zeta_s_min = 0;
  double L = 0, L0 = 0, constant_c = 1;
  /// prod_i s_i(W*) / s_min(W*); diagnostic only.
  double singular_ratio_product = 0;
  Eigen::Index h = 0, p = 0, n = 0;
};

inline CriticalQuantities critical_quantities(const Vector& o, const Matrix& w_star,
                                              ActivationKind kind, Eigen::Index n, Eigen::Index p,
                                              double constant_c = 1.0) {
  if (o.size() != w_star.rows()) throw ShapeError("critical_quantities: o / W* size mismatch");
  if (p != w_star.cols()) throw ShapeError("critical_quantities: p does not match W*");
  if (n < 1) throw DomainError("critical_quantities: n must be positive");
  if ((o.array() == 0.0).any()) throw DomainError("critical_quantities: o has a zero entry");
  CriticalQuantities cq;
  cq.h = w_star.rows();
  cq.p = p;
  cq.n = n;
  cq.constant_c = constant_c;
  const Vector s = singular_values(w_star);
  cq.s_max = s(0);
  cq.s_min = s(s.size() - 1);
  if (s.size() < cq.h || !(cq.s_min > 1e-12 * cq.s_max)) {
    throw ConditionError("critical_quantities: W* is not full row rank");
  }
  cq.kappa_o = o.cwiseAbs().maxCoeff() / o.cwiseAbs().minCoeff();
  cq.kappa_w = cq.s_max / cq.s_min;
  cq.singular_ratio_product = (s / cq.s_min).prod();
  cq.zeta_s_min = zeta(kind, cq.s_min);
  if (!(cq.zeta_s_min > 0.0)) {
    throw DegenerateError("critical_quantities: zeta(s_min) = 0 for activation " +
                          std::string(to_string(kind)));
  }
  const auto lc = lipschitz_constants(kind);
  cq.L = lc.L;
  cq.L0 = lc.L0;
  const double h = static_cast<double>(cq.h);
  const double l2s2 = cq.L * cq.L * cq.s_max * cq.s_max;
  cq.theta = l2s2 * cq.kappa_o * cq.kappa_o * std::pow(cq.kappa_w, h + 2.0) / cq.zeta_s_min;
  cq.omega = h * (std::log(static_cast<double>(p)) + cq.L0 * cq.L0 / l2s2);
  const double pd = static_cast<double>(p);
  cq.q = std::max(1.0, 8.0 * pd * std::log(pd) / static_cast<double>(n));
  const double ct = constant_c * cq.theta;
  cq.upsilon = ct * std::pow(std::log(ct), 2);
  const double o_max = o.cwiseAbs().maxCoeff();
  cq.mu_theory = 1.0 / (6.0 * cq.q * o_max * o_max * cq.L * cq.L * cq.omega);
  cq.rho_theory = 1.0 - 1.0 / (12.0 * cq.q * std::pow(cq.upsilon, 4) * cq.omega);
  return cq;
}

/// L R_o R_W sqrt(((h + s) log(n + p) + s log(1 + B / R_W)) / n), constant
/// inside the O(.) set to 1. Only scaling relations are meaningful.
inline double rademacher_bound(double L, double r_o, double r_w, double h, double s, double b,
                               double n, double p) {
  const double cover = s > 0.0 ? s * std::log1p(b / r_w) : 0.0;
  return L * r_o * r_w * std::sqrt(((h + s) * std::log(n + p) + cover) / n);
}

/// ||V|| / min_i ||v_i||.
inline double row_condition_number(const Matrix& v) {
  const double min_row = v.rowwise().norm().minCoeff();
  if (!(min_row > 0.0)) throw DegenerateError("row_condition_number: matrix has a zero row");
  return spectral_norm(v) / min_row;
}

/// kappa(o) * prod_{j < l} kappa_row(W_j) * prod_{j > l} kappa_row(W_j^T).
inline double network_condition_number(const std::vector<Matrix>& layers, const Vector& o,
                                       std::size_t layer) {
  if (layer >= layers.size()) throw ShapeError("network_condition_number: layer out of range");
  const double o_min = o.cwiseAbs().minCoeff();
  if (!(o_min > 0.0)) throw DegenerateError("network_condition_number: o has a zero entry");
  double kappa = o.cwiseAbs().maxCoeff() / o_min;
  for (std::size_t j = 0; j < layer; ++j) kappa *= row_condition_number(layers[j]);
  for (std::size_t j = layer + 1; j < layers.size(); ++j) {
    kappa *= row_condition_number(layers[j].transpose());
  }
  return kappa;
}

struct CovarianceEigenCheck {
  double min_eig;
  /// Monte-Carlo standard error of the quadratic form along the minimising
  /// eigenvector.
  double std_error;
};

/// Smallest eigenvalue of the Monte-Carlo covariance (mean removed) of the
/// features (o ⊙ sigma'(W* x)) ⊗ x with x ~ N(0, I_p).
inline CovarianceEigenCheck covariance_min_eig_check(const Matrix& w_star, const Vector& o,
                                                     ActivationKind kind, Eigen::Index n_mc,
                                                     Rng& rng) {
  detail::check_model_shapes(o, w_star, w_star.cols(), "covariance_min_eig_check");
  const Eigen::Index hp = w_star.size();
  detail::check_hessian_capacity(hp);
  if (n_mc < 2) throw DomainError("covariance_min_eig_check: need at least two samples");
  const RowMatrix x = gaussian_inputs(n_mc, w_star.cols(), rng);
  Matrix features(n_mc, hp);
  for (Eigen::Index i = 0; i < n_mc; ++i) {
    features.row(i) = rho_features(o, w_star, x.row(i).transpose(), kind).transpose();
  }
  const Vector mean = features.colwise().mean();
  features.rowwise() -= mean.transpose();
  const Matrix cov = features.transpose() * features / static_cast<double>(n_mc - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const Vector v = es.eigenvectors().col(0);
  const Vector proj_sq = (features * v).array().square();
  const double m = proj_sq.mean();
  const double var = (proj_sq.array() - m).square().sum() / static_cast<double>(n_mc - 1);
  return {es.eigenvalues()(0), std::sqrt(var / static_cast<double>(n_mc))};
}

}  // namespace compactnet
