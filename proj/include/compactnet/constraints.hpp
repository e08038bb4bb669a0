#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "compactnet/cnn.hpp"
#include "compactnet/linalg.hpp"

namespace compactnet {

namespace constraint {

struct None {};

/// At most `s` nonzero entries over the whole matrix.
struct Sparsity {
  Eigen::Index s;
};

/// Entrywise l1 ball of radius tau. `nonzeros` only feeds covering_dimension.
struct L1Ball {
  double tau;
  std::optional<Eigen::Index> nonzeros;
};

struct Rank {
  Eigen::Index r;
};

/// Nuclear-norm ball. `rank` only feeds covering_dimension.
struct NuclearBall {
  double tau;
  std::optional<Eigen::Index> rank;
};

/// Linear subspace of h x p matrices spanned by the orthonormal columns of
/// `basis` (hp x d, acting on row-major vec(W)).
struct Subspace {
  Matrix basis;
};

struct Conv {
  ConvGeometry geometry;
};

}  // namespace constraint

/// The constraint set C of a projected gradient run.
struct ConstraintSpec {
  using Variant = std::variant<constraint::None, constraint::Sparsity, constraint::L1Ball,
                               constraint::Rank, constraint::NuclearBall, constraint::Subspace,
                               constraint::Conv>;
  Variant set = constraint::None{};

  static ConstraintSpec none() { return {constraint::None{}}; }
  static ConstraintSpec sparsity(Eigen::Index s) { return {constraint::Sparsity{s}}; }
  static ConstraintSpec l1_ball(double tau, std::optional<Eigen::Index> nonzeros = std::nullopt) {
    return {constraint::L1Ball{tau, nonzeros}};
  }
  static ConstraintSpec rank(Eigen::Index r) { return {constraint::Rank{r}}; }
  static ConstraintSpec nuclear_ball(double tau, std::optional<Eigen::Index> r = std::nullopt) {
    return {constraint::NuclearBall{tau, r}};
  }
  static ConstraintSpec subspace(Matrix basis) { return {constraint::Subspace{std::move(basis)}}; }
  static ConstraintSpec conv(const ConvGeometry& g) { return {constraint::Conv{g}}; }

  /// Short tag used in CSV output: none, l0, l1, rank, nuclear, subspace, conv.
  std::string name() const {
    static constexpr const char* names[] = {"none", "l0", "l1", "rank", "nuclear", "subspace", "conv"};
    return names[set.index()];
  }

  bool is_convex() const {
    return !std::holds_alternative<constraint::Sparsity>(set) &&
           !std::holds_alternative<constraint::Rank>(set);
  }

  /// Throws DomainError / ShapeError / GeometryError if the parameters are
  /// invalid for h x p weight matrices.
  void validate(Eigen::Index h, Eigen::Index p) const;
};

inline void ConstraintSpec::validate(Eigen::Index h, Eigen::Index p) const {
  using namespace constraint;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Sparsity>) {
          if (c.s < 0 || c.s > h * p) throw DomainError("sparsity: need 0 <= s <= hp");
        } else if constexpr (std::is_same_v<T, L1Ball> || std::is_same_v<T, NuclearBall>) {
          if (!(c.tau > 0.0) || !std::isfinite(c.tau)) throw DomainError(name() + ": radius must be positive");
        } else if constexpr (std::is_same_v<T, Rank>) {
          if (c.r < 0 || c.r > std::min(h, p)) throw DomainError("rank: need 0 <= r <= min(h, p)");
        } else if constexpr (std::is_same_v<T, Subspace>) {
          if (c.basis.rows() != h * p) {
            throw ShapeError("subspace: basis has " + std::to_string(c.basis.rows()) +
                             " rows, expected hp = " + std::to_string(h * p));
          }
          const Matrix gram = c.basis.transpose() * c.basis;
          if ((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > 1e-10) {
            throw DomainError("subspace: basis columns are not orthonormal");
          }
        } else if constexpr (std::is_same_v<T, Conv>) {
          c.geometry.validate();
          if (c.geometry.hidden() != h || c.geometry.input != p) {
            throw ShapeError("conv: geometry implies " + std::to_string(c.geometry.hidden()) + "x" +
                             std::to_string(c.geometry.input) + " weights");
          }
        }
      },
      set);
}

/// Euclidean projection of v onto {x : ||x||_1 <= tau} by the sort-based
/// threshold search: find theta with sum_i max(|v_i| - theta, 0) = tau, then
/// soft-threshold.
inline Vector project_l1_ball(const Vector& v, double tau) {
  if (!(tau >= 0.0)) throw DomainError("project_l1_ball: negative radius");
  if (v.cwiseAbs().sum() <= tau) return v;
  std::vector<double> u(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) u[i] = std::abs(v(i));
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double t = (cumsum - tau) / static_cast<double>(j + 1);
    if (u[j] > t) theta = t;
  }
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v(i)) - theta, 0.0);
    out(i) = v(i) < 0.0 ? -mag : mag;
  }
  return out;
}

/// Keep the s largest-magnitude entries (row-major order breaks ties toward
/// the lower flattened index), zero the rest.
inline Matrix project_sparsity(const Matrix& w, Eigen::Index s) {
  const Vector v = vec(w);
  const auto m = static_cast<std::size_t>(v.size());
  if (static_cast<std::size_t>(s) >= m) return w;
  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::nth_element(order.begin(), order.begin() + s, order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     const double ma = std::abs(v(a));
                     const double mb = std::abs(v(b));
                     return ma > mb || (ma == mb && a < b);
                   });
  Vector out = Vector::Zero(v.size());
  for (Eigen::Index k = 0; k < s; ++k) out(order[k]) = v(order[k]);
  return unvec(out, w.rows(), w.cols());
}

namespace detail {

template <typename ShrinkSingular>
Matrix project_spectrum(const Matrix& w, ShrinkSingular&& shrink) {
  Eigen::BDCSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = shrink(svd.singularValues());
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

}  // namespace detail

inline Matrix project_rank(const Matrix& w, Eigen::Index r) {
  return detail::project_spectrum(w, [r](Vector s) {
    for (Eigen::Index i = r; i < s.size(); ++i) s(i) = 0.0;
    return s;
  });
}

inline Matrix project_nuclear_ball(const Matrix& w, double tau) {
  if (singular_values(w).sum() <= tau) return w;
  return detail::project_spectrum(w, [tau](const Vector& s) { return project_l1_ball(s, tau); });
}

inline Matrix project_subspace(const Matrix& w, const Matrix& basis) {
  return unvec(basis * (basis.transpose() * vec(w)), w.rows(), w.cols());
}

/// P_C(W), the Frobenius-nearest point of C. For the nonconvex sets (sparsity,
/// rank) this is one of the nearest points.
inline Matrix project(const ConstraintSpec& spec, const Matrix& w) {
  if (!w.allFinite()) throw DomainError("project: non-finite weight matrix");
  spec.validate(w.rows(), w.cols());
  using namespace constraint;
  return std::visit(
      [&](const auto& c) -> Matrix {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, None>) {
          return w;
        } else if constexpr (std::is_same_v<T, Sparsity>) {
          return project_sparsity(w, c.s);
        } else if constexpr (std::is_same_v<T, L1Ball>) {
          return unvec(project_l1_ball(vec(w), c.tau), w.rows(), w.cols());
        } else if constexpr (std::is_same_v<T, Rank>) {
          return project_rank(w, c.r);
        } else if constexpr (std::is_same_v<T, NuclearBall>) {
          return project_nuclear_ball(w, c.tau);
        } else if constexpr (std::is_same_v<T, Subspace>) {
          return project_subspace(w, c.basis);
        } else {
          return project_conv(w, c.geometry);
        }
      },
      spec.set);
}

/// Covering-dimension estimate (defined only up to a constant factor; logs are natural).
struct CovDimResult {
  double value;
  std::string formula_tag;
};

/// Degrees-of-freedom style complexity of the feasible directions:
/// none -> hp, conv -> kb, l0 / l1 with s nonzeros -> s log(6hp/s),
/// subspace of dimension d -> d, rank r -> r h. An l1 ball without a nonzero
/// count (or nuclear ball without a rank) falls back to the ambient hp.
inline CovDimResult covering_dimension(const ConstraintSpec& spec, Eigen::Index h, Eigen::Index p) {
  using namespace constraint;
  const double hp = static_cast<double>(h * p);
  auto sparse = [hp](Eigen::Index s) {
    if (s <= 0) return 0.0;
    return static_cast<double>(s) * std::log(6.0 * hp / static_cast<double>(s));
  };
  return std::visit(
      [&](const auto& c) -> CovDimResult {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, None>) {
          return {hp, "none:hp"};
        } else if constexpr (std::is_same_v<T, Sparsity>) {
          return {sparse(c.s), "l0:s*log(6hp/s)"};
        } else if constexpr (std::is_same_v<T, L1Ball>) {
          if (!c.nonzeros) return {hp, "l1:ambient-hp"};
          return {sparse(*c.nonzeros), "l1:s*log(6hp/s)"};
        } else if constexpr (std::is_same_v<T, Rank>) {
          return {static_cast<double>(c.r * h), "rank:r*h"};
        } else if constexpr (std::is_same_v<T, NuclearBall>) {
          if (!c.rank) return {hp, "nuclear:ambient-hp"};
          return {static_cast<double>(*c.rank * h), "nuclear:r*h"};
        } else if constexpr (std::is_same_v<T, Subspace>) {
          return {static_cast<double>(c.basis.cols()), "subspace:d"};
        } else {
          return {static_cast<double>(c.geometry.kernels * c.geometry.width), "conv:k*b"};
        }
      },
      spec.set);
}

}  // namespace compactnet
