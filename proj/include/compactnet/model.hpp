#pragma once

#include <string>

#include "compactnet/activations.hpp"
#include "compactnet/linalg.hpp"

namespace compactnet {

/// Training or test samples: `inputs` holds one sample per row (n x p).
struct Dataset {
  RowMatrix inputs;
  Vector labels;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }

  /// Rows [begin, begin + count).
  Dataset slice(Eigen::Index begin, Eigen::Index count) const {
    return Dataset{inputs.middleRows(begin, count), labels.segment(begin, count)};
  }
};

namespace detail {

inline void check_model_shapes(const Vector& o, const Matrix& w, Eigen::Index p,
                               const char* where) {
  if (w.rows() < 1 || w.cols() < 1) throw ShapeError(std::string(where) + ": empty weight matrix");
  if (o.size() != w.rows()) {
    throw ShapeError(std::string(where) + ": output vector has " + std::to_string(o.size()) +
                     " entries for " + std::to_string(w.rows()) + " hidden nodes");
  }
  if (p != w.cols()) {
    throw ShapeError(std::string(where) + ": input dimension " + std::to_string(p) +
                     " does not match weight matrix with " + std::to_string(w.cols()) +
                     " columns");
  }
}

inline void check_dataset(const Dataset& data, const char* where) {
  if (data.size() < 1) throw DomainError(std::string(where) + ": empty dataset");
  if (data.labels.size() != data.size()) {
    throw ShapeError(std::string(where) + ": " + std::to_string(data.size()) + " inputs but " +
                     std::to_string(data.labels.size()) + " labels");
  }
}

}  // namespace detail

/// y = o^T sigma(W x).
inline double forward(const Vector& o, const Matrix& w, const Vector& x, ActivationKind kind) {
  detail::check_model_shapes(o, w, x.size(), "forward");
  const Vector z = w * x;
  return visit_activation(kind, [&](auto a) {
    double y = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) y += o(i) * a.value(z(i));
    return y;
  });
}

/// Network outputs for every row of `inputs`.
inline Vector predict(const Vector& o, const Matrix& w, const RowMatrix& inputs,
                      ActivationKind kind) {
  detail::check_model_shapes(o, w, inputs.cols(), "predict");
  Matrix z = inputs * w.transpose();
  visit_activation(kind, [&](auto a) {
    using A = decltype(a);
    z = z.unaryExpr([](double v) { return A::value(v); });
  });
  return z * o;
}

/// L(W) = (1/2n) sum_i (y_i - o^T sigma(W x_i))^2.
inline double loss(const Vector& o, const Matrix& w, const Dataset& data, ActivationKind kind) {
  detail::check_dataset(data, "loss");
  const Vector r = predict(o, w, data.inputs, kind) - data.labels;
  return 0.5 * r.squaredNorm() / static_cast<double>(data.size());
}

struct LossGradient {
  double loss;
  Matrix gradient;
};

/// Loss and its gradient (1/n) sum_j r_j (o ⊙ sigma'(W x_j)) x_j^T in one pass,
/// where r_j is the prediction residual.
inline LossGradient loss_and_gradient(const Vector& o, const Matrix& w, const Dataset& data,
                                      ActivationKind kind) {
  detail::check_dataset(data, "gradient");
  detail::check_model_shapes(o, w, data.dim(), "gradient");
  const double n = static_cast<double>(data.size());
  const Matrix z = data.inputs * w.transpose();  // n x h
  Matrix act(z.rows(), z.cols());
  Matrix dact(z.rows(), z.cols());
  visit_activation(kind, [&](auto a) {
    using A = decltype(a);
    act = z.unaryExpr([](double v) { return A::value(v); });
    dact = z.unaryExpr([](double v) { return A::deriv(v); });
  });
  const Vector r = act * o - data.labels;
  // scale column i by o_i and row j by r_j
  const Matrix weighted = r.asDiagonal() * dact * o.asDiagonal();
  return {0.5 * r.squaredNorm() / n, (weighted.transpose() * data.inputs) / n};
}

inline Matrix gradient(const Vector& o, const Matrix& w, const Dataset& data, ActivationKind kind) {
  return loss_and_gradient(o, w, data, kind).gradient;
}

}  // namespace compactnet
