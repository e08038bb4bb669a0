#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "compactnet/errors.hpp"

namespace compactnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// Sample-major storage for datasets: one row per sample.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Row-major flattening: entry (i, j) of an h x p matrix lands at i * p + j.
/// This matches the Kronecker ordering d ⊗ x used by the Hessian features.
inline Vector vec(const Matrix& w) {
  Vector out(w.size());
  const Eigen::Index p = w.cols();
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < p; ++j) out(i * p + j) = w(i, j);
  }
  return out;
}

inline Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) {
    throw ShapeError("unvec: length " + std::to_string(v.size()) + " != " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = v(i * cols + j);
  }
  return out;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Singular values in descending order.
inline Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  return Eigen::BDCSVD<Matrix>(m).singularValues();
}

inline double spectral_norm(const Matrix& m) {
  const Vector s = singular_values(m);
  return s.size() > 0 ? s(0) : 0.0;
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(where) + ": shape " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

}  // namespace compactnet
