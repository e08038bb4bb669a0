#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "compactnet/model.hpp"

namespace compactnet {

/// Geometry of a single-channel 1-D convolution seen as a fully-connected layer.
///
/// `positions` (r) is the number of patch windows; window l covers the 0-based
/// input range [l * stride, l * stride + width). It defaults to the valid
/// (no padding) count floor((p - b) / s) + 1 but can be set explicitly.
struct ConvGeometry {
  Eigen::Index kernels = 1;  // k
  Eigen::Index width = 1;    // b
  Eigen::Index stride = 1;   // s
  Eigen::Index input = 1;    // p
  Eigen::Index positions = 0;

  static ConvGeometry make(Eigen::Index k, Eigen::Index b, Eigen::Index s, Eigen::Index p,
                           std::optional<Eigen::Index> r = std::nullopt) {
    ConvGeometry g{k, b, s, p, 0};
    if (b >= 1 && s >= 1 && b <= p) g.positions = r.value_or((p - b) / s + 1);
    else g.positions = r.value_or(0);
    g.validate();
    return g;
  }

  Eigen::Index hidden() const { return kernels * positions; }

  void validate() const {
    if (kernels < 1 || width < 1 || stride < 1 || input < 1) {
      throw GeometryError("conv geometry: k, b, stride and p must be positive");
    }
    if (width > input) {
      throw GeometryError("conv geometry: kernel width " + std::to_string(width) +
                          " exceeds input length " + std::to_string(input));
    }
    if (positions < 1) throw GeometryError("conv geometry: need at least one patch position");
    if ((positions - 1) * stride + width > input) {
      throw GeometryError("conv geometry: window " + std::to_string(positions - 1) +
                          " runs past the input end");
    }
  }

  bool operator==(const ConvGeometry&) const = default;
};

/// k x b kernels (one per row) plus the geometry they are applied with.
struct KernelBank {
  Matrix kernels;
  ConvGeometry geometry;

  void validate() const {
    geometry.validate();
    if (kernels.rows() != geometry.kernels || kernels.cols() != geometry.width) {
      throw ShapeError("kernel bank: kernel matrix is " + std::to_string(kernels.rows()) + "x" +
                       std::to_string(kernels.cols()) + ", geometry wants " +
                       std::to_string(geometry.kernels) + "x" + std::to_string(geometry.width));
    }
  }
};

/// FC(K): the kr x p matrix whose row i * r + l holds kernel i at offset l * s.
inline Matrix fc_from_kernels(const KernelBank& bank) {
  bank.validate();
  const auto& g = bank.geometry;
  Matrix w = Matrix::Zero(g.hidden(), g.input);
  for (Eigen::Index i = 0; i < g.kernels; ++i) {
    for (Eigen::Index l = 0; l < g.positions; ++l) {
      w.row(i * g.positions + l).segment(l * g.stride, g.width) = bank.kernels.row(i);
    }
  }
  return w;
}

/// Coefficients of the orthogonal projection of W onto the convolutional
/// subspace: entry (i, j) is the mean of the r entries of W that share kernel
/// weight j of kernel i.
inline Matrix kernels_from_fc(const Matrix& w, const ConvGeometry& g) {
  g.validate();
  if (w.rows() != g.hidden() || w.cols() != g.input) {
    throw ShapeError("kernels_from_fc: expected " + std::to_string(g.hidden()) + "x" +
                     std::to_string(g.input) + " weight matrix");
  }
  Matrix k = Matrix::Zero(g.kernels, g.width);
  for (Eigen::Index i = 0; i < g.kernels; ++i) {
    for (Eigen::Index l = 0; l < g.positions; ++l) {
      k.row(i) += w.row(i * g.positions + l).segment(l * g.stride, g.width);
    }
  }
  return k / static_cast<double>(g.positions);
}

/// Orthogonal projection onto {FC(K)}: average shared entries, zero the rest.
inline Matrix project_conv(const Matrix& w, const ConvGeometry& g) {
  return fc_from_kernels(KernelBank{kernels_from_fc(w, g), g});
}

/// Orthonormal basis of the convolutional subspace, one column per kernel
/// entry (i, j) in i-major order, each column vec(M^{i,j}) / sqrt(r).
inline Matrix conv_basis(const ConvGeometry& g) {
  g.validate();
  Matrix basis = Matrix::Zero(g.hidden() * g.input, g.kernels * g.width);
  const double scale = 1.0 / std::sqrt(static_cast<double>(g.positions));
  for (Eigen::Index i = 0; i < g.kernels; ++i) {
    for (Eigen::Index j = 0; j < g.width; ++j) {
      for (Eigen::Index l = 0; l < g.positions; ++l) {
        const Eigen::Index row = i * g.positions + l;
        basis(row * g.input + l * g.stride + j, i * g.width + j) = scale;
      }
    }
  }
  return basis;
}

namespace detail {

inline void check_conv_outputs(const KernelBank& bank, const Matrix& o, Eigen::Index p) {
  bank.validate();
  if (o.rows() != bank.geometry.kernels || o.cols() != bank.geometry.positions) {
    throw ShapeError("cnn: output weights must be k x r = " +
                     std::to_string(bank.geometry.kernels) + "x" +
                     std::to_string(bank.geometry.positions));
  }
  if (p != bank.geometry.input) {
    throw ShapeError("cnn: input length " + std::to_string(p) + " != geometry p " +
                     std::to_string(bank.geometry.input));
  }
}

}  // namespace detail

/// y = sum_i sum_l o(i, l) sigma(k_i^T x^l), x^l the l-th patch of x.
inline double cnn_forward(const KernelBank& bank, const Matrix& o, const Vector& x,
                          ActivationKind kind) {
  detail::check_conv_outputs(bank, o, x.size());
  const auto& g = bank.geometry;
  return visit_activation(kind, [&](auto a) {
    double y = 0.0;
    for (Eigen::Index i = 0; i < g.kernels; ++i) {
      for (Eigen::Index l = 0; l < g.positions; ++l) {
        y += o(i, l) * a.value(bank.kernels.row(i).dot(x.segment(l * g.stride, g.width)));
      }
    }
    return y;
  });
}

/// (1/2n) sum_j (y_CNN(K, x_j) - y_j)^2.
inline double cnn_loss(const KernelBank& bank, const Matrix& o, const Dataset& data,
                       ActivationKind kind) {
  detail::check_dataset(data, "cnn_loss");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < data.size(); ++j) {
    const double r = cnn_forward(bank, o, data.inputs.row(j).transpose(), kind) - data.labels(j);
    acc += r * r;
  }
  return 0.5 * acc / static_cast<double>(data.size());
}

/// Gradient of cnn_loss with respect to the kernels (k x b):
/// (1/n) sum_j sum_l o(i, l) r_j sigma'(k_i^T x_j^l) x_j^l for kernel i.
inline Matrix cnn_gradient(const KernelBank& bank, const Matrix& o, const Dataset& data,
                           ActivationKind kind) {
  detail::check_dataset(data, "cnn_gradient");
  detail::check_conv_outputs(bank, o, data.dim());
  const auto& g = bank.geometry;
  Matrix grad = Matrix::Zero(g.kernels, g.width);
  visit_activation(kind, [&](auto a) {
    Matrix pre(g.kernels, g.positions);
    for (Eigen::Index j = 0; j < data.size(); ++j) {
      const auto x = data.inputs.row(j);
      double y = 0.0;
      for (Eigen::Index i = 0; i < g.kernels; ++i) {
        for (Eigen::Index l = 0; l < g.positions; ++l) {
          pre(i, l) = bank.kernels.row(i).dot(x.segment(l * g.stride, g.width));
          y += o(i, l) * a.value(pre(i, l));
        }
      }
      const double r = y - data.labels(j);
      for (Eigen::Index i = 0; i < g.kernels; ++i) {
        for (Eigen::Index l = 0; l < g.positions; ++l) {
          grad.row(i) += (r * o(i, l) * a.deriv(pre(i, l))) * x.segment(l * g.stride, g.width);
        }
      }
    }
  });
  return grad / static_cast<double>(data.size());
}

/// p x p circulant matrix whose row m is the zero-padded kernel cyclically
/// shifted right by m (stride 1 with wrap-around windows).
inline Matrix circulant_matrix(const Vector& kernel, Eigen::Index p) {
  if (kernel.size() < 1 || kernel.size() > p) throw GeometryError("circulant_matrix: need 1 <= b <= p");
  Matrix c = Matrix::Zero(p, p);
  for (Eigen::Index m = 0; m < p; ++m) {
    for (Eigen::Index t = 0; t < kernel.size(); ++t) c(m, (m + t) % p) = kernel(t);
  }
  return c;
}

struct SingularBounds {
  double lower;
  double upper;
};

/// Extreme DFT magnitudes of the kernel zero-padded to length p. They bracket
/// every singular value of FC(kernel), whatever the stride, because FC is a
/// row subsample of the circulant matrix generated by the padded kernel.
inline SingularBounds circulant_singular_bounds(const Vector& kernel, Eigen::Index p) {
  if (kernel.size() < 1 || kernel.size() > p) {
    throw GeometryError("circulant_singular_bounds: need 1 <= b <= p");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Eigen::Index m = 0; m < p; ++m) {
    std::complex<double> f = 0.0;
    for (Eigen::Index t = 0; t < kernel.size(); ++t) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((m * t) % p) /
                           static_cast<double>(p);
      f += kernel(t) * std::polar(1.0, angle);
    }
    lo = std::min(lo, std::abs(f));
    hi = std::max(hi, std::abs(f));
  }
  return {lo, hi};
}

}  // namespace compactnet
