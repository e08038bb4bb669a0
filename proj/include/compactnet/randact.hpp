#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "compactnet/pgd.hpp"
#include "compactnet/rng.hpp"

namespace compactnet {

/// Deep network whose activations multiply their input entrywise by frozen
/// Rademacher masks:
///   y_i = o^T (r_{D,i} ⊙ W_{D-1} (... r_{1,i} ⊙ (W_0 x_i))).
/// layers[l] is h_{l+1} x h_l with h_0 = p; masks[i][l] is r_{l+1,i}.
struct RandActNetwork {
  std::vector<Matrix> layers;
  Vector o;
  std::vector<std::vector<Vector>> masks;

  std::size_t depth() const { return layers.size(); }
  Eigen::Index width(std::size_t l) const {
    return l == 0 ? layers.front().cols() : layers[l - 1].rows();
  }
  std::size_t samples() const { return masks.size(); }

  void validate() const {
    if (layers.empty()) throw ShapeError("randact: network has no layers");
    for (std::size_t l = 1; l < layers.size(); ++l) {
      if (layers[l].cols() != layers[l - 1].rows()) {
        throw ShapeError("randact: layer " + std::to_string(l) + " does not compose with layer " +
                         std::to_string(l - 1));
      }
    }
    if (o.size() != layers.back().rows()) throw ShapeError("randact: output vector size mismatch");
    for (const auto& per_sample : masks) {
      if (per_sample.size() != layers.size()) throw ShapeError("randact: mask count != depth");
      for (std::size_t l = 0; l < layers.size(); ++l) {
        if (per_sample[l].size() != layers[l].rows()) throw ShapeError("randact: mask size mismatch");
        if (((per_sample[l].array() != 1.0) && (per_sample[l].array() != -1.0)).any()) {
          throw DomainError("randact: masks must be +-1");
        }
      }
    }
  }
};

/// Independent Rademacher masks for n samples.
inline std::vector<std::vector<Vector>> sample_masks(const std::vector<Matrix>& layers,
                                                     std::size_t n, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<std::vector<Vector>> masks(n);
  for (auto& per_sample : masks) {
    for (const auto& layer : layers) {
      Vector r(layer.rows());
      for (Eigen::Index k = 0; k < r.size(); ++k) r(k) = coin(rng) ? 1.0 : -1.0;
      per_sample.push_back(std::move(r));
    }
  }
  return masks;
}

/// Network with dims = (h_0 = p, h_1, ..., h_D), layer entries N(0, 1/h_in),
/// standard Gaussian output weights and masks for n samples.
inline RandActNetwork sample_randact_network(const std::vector<Eigen::Index>& dims, std::size_t n,
                                             Rng& rng) {
  if (dims.size() < 2) throw ShapeError("randact: need at least input and one layer width");
  RandActNetwork net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    net.layers.push_back(
        gaussian_matrix(dims[l + 1], dims[l], 1.0 / std::sqrt(static_cast<double>(dims[l])), rng));
  }
  net.o = gaussian_vector(dims.back(), 1.0, rng);
  net.masks = sample_masks(net.layers, n, rng);
  return net;
}

/// Like sample_randact_network, but with o = 1, unit rows in the layers below
/// `layer` and unit columns in the layers above it. Every row condition number
/// then reduces to a spectral norm and the population Hessian of the collapsed
/// problem for `layer` is the identity.
inline RandActNetwork balanced_randact_network(const std::vector<Eigen::Index>& dims,
                                               std::size_t layer, std::size_t n, Rng& rng) {
  RandActNetwork net = sample_randact_network(dims, n, rng);
  if (layer >= net.depth()) throw ShapeError("balanced_randact_network: layer index out of range");
  net.o.setOnes();
  for (std::size_t l = 0; l < layer; ++l) net.layers[l].rowwise().normalize();
  for (std::size_t l = layer + 1; l < net.depth(); ++l) net.layers[l].colwise().normalize();
  return net;
}

inline double randact_forward(const RandActNetwork& net, std::size_t sample, const Vector& x) {
  if (sample >= net.samples()) throw ShapeError("randact_forward: no masks for sample");
  if (x.size() != net.width(0)) throw ShapeError("randact_forward: input size mismatch");
  Vector v = x;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (net.layers[l].cols() != v.size()) throw ShapeError("randact_forward: broken layer chain");
    v = net.masks[sample][l].cwiseProduct(net.layers[l] * v);
  }
  if (net.o.size() != v.size()) throw ShapeError("randact_forward: output size mismatch");
  return net.o.dot(v);
}

/// Linear regression problem for one layer with every other layer fixed:
/// y_i = o_hat_i^T W_layer x_hat_i.
struct LayerProblem {
  std::size_t layer = 0;
  RowMatrix x_hat;  // n x h_layer
  RowMatrix o_hat;  // n x h_{layer+1}
  Vector labels;

  Eigen::Index size() const { return x_hat.rows(); }
};

/// Collapses the network around `layer` for samples 0..n-1 (rows of `inputs`).
/// Labels are the full-network outputs.
inline LayerProblem collapse_layer(const RandActNetwork& net, std::size_t layer,
                                   const RowMatrix& inputs) {
  net.validate();
  if (layer >= net.depth()) throw ShapeError("collapse_layer: layer index out of range");
  if (static_cast<std::size_t>(inputs.rows()) > net.samples()) {
    throw ShapeError("collapse_layer: more inputs than sampled masks");
  }
  if (inputs.cols() != net.width(0)) throw ShapeError("collapse_layer: input size mismatch");
  const Eigen::Index n = inputs.rows();
  LayerProblem prob;
  prob.layer = layer;
  prob.x_hat.resize(n, net.width(layer));
  prob.o_hat.resize(n, net.width(layer + 1));
  prob.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = net.masks[static_cast<std::size_t>(i)];
    Vector below = inputs.row(i).transpose();
    for (std::size_t l = 0; l < layer; ++l) below = r[l].cwiseProduct(net.layers[l] * below);
    Vector above = r[net.depth() - 1].cwiseProduct(net.o);
    for (std::size_t l = net.depth() - 1; l > layer; --l) {
      above = r[l - 1].cwiseProduct(net.layers[l].transpose() * above);
    }
    prob.x_hat.row(i) = below.transpose();
    prob.o_hat.row(i) = above.transpose();
    prob.labels(i) = randact_forward(net, static_cast<std::size_t>(i), inputs.row(i).transpose());
  }
  return prob;
}

inline LossGradient randact_loss_and_gradient(const LayerProblem& prob, const Matrix& u) {
  if (u.rows() != prob.o_hat.cols() || u.cols() != prob.x_hat.cols()) {
    throw ShapeError("randact_gradient: candidate layer has wrong shape");
  }
  if (prob.size() < 1) throw DomainError("randact_gradient: empty problem");
  const double n = static_cast<double>(prob.size());
  // prediction_i = o_hat_i^T U x_hat_i
  const Vector pred = (prob.o_hat * u).cwiseProduct(prob.x_hat).rowwise().sum();
  const Vector r = pred - prob.labels;
  const Matrix grad = prob.o_hat.transpose() * r.asDiagonal() * prob.x_hat / n;
  return {0.5 * r.squaredNorm() / n, grad};
}

/// (1/n) sum_i (o_hat_i^T U x_hat_i - y_i) o_hat_i x_hat_i^T.
inline Matrix randact_gradient(const LayerProblem& prob, const Matrix& u) {
  return randact_loss_and_gradient(prob, u).gradient;
}

inline double randact_loss(const LayerProblem& prob, const Matrix& u) {
  return randact_loss_and_gradient(prob, u).loss;
}

/// The layer-wise learning rate 1 / (6 q gamma) with
/// q = max{1, h_l h_{l+1} log(h_l h_{l+1}) / n} and gamma the product of
/// squared spectral norms of every other layer and diag(o).
inline double randact_default_mu(const RandActNetwork& net, std::size_t layer, Eigen::Index n) {
  const double m = static_cast<double>(net.width(layer) * net.width(layer + 1));
  const double q = std::max(1.0, m * std::log(m) / static_cast<double>(n));
  double gamma = std::pow(net.o.cwiseAbs().maxCoeff(), 2);
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (l != layer) gamma *= std::pow(spectral_norm(net.layers[l]), 2);
  }
  return 1.0 / (6.0 * q * gamma);
}

/// 1 / lambda_max of the empirical Hessian (1/n) sum_i a_i a_i^T with
/// a_i = vec(o_hat_i x_hat_i^T), i.e. the inverse smoothness constant of the
/// collapsed least-squares loss.
inline double randact_curvature_mu(const LayerProblem& prob) {
  if (prob.size() < 1) throw DomainError("randact_curvature_mu: empty problem");
  const Eigen::Index a = prob.o_hat.cols(), b = prob.x_hat.cols();
  Matrix features(prob.size(), a * b);
  for (Eigen::Index i = 0; i < prob.size(); ++i) {
    for (Eigen::Index r = 0; r < a; ++r) {
      features.row(i).segment(r * b, b) = prob.o_hat(i, r) * prob.x_hat.row(i);
    }
  }
  const Matrix h = features.transpose() * features / static_cast<double>(prob.size());
  const double top = Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly).eigenvalues()(a * b - 1);
  if (!(top > 0.0)) throw DegenerateError("randact_curvature_mu: collapsed problem has zero curvature");
  return 1.0 / top;
}

inline PgdTrace randact_pgd(const LayerProblem& prob, const ConstraintSpec& spec, double mu,
                            long iters, const Matrix& w0,
                            const std::optional<Matrix>& truth = std::nullopt) {
  PgdConfig cfg;
  cfg.mu = mu;
  cfg.max_iters = iters;
  cfg.constraint = spec;
  return run_projected_descent(
      cfg, w0, [&](const Matrix& u, Eigen::Index) { return randact_loss_and_gradient(prob, u); },
      truth);
}

}  // namespace compactnet
