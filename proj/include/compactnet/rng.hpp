#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "compactnet/linalg.hpp"

namespace compactnet {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; used to derive independent substream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for the substream identified by `keys` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = mix64(master);
  for (auto k : keys) s = mix64(s ^ mix64(k + 0x632BE59BD9B4E019ULL));
  return s;
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  // fill row by row so the draw order matches row-major vec()
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

inline RowMatrix gaussian_inputs(Eigen::Index n, Eigen::Index p, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = normal(rng);
  }
  return x;
}

inline Vector gaussian_vector(Eigen::Index n, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

/// Matrix with orthonormal columns spanning a uniformly random d-dim subspace of R^m.
inline Matrix random_orthonormal_basis(Eigen::Index m, Eigen::Index d, Rng& rng) {
  const Matrix g = gaussian_matrix(m, d, 1.0, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(m, d);
}

}  // namespace compactnet
