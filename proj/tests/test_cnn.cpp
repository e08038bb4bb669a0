#include <gtest/gtest.h>

#include <random>

#include "compactnet/cnn.hpp"
#include "compactnet/constraints.hpp"
#include "compactnet/pgd.hpp"
#include "compactnet/rng.hpp"
#include "oracles.hpp"

using namespace compactnet;

namespace {

ConvGeometry random_geometry(Rng& rng) {
  std::uniform_int_distribution<int> kd(1, 3), bd(1, 5), sd(1, 4), extra(0, 8);
  const int b = bd(rng);
  const int p = b + extra(rng);
  return ConvGeometry::make(kd(rng), b, sd(rng), p);
}

Dataset random_dataset(Eigen::Index n, Eigen::Index p, Rng& rng) {
  Dataset d;
  d.inputs = gaussian_inputs(n, p, rng);
  d.labels = gaussian_vector(n, 1.0, rng);
  return d;
}

Vector flatten_outputs(const Matrix& o) {
  // o is k x r and hidden row i * r + l pairs with o(i, l)
  Vector v(o.size());
  for (Eigen::Index i = 0; i < o.rows(); ++i) {
    for (Eigen::Index l = 0; l < o.cols(); ++l) v(i * o.cols() + l) = o(i, l);
  }
  return v;
}

const ActivationKind kSmooth[] = {ActivationKind::sigmoid, ActivationKind::tanh,
                                  ActivationKind::erf, ActivationKind::squared_relu,
                                  ActivationKind::softplus};

}  // namespace

TEST(ConvGeometry, ReferenceConfiguration) {
  const auto g = ConvGeometry::make(4, 15, 6, 81);
  EXPECT_EQ(g.positions, 12);
  EXPECT_EQ(g.hidden(), 48);
}

TEST(ConvGeometry, RejectsInvalidWindows) {
  EXPECT_THROW(ConvGeometry::make(1, 5, 1, 4), GeometryError);
  EXPECT_THROW(ConvGeometry::make(1, 2, 0, 4), GeometryError);
  EXPECT_THROW(ConvGeometry::make(1, 2, 2, 4, 3), GeometryError);
  EXPECT_NO_THROW(ConvGeometry::make(1, 2, 2, 4, 2));
}

TEST(FcFromKernels, TwoWindowExample) {
  Matrix k(1, 2);
  k << 5.0, 7.0;
  const Matrix w = fc_from_kernels({k, ConvGeometry::make(1, 2, 2, 4)});
  Matrix expect(2, 4);
  expect << 5, 7, 0, 0, 0, 0, 5, 7;
  EXPECT_TRUE(w == expect);
}

TEST(FcFromKernels, ZeroKernelsAndNormIdentity) {
  Rng rng(1);
  for (int t = 0; t < 30; ++t) {
    const auto g = random_geometry(rng);
    EXPECT_EQ(fc_from_kernels({Matrix::Zero(g.kernels, g.width), g}).norm(), 0.0);
    const Matrix k = gaussian_matrix(g.kernels, g.width, 1.0, rng);
    const Matrix w = fc_from_kernels({k, g});
    EXPECT_TRUE(w == oracle::fc_loop(k, g.stride, g.input, g.positions));
    EXPECT_NEAR(w.squaredNorm(), g.positions * k.squaredNorm(), 1e-12 * w.squaredNorm());
    for (Eigen::Index i = 0; i < w.rows(); ++i) EXPECT_LE((w.row(i).array() != 0.0).count(), g.width);
  }
}

TEST(CnnForward, PatchSum) {
  Matrix k(1, 2);
  k << 1.0, 1.0;
  const KernelBank bank{k, ConvGeometry::make(1, 2, 2, 4)};
  EXPECT_DOUBLE_EQ(cnn_forward(bank, Matrix::Ones(1, 2), Vector::Ones(4), ActivationKind::identity), 4.0);
  const KernelBank zero{Matrix::Zero(1, 2), bank.geometry};
  EXPECT_EQ(cnn_forward(zero, Matrix::Ones(1, 2), Vector::Ones(4), ActivationKind::squared_relu), 0.0);
}

TEST(CnnForward, EqualsFullyConnectedForward) {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto g = random_geometry(rng);
    const auto kind = kAllActivations[t % kAllActivations.size()];
    const KernelBank bank{gaussian_matrix(g.kernels, g.width, 1.0, rng), g};
    const Matrix o = gaussian_matrix(g.kernels, g.positions, 1.0, rng);
    const Vector x = gaussian_vector(g.input, 1.0, rng);
    const double fc = forward(flatten_outputs(o), fc_from_kernels(bank), x, kind);
    EXPECT_LE(std::abs(cnn_forward(bank, o, x, kind) - fc), 1e-10 * (1.0 + std::abs(fc)));
  }
}

TEST(CnnForward, ShapeMismatchThrows) {
  const KernelBank bank{Matrix::Ones(1, 2), ConvGeometry::make(1, 2, 2, 4)};
  EXPECT_THROW(cnn_forward(bank, Matrix::Ones(2, 2), Vector::Ones(4), ActivationKind::tanh), ShapeError);
  EXPECT_THROW(cnn_forward(bank, Matrix::Ones(1, 2), Vector::Ones(5), ActivationKind::tanh), ShapeError);
  const KernelBank bad{Matrix::Ones(1, 3), ConvGeometry::make(1, 2, 2, 4)};
  EXPECT_THROW(cnn_forward(bad, Matrix::Ones(1, 2), Vector::Ones(4), ActivationKind::tanh), ShapeError);
}

TEST(CnnGradient, ZeroAtGroundTruth) {
  Rng rng(3);
  const auto g = ConvGeometry::make(2, 3, 2, 9);
  const KernelBank bank{gaussian_matrix(2, 3, 1.0, rng), g};
  const Matrix o = Matrix::Ones(2, g.positions);
  Dataset d;
  d.inputs = gaussian_inputs(10, 9, rng);
  d.labels.resize(10);
  for (int j = 0; j < 10; ++j) d.labels(j) = cnn_forward(bank, o, d.inputs.row(j).transpose(), ActivationKind::tanh);
  EXPECT_EQ(cnn_gradient(bank, o, d, ActivationKind::tanh).norm(), 0.0);
}

TEST(CnnGradient, MatchesFiniteDifferences) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto g = random_geometry(rng);
    const auto kind = kSmooth[t % 5];
    const Matrix k = gaussian_matrix(g.kernels, g.width, 0.5, rng);
    const Matrix o = gaussian_matrix(g.kernels, g.positions, 1.0, rng);
    const Dataset d = random_dataset(15, g.input, rng);
    const Matrix grad = cnn_gradient({k, g}, o, d, kind);
    const Matrix fd = oracle::fd_gradient([&](const Matrix& u) { return cnn_loss({u, g}, o, d, kind); }, k);
    EXPECT_LE((grad - fd).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(CnnGradient, ProjectedFullyConnectedGradientEquivalence) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto g = random_geometry(rng);
    const auto kind = kAllActivations[t % kAllActivations.size()];
    const KernelBank bank{gaussian_matrix(g.kernels, g.width, 1.0, rng), g};
    const Matrix o = gaussian_matrix(g.kernels, g.positions, 1.0, rng);
    const Dataset d = random_dataset(12, g.input, rng);
    const Matrix fc_grad = gradient(flatten_outputs(o), fc_from_kernels(bank), d, kind);
    const Matrix lhs = project_conv(fc_grad, g);
    const Matrix rhs = fc_from_kernels({cnn_gradient(bank, o, d, kind), g}) / static_cast<double>(g.positions);
    EXPECT_LE((lhs - rhs).norm(), 1e-10 * (1.0 + fc_grad.norm()));
  }
}

TEST(CnnGradient, PgdStepEquivalence) {
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    const auto g = random_geometry(rng);
    const KernelBank bank{gaussian_matrix(g.kernels, g.width, 1.0, rng), g};
    const Matrix o = gaussian_matrix(g.kernels, g.positions, 1.0, rng);
    const Dataset d = random_dataset(10, g.input, rng);
    const double mu = 0.3;
    const Matrix w = fc_from_kernels(bank);
    const Matrix fc_step = pgd_step(w, gradient(flatten_outputs(o), w, d, ActivationKind::tanh), mu,
                                    ConstraintSpec::conv(g));
    const Matrix k_step = bank.kernels - (mu / g.positions) * cnn_gradient(bank, o, d, ActivationKind::tanh);
    EXPECT_LE((fc_step - fc_from_kernels({k_step, g})).norm(), 1e-10);
  }
}

TEST(ProjectConv, AveragesSharedEntries) {
  Matrix w(2, 4);
  w << 1, 2, 0, 0, 0, 0, 3, 4;
  Matrix expect(2, 4);
  expect << 2, 3, 0, 0, 0, 0, 2, 3;
  const auto g = ConvGeometry::make(1, 2, 2, 4);
  EXPECT_TRUE(project_conv(w, g) == expect);
  // least-squares coefficients on the orthonormal basis give the same point
  const Matrix basis = conv_basis(g);
  EXPECT_LE((unvec(basis * (basis.transpose() * vec(w)), 2, 4) - expect).norm(), 1e-12);
}

TEST(ProjectConv, FixedPointIdempotentSelfAdjoint) {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const auto g = random_geometry(rng);
    const Matrix fc = fc_from_kernels({gaussian_matrix(g.kernels, g.width, 1.0, rng), g});
    EXPECT_LE((project_conv(fc, g) - fc).norm(), 1e-12 * (1 + fc.norm()));
    const Matrix a = gaussian_matrix(g.hidden(), g.input, 1.0, rng);
    const Matrix b = gaussian_matrix(g.hidden(), g.input, 1.0, rng);
    const Matrix pa = project_conv(a, g);
    EXPECT_LE((project_conv(pa, g) - pa).norm(), 1e-12);
    EXPECT_NEAR(pa.cwiseProduct(b).sum(), a.cwiseProduct(project_conv(b, g)).sum(), 1e-10);
  }
}

TEST(ProjectConv, ShapeMismatchThrows) {
  EXPECT_THROW(project_conv(Matrix::Ones(3, 4), ConvGeometry::make(1, 2, 2, 4)), ShapeError);
}

TEST(ConvBasis, OrthonormalWithKbElements) {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto g = random_geometry(rng);
    const Matrix basis = conv_basis(g);
    ASSERT_EQ(basis.cols(), g.kernels * g.width);
    EXPECT_LE((basis.transpose() * basis - Matrix::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(CirculantBounds, DeltaKernel) {
  for (Eigen::Index p : {1, 4, 9}) {
    const auto b = circulant_singular_bounds(Vector::Unit(1, 0), p);
    EXPECT_NEAR(b.lower, 1.0, 1e-12);
    EXPECT_NEAR(b.upper, 1.0, 1e-12);
  }
}

TEST(CirculantBounds, TwoTapKernelMatchesCirculantSvd) {
  const auto b = circulant_singular_bounds(Vector::Ones(2), 2);
  EXPECT_NEAR(b.lower, 0.0, 1e-12);
  EXPECT_NEAR(b.upper, 2.0, 1e-12);
  const Vector s = oracle::singular_values(circulant_matrix(Vector::Ones(2), 2));
  EXPECT_NEAR(s(0), 2.0, 1e-12);
  EXPECT_NEAR(s(1), 0.0, 1e-12);
}

TEST(CirculantBounds, BracketSingularValuesOfStridedEmbedding) {
  Rng rng(9);
  std::uniform_int_distribution<int> bd(1, 6), extra(0, 10), sd(1, 5);
  for (int t = 0; t < 50; ++t) {
    const int b = bd(rng), p = b + extra(rng);
    const auto g = ConvGeometry::make(1, b, sd(rng), p);
    const Vector kern = gaussian_vector(b, 1.0, rng);
    const auto bounds = circulant_singular_bounds(kern, p);
    const Vector s = oracle::singular_values(fc_from_kernels({kern.transpose(), g}));
    EXPECT_GE(s.minCoeff(), bounds.lower - 1e-9);
    EXPECT_LE(s.maxCoeff(), bounds.upper + 1e-9);
    const Vector sc = oracle::singular_values(circulant_matrix(kern, p));
    EXPECT_NEAR(sc.minCoeff(), bounds.lower, 1e-9);
    EXPECT_NEAR(sc.maxCoeff(), bounds.upper, 1e-9);
  }
}

TEST(CirculantBounds, NonOverlappingEmbeddingKeepsKernelSpectrum) {
  Rng rng(10);
  for (int t = 0; t < 30; ++t) {
    const Eigen::Index k = 1 + t % 3, b = 2 + t % 4, s = b + t % 2;
    const Eigen::Index p = (k + 1) * s + b;
    const auto g = ConvGeometry::make(k, b, s, p);
    const Matrix kern = gaussian_matrix(k, b, 1.0, rng);
    const Vector sk = oracle::singular_values(kern);
    const Vector sf = oracle::singular_values(fc_from_kernels({kern, g}));
    // up to row order FC(K) is block diagonal with r copies of K
    EXPECT_NEAR(sf.maxCoeff(), sk.maxCoeff(), 1e-9);
    EXPECT_NEAR(sf.minCoeff(), sk.minCoeff(), 1e-9);
  }
}
