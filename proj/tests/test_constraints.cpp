#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "compactnet/constraints.hpp"
#include "compactnet/rng.hpp"
#include "oracles.hpp"

using namespace compactnet;

namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double x : v) m(0, j++) = x;
  return m;
}

struct Case {
  ConstraintSpec spec;
  Eigen::Index h, p;
};

// One spec of every kind on a 3 x 4 matrix, plus a conv geometry that fits it.
std::vector<Case> all_specs(Rng& rng) {
  const ConvGeometry g = ConvGeometry::make(1, 2, 1, 4, 3);  // 3 positions of a width-2 kernel
  return {
      {ConstraintSpec::none(), 3, 4},
      {ConstraintSpec::sparsity(5), 3, 4},
      {ConstraintSpec::l1_ball(2.5), 3, 4},
      {ConstraintSpec::rank(1), 3, 4},
      {ConstraintSpec::nuclear_ball(1.5), 3, 4},
      {ConstraintSpec::subspace(random_orthonormal_basis(12, 5, rng)), 3, 4},
      {ConstraintSpec::conv(g), 3, 4},
  };
}

bool feasible(const ConstraintSpec& spec, const Matrix& w) {
  using namespace constraint;
  return std::visit(
      [&](const auto& c) -> bool {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, None>) {
          return true;
        } else if constexpr (std::is_same_v<T, Sparsity>) {
          return (w.array() != 0.0).count() <= c.s;
        } else if constexpr (std::is_same_v<T, L1Ball>) {
          return w.cwiseAbs().sum() <= c.tau + 1e-9;
        } else if constexpr (std::is_same_v<T, Rank>) {
          const Vector s = oracle::singular_values(w);
          return c.r >= s.size() || s(c.r) <= 1e-9 * std::max(s(0), 1e-300);
        } else if constexpr (std::is_same_v<T, NuclearBall>) {
          return oracle::singular_values(w).sum() <= c.tau + 1e-9;
        } else if constexpr (std::is_same_v<T, Subspace>) {
          const Vector v = vec(w);
          return (v - c.basis * (c.basis.transpose() * v)).norm() <= 1e-10;
        } else {
          return (project_conv(w, c.geometry) - w).norm() <= 1e-10;
        }
      },
      spec.set);
}

}  // namespace

TEST(Project, L1InsideBallUnchanged) {
  const Matrix w = row({0.5, 0.5});
  EXPECT_TRUE(project(ConstraintSpec::l1_ball(2.0), w) == w);
}

TEST(Project, L1SoftThreshold) {
  const Matrix p = project(ConstraintSpec::l1_ball(2.0), row({3.0, 1.0}));
  EXPECT_NEAR(p(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(p(0, 1), 0.0, 1e-15);
  const Vector ref = oracle::project_l1_exhaustive(Vector((Vector(2) << 3.0, 1.0).finished()), 2.0);
  EXPECT_NEAR((vec(p) - ref).norm(), 0.0, 1e-12);
}

TEST(Project, SparsityTopMagnitudes) {
  const Matrix p = project(ConstraintSpec::sparsity(2), row({3.0, 1.0, -2.0}));
  EXPECT_TRUE(p == row({3.0, 0.0, -2.0}));
}

TEST(Project, SparsityTieBreaksTowardLowerIndex) {
  const Matrix p = project(ConstraintSpec::sparsity(1), row({1.0, -1.0, 1.0}));
  EXPECT_TRUE(p == row({1.0, 0.0, 0.0}));
}

TEST(Project, RankOfDiagonal) {
  Matrix w = Matrix::Zero(2, 2);
  w.diagonal() << 3.0, 1.0;
  Matrix expect = Matrix::Zero(2, 2);
  expect(0, 0) = 3.0;
  EXPECT_LE((project(ConstraintSpec::rank(1), w) - expect).norm(), 1e-12);
}

TEST(Project, SubspaceCoordinateAxis) {
  Matrix basis(2, 1);
  basis << 1.0, 0.0;
  EXPECT_TRUE(project(ConstraintSpec::subspace(basis), row({2.0, 3.0})) == row({2.0, 0.0}));
}

TEST(Project, NonFiniteInputThrows) {
  EXPECT_THROW(project(ConstraintSpec::none(), row({1.0, std::nan("")})), DomainError);
}

TEST(Project, InvalidSpecsAreRejected) {
  EXPECT_THROW(project(ConstraintSpec::l1_ball(0.0), row({1.0})), DomainError);
  EXPECT_THROW(project(ConstraintSpec::rank(3), Matrix::Ones(2, 2)), DomainError);
  EXPECT_THROW(project(ConstraintSpec::sparsity(5), Matrix::Ones(2, 2)), DomainError);
  EXPECT_THROW(project(ConstraintSpec::subspace(Matrix::Ones(4, 1)), Matrix::Ones(2, 2)), DomainError);
  EXPECT_THROW(project(ConstraintSpec::subspace(Matrix::Identity(3, 1)), Matrix::Ones(2, 2)), ShapeError);
}

TEST(Project, MatchesExhaustiveOraclesOnSmallInstances) {
  Rng rng(11);
  const std::pair<int, int> shapes[] = {{1, 2}, {1, 3}, {2, 2}, {2, 3}, {3, 2}, {1, 6}, {6, 1}};
  for (int t = 0; t < 40; ++t) {
    for (auto [h, p] : shapes) {
      const Matrix w = gaussian_matrix(h, p, 1.0, rng);
      const Vector v = vec(w);
      const double tau = 0.3 + 0.5 * v.lpNorm<1>() * (t % 3) / 2.0;
      const Matrix l1 = project(ConstraintSpec::l1_ball(tau), w);
      EXPECT_LE((vec(l1) - oracle::project_l1_exhaustive(v, tau)).norm(), 1e-8);
      for (int s = 0; s <= h * p; ++s) {
        const Matrix l0 = project(ConstraintSpec::sparsity(s), w);
        EXPECT_LE((vec(l0) - oracle::project_sparse_exhaustive(v, s)).norm(), 1e-8);
      }
      for (int r = 0; r <= std::min(h, p); ++r) {
        const Matrix rk = project(ConstraintSpec::rank(r), w);
        EXPECT_LE((rk - oracle::truncate_rank(w, r)).norm(), 1e-8);
      }
    }
  }
}

TEST(Project, NuclearBallMatchesSpectralL1Oracle) {
  Rng rng(12);
  for (int t = 0; t < 30; ++t) {
    const Matrix w = gaussian_matrix(2, 3, 1.0, rng);
    Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double tau = 0.25 + 0.5 * (t % 2);
    const Vector s = oracle::project_l1_exhaustive(svd.singularValues(), tau);
    const Matrix ref = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    EXPECT_LE((project(ConstraintSpec::nuclear_ball(tau), w) - ref).norm(), 1e-8);
  }
}

TEST(ProjectProperties, IdempotentAndFeasible) {
  Rng rng(13);
  for (const auto& c : all_specs(rng)) {
    for (int t = 0; t < 50; ++t) {
      const Matrix w = gaussian_matrix(c.h, c.p, 2.0, rng);
      const Matrix p1 = project(c.spec, w);
      const Matrix p2 = project(c.spec, p1);
      EXPECT_LE((p1 - p2).norm(), 1e-10) << c.spec.name();
      EXPECT_TRUE(feasible(c.spec, p1)) << c.spec.name();
    }
  }
}

TEST(ProjectProperties, ConvexProjectionsAreNonExpansive) {
  Rng rng(14);
  for (const auto& c : all_specs(rng)) {
    if (!c.spec.is_convex()) continue;
    for (int t = 0; t < 50; ++t) {
      const Matrix a = gaussian_matrix(c.h, c.p, 2.0, rng);
      const Matrix b = gaussian_matrix(c.h, c.p, 2.0, rng);
      EXPECT_LE((project(c.spec, a) - project(c.spec, b)).norm(), (a - b).norm() + 1e-10)
          << c.spec.name();
    }
  }
}

TEST(ProjectProperties, BestApproximation) {
  Rng rng(15);
  for (const auto& c : all_specs(rng)) {
    const Matrix w = gaussian_matrix(c.h, c.p, 2.0, rng);
    const double dist = (w - project(c.spec, w)).norm();
    for (int t = 0; t < 100; ++t) {
      // every set here is star-shaped around 0, so shrinking keeps z feasible
      Matrix z = project(c.spec, gaussian_matrix(c.h, c.p, 1.5, rng));
      if (t % 2) z *= 0.5;
      ASSERT_TRUE(feasible(c.spec, z)) << c.spec.name();
      EXPECT_LE(dist, (w - z).norm() + 1e-9) << c.spec.name();
    }
  }
}

TEST(ProjectL1, SortThresholdOnLargeVector) {
  Rng rng(16);
  const Vector v = gaussian_vector(500, 1.0, rng);
  const Vector p = project_l1_ball(v, 10.0);
  EXPECT_NEAR(p.lpNorm<1>(), 10.0, 1e-9);
  // every surviving entry is shifted by the same threshold
  double theta = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (p(i) == 0.0) continue;
    const double t = std::abs(v(i)) - std::abs(p(i));
    if (theta < 0) theta = t;
    EXPECT_NEAR(t, theta, 1e-12);
    EXPECT_EQ(std::signbit(p(i)), std::signbit(v(i)));
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (p(i) == 0.0) EXPECT_LE(std::abs(v(i)), theta + 1e-12);
  }
}

TEST(CoveringDimension, TableValues) {
  EXPECT_EQ(covering_dimension(ConstraintSpec::none(), 20, 80).value, 1600.0);
  EXPECT_EQ(covering_dimension(ConstraintSpec::conv(ConvGeometry::make(4, 15, 6, 81)), 48, 81).value, 60.0);
  const auto sp = covering_dimension(ConstraintSpec::sparsity(160), 20, 80);
  EXPECT_NEAR(sp.value, 160.0 * std::log(60.0), 1e-9);
  EXPECT_NEAR(sp.value, 655.0, 0.1);
  EXPECT_NEAR(covering_dimension(ConstraintSpec::l1_ball(3.0, 160), 20, 80).value, sp.value, 1e-12);
  EXPECT_EQ(covering_dimension(ConstraintSpec::rank(2), 5, 9).value, 10.0);
  EXPECT_EQ(covering_dimension(ConstraintSpec::subspace(Matrix::Identity(12, 7)), 3, 4).value, 7.0);
}

TEST(CoveringDimension, FallsBackToAmbientWithoutSparsityInformation) {
  const auto r = covering_dimension(ConstraintSpec::l1_ball(3.0), 4, 5);
  EXPECT_EQ(r.value, 20.0);
  EXPECT_EQ(r.formula_tag, "l1:ambient-hp");
  EXPECT_EQ(covering_dimension(ConstraintSpec::nuclear_ball(1.0, 2), 4, 5).value, 8.0);
}

TEST(ConstraintSpec, NamesAndConvexity) {
  EXPECT_EQ(ConstraintSpec::none().name(), "none");
  EXPECT_EQ(ConstraintSpec::sparsity(1).name(), "l0");
  EXPECT_EQ(ConstraintSpec::l1_ball(1).name(), "l1");
  EXPECT_FALSE(ConstraintSpec::sparsity(1).is_convex());
  EXPECT_FALSE(ConstraintSpec::rank(1).is_convex());
  EXPECT_TRUE(ConstraintSpec::nuclear_ball(1).is_convex());
}
