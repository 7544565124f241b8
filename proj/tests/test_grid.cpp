#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "hslab/grid_domain.hpp"

using namespace hslab;

namespace {

Eigen::VectorXd sorted_spectrum(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  return es.eigenvalues();
}

GridDomain obstacle16() { return build_domain(ObstacleSpec{RectangleSpec{1.0, 1.0, 16, 16}, 6, 6, 4, 4}); }

Field random_field(Index n, double w, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Field f{Eigen::MatrixXd(n, 1), w};
  for (Index i = 0; i < n; ++i) f.values(i, 0) = g(rng);
  return f;
}

}  // namespace

TEST(GridDomain, IntervalSpacingCountsBoundaryPoints) {
  const GridDomain d = build_domain(IntervalSpec{1.0, 3});
  EXPECT_DOUBLE_EQ(d.spacing(), 0.25);
  EXPECT_EQ(d.size(), 3);
  EXPECT_EQ(d.dimension(), 1);
  EXPECT_DOUBLE_EQ(d.cell_weight(), 0.25);
}

TEST(GridDomain, SquareAndObstacleCellCounts) {
  EXPECT_EQ(build_domain(RectangleSpec{1.0, 1.0, 32, 32}).size(), 1024);
  const GridDomain o = obstacle16();
  EXPECT_EQ(o.size(), 240);
  EXPECT_FALSE(o.is_full_box());
}

TEST(GridDomain, RejectsBadDescriptors) {
  EXPECT_THROW(build_domain(IntervalSpec{1.0, 0}), std::invalid_argument);
  EXPECT_THROW(build_domain(IntervalSpec{-1.0, 4}), std::invalid_argument);
  EXPECT_THROW(build_domain(RectangleSpec{1.0, 2.0, 8, 8}), std::invalid_argument);
  EXPECT_THROW(build_domain(ObstacleSpec{RectangleSpec{1.0, 1.0, 8, 8}, 6, 6, 4, 4}), std::invalid_argument);
  EXPECT_THROW(build_domain(MaskSpec{2, 1.0, {"1001"}}), std::invalid_argument);  // disconnected
  EXPECT_THROW(build_domain(MaskSpec{2, 1.0, {"000"}}), std::invalid_argument);   // empty
  EXPECT_THROW(build_domain(MaskSpec{2, 1.0, {"11", "1"}}), std::invalid_argument);
}

TEST(GridDomain, MaskMatchesEquivalentRectangle) {
  const GridDomain m = build_domain(MaskSpec{2, 0.2, {"1111", "1111", "1111", "1111"}});
  const GridDomain r = build_domain(RectangleSpec{1.0, 1.0, 4, 4});
  EXPECT_EQ(m.size(), r.size());
  EXPECT_DOUBLE_EQ(m.spacing(), r.spacing());
  EXPECT_TRUE(dirichlet_laplacian(m).matrix.isApprox(dirichlet_laplacian(r).matrix));
}

TEST(Laplacian, ThreeCellSpectrum) {
  const GridDomain d = build_domain(IntervalSpec{4.0, 3});  // h = 1
  const Eigen::VectorXd ev = sorted_spectrum(-Eigen::MatrixXd(dirichlet_laplacian(d).matrix));
  EXPECT_NEAR(ev[0], 2 - std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(ev[1], 2.0, 1e-14);
  EXPECT_NEAR(ev[2], 2 + std::sqrt(2.0), 1e-14);
}

TEST(Laplacian, TwoByTwoDiagonal) {
  const GridDomain d = build_domain(RectangleSpec{0.3, 0.3, 2, 2});
  const Eigen::MatrixXd a(dirichlet_laplacian(d).matrix);
  const double h2 = d.spacing() * d.spacing();
  for (Index i = 0; i < 4; ++i) EXPECT_NEAR(a(i, i), -4.0 / h2, 1e-9 / h2);
}

TEST(Laplacian, ObstacleIsSymmetricNegativeDefinite) {
  const GridDomain d = obstacle16();
  const Eigen::MatrixXd a(dirichlet_laplacian(d).matrix);
  EXPECT_TRUE(a.isApprox(a.transpose()));
  EXPECT_GT(sorted_spectrum(-a).minCoeff(), 0.0);
}

TEST(Laplacian, NeumannKernelAndSpectrum) {
  const GridDomain d = build_domain(IntervalSpec{4.0, 3});
  const SparseOperator n = neumann_laplacian(d);
  const Eigen::MatrixXd a(n.matrix);
  EXPECT_NEAR(a.rowwise().sum().cwiseAbs().maxCoeff(), 0.0, 1e-14);
  const Eigen::VectorXd ev = sorted_spectrum(-a);
  EXPECT_NEAR(ev[0], 0.0, 1e-14);
  EXPECT_NEAR(ev[1], 1.0, 1e-14);
  EXPECT_NEAR(ev[2], 3.0, 1e-14);
}

TEST(Gradient, OneDimensionalStencil) {
  const GridDomain d = build_domain(IntervalSpec{4.0, 3});
  const SparseOperator g = gradient(d);
  const Field f{Eigen::Vector3d(1, 2, 3), d.cell_weight()};
  const Field gf = apply_gradient(g, 1, f);
  ASSERT_EQ(gf.points(), 4);
  const Eigen::Vector4d expected(1, 1, 1, -3);
  EXPECT_TRUE(gf.values.col(0).isApprox(expected));
}

TEST(Gradient, GradientTransposeGradientIsMinusLaplacian) {
  for (const DomainDescriptor& desc :
       {DomainDescriptor{IntervalSpec{1.0, 40}}, DomainDescriptor{RectangleSpec{1.0, 1.0, 12, 12}},
        DomainDescriptor{ObstacleSpec{RectangleSpec{1.0, 1.0, 16, 16}, 6, 6, 4, 4}},
        DomainDescriptor{MaskSpec{2, 0.1, {"0110", "1111", "1110"}}}}) {
    const GridDomain d = build_domain(desc);
    const Eigen::SparseMatrix<double> g = gradient(d).matrix;
    const Eigen::MatrixXd gtg(g.transpose() * g);
    const Eigen::MatrixXd lap(dirichlet_laplacian(d).matrix);
    const double scale = lap.cwiseAbs().maxCoeff();
    EXPECT_LE((gtg + lap).cwiseAbs().maxCoeff(), 1e-12 * scale);
  }
}

TEST(Gradient, SummationByParts) {
  const GridDomain d = obstacle16();
  const SparseOperator g = gradient(d);
  const SparseOperator a = dirichlet_laplacian(d);
  for (unsigned s = 0; s < 10; ++s) {
    const Field f = random_field(d.size(), d.cell_weight(), s);
    const Field u = random_field(d.size(), d.cell_weight(), 100 + s);
    const double lhs = inner_product(a.apply(f), u);
    const double rhs = -inner_product(apply_gradient(g, 2, f), apply_gradient(g, 2, u));
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(rhs));
    // Divergence is the negative adjoint.
    const Field v = apply_gradient(g, 2, u);
    EXPECT_NEAR(inner_product(apply_gradient(g, 2, f), v), -inner_product(f, apply_divergence(g, 2, v)),
                1e-10 * std::abs(rhs));
  }
}

TEST(LpNorm, ClosedFormValues) {
  // Two points, two components: moduli 5 and 0, weight 0.5.
  Field f{Eigen::MatrixXd(2, 2), 0.5};
  f.values << 3, 4, 0, 0;
  EXPECT_NEAR(lp_norm(f, 1.0), 2.5, 1e-15);
  EXPECT_NEAR(lp_norm(f, 2.0), 5.0 * std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(lp_norm(f, 3.0), 5.0 * std::cbrt(0.5), 1e-14);
  EXPECT_EQ(lp_norm(f, std::numeric_limits<double>::infinity()), 5.0);
}

TEST(LpNorm, HandlesHugeValuesAndRejectsSmallP) {
  Field f{Eigen::MatrixXd::Constant(4, 1, 1e200), 1.0};
  EXPECT_NEAR(lp_norm(f, 4.0) / 1e200, std::pow(4.0, 0.25), 1e-14);
  EXPECT_THROW(lp_norm(f, 0.5), std::invalid_argument);
  Field zero{Eigen::MatrixXd::Zero(3, 1), 1.0};
  EXPECT_EQ(lp_norm(zero, 3.0), 0.0);
}

TEST(GridDomain, BoundaryDistanceOfCornerCell) {
  const GridDomain d = build_domain(RectangleSpec{1.0, 1.0, 9, 9});
  const Index corner = d.dof(1, 1);
  EXPECT_NEAR(d.boundary_distance(corner), d.spacing(), 1e-15);
  const Index center = d.dof(5, 5);
  EXPECT_NEAR(d.boundary_distance(center), 5 * d.spacing(), 1e-15);
}
