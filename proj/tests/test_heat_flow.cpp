#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "hslab/heat_flow.hpp"

using namespace hslab;

namespace {

Field random_field(Index n, Index comps, double w, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Field f{Eigen::MatrixXd(n, comps), w};
  for (Index i = 0; i < f.values.size(); ++i) f.values.data()[i] = g(rng);
  return f;
}

const DirichletProblem& square16() {
  static const DirichletProblem p(build_domain(RectangleSpec{1.0, 1.0, 16, 16}));
  return p;
}

const DirichletProblem& obstacle16() {
  static const DirichletProblem p(build_domain(ObstacleSpec{RectangleSpec{1.0, 1.0, 16, 16}, 6, 6, 4, 4}));
  return p;
}

}  // namespace

TEST(TimeGrid, GeometricNodesAndWeights) {
  const TimeGrid g = TimeGrid::geometric(1e-3, 1.0, 2.0);
  EXPECT_DOUBLE_EQ(g.t_min(), 1e-3);
  EXPECT_DOUBLE_EQ(g.t_max(), 1.0);
  double w = 0.0;
  for (double x : g.weights) w += x;
  EXPECT_NEAR(w, std::log(1e3), 1e-12);
  EXPECT_LE(g.ratio(), 2.0 + 1e-12);
  EXPECT_THROW(TimeGrid::geometric(0.0, 1.0, 2.0), std::invalid_argument);
  EXPECT_THROW(TimeGrid::geometric(1.0, 1.0, 2.0), std::invalid_argument);
}

TEST(Semigroup, TimeZeroIsIdentity) {
  const DirichletProblem& p = obstacle16();
  const Field f = random_field(p.size(), 2, p.cell_weight(), 1);
  EXPECT_EQ(semigroup(p.spectrum, 0.0, f).values, f.values);
  EXPECT_THROW(semigroup(p.spectrum, -1.0, f), std::invalid_argument);
}

TEST(Semigroup, EigenvectorDecaysExponentially) {
  const DirichletProblem& p = obstacle16();
  for (Index i : {Index{0}, Index{17}}) {
    const Field v = p.spectrum.eigenvector(i);
    const double lam = p.spectrum.eigenvalues()[i];
    for (double t : {1e-4, 1e-3, 1e-2}) {
      const Field s = semigroup(p.spectrum, t, v);
      EXPECT_LE((s.values - std::exp(-t * lam) * v.values).norm(), 1e-12 * v.values.norm());
    }
  }
}

TEST(Semigroup, L2NormDecreases) {
  const DirichletProblem& p = obstacle16();
  const Field f = random_field(p.size(), 1, p.cell_weight(), 2);
  double prev = lp_norm(f, 2.0);
  for (double t = 1e-5; t < 1.0; t *= 3) {
    const double n = lp_norm(semigroup(p.spectrum, t, f), 2.0);
    EXPECT_LT(n, prev);
    prev = n;
  }
}

TEST(Semigroup, PositivityAndSubMarkov) {
  const DirichletProblem& p = obstacle16();
  Field ones{Eigen::MatrixXd::Ones(p.size(), 1), p.cell_weight()};
  for (double t : {1e-4, 1e-2, 1.0}) {
    const Field s = semigroup(p.spectrum, t, ones);
    EXPECT_GE(s.values.minCoeff(), -1e-13);
    EXPECT_LE(s.values.maxCoeff(), 1.0 + 1e-12);
  }
}

TEST(Semigroup, CrankNicolsonConvergesToSpectral) {
  const DirichletProblem& p = obstacle16();
  const Field f = random_field(p.size(), 1, p.cell_weight(), 3);
  const double t = 5e-3;
  const Field exact = semigroup(p.spectrum, t, f);
  double prev = std::numeric_limits<double>::infinity();
  for (int steps : {100, 200, 400}) {
    const double err = lp_norm(Field{semigroup_crank_nicolson(p.laplacian, t, f, steps).values - exact.values,
                                     p.cell_weight()}, 2.0);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-3 * lp_norm(f, 2.0));
}

TEST(QOperators, EigenvectorNorms) {
  const DirichletProblem& p = obstacle16();
  for (Index i : {Index{0}, Index{40}}) {
    const Field v = p.spectrum.eigenvector(i);
    const double lam = p.spectrum.eigenvalues()[i];
    for (double t : {1e-3, 1e-2}) {
      // ||G v||^2 = <-Delta v, v> = lam.
      EXPECT_NEAR(lp_norm(q_t(p, t, v), 2.0), std::sqrt(t * lam) * std::exp(-t * lam), 1e-10);
      EXPECT_NEAR(lp_norm(bold_q_t(p, t, v), 2.0), t * lam * std::exp(-t * lam), 1e-10);
    }
  }
  EXPECT_THROW(q_t(p, 0.0, p.spectrum.eigenvector(0)), std::invalid_argument);
}

TEST(QOperators, FactorizationOnSquare) {
  const DirichletProblem& p = square16();
  const Field f = random_field(p.size(), 1, p.cell_weight(), 4);
  for (double t : {1e-4, 1e-3, 1e-2, 1e-1}) EXPECT_LE(factorization_check(p, t, f), 1e-12);
  EXPECT_LE(factorization_check(p, 1e-3, p.spectrum.eigenvector(3)), 1e-12);
}

TEST(QOperators, FactorizationMultiComponent) {
  const DirichletProblem& p = obstacle16();
  const Field f = random_field(p.size(), 4, p.cell_weight(), 5);
  for (double t : {1e-3, 1e-2}) EXPECT_LE(factorization_check(p, t, f), 1e-12);
}

TEST(QOperators, DualIsAdjoint) {
  const DirichletProblem& p = obstacle16();
  const Field f = random_field(p.size(), 1, p.cell_weight(), 6);
  const Field v = random_field(p.domain.staggered_size(), 2, p.cell_weight(), 7);
  const double t = 2e-3;
  // q_t_dual carries the divergence sign: <Q f, v> = -<f, q_t_dual v>.
  const double lhs = inner_product(q_t(p, t, f), v);
  const double rhs = -inner_product(f, q_t_dual(p, t, v));
  EXPECT_NEAR(lhs, rhs, 1e-11 * std::abs(lhs));
}

TEST(QOperators, PowerIterationMatchesExactL2Norm) {
  const DirichletProblem& p = obstacle16();
  const double t = 1e-3;
  double exact = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    const double tl = t * p.spectrum.eigenvalues()[i];
    exact = std::max(exact, std::sqrt(tl) * std::exp(-tl));
  }
  const Field f = random_field(p.size(), 1, p.cell_weight(), 8);
  const double est = q_t_norm_estimate(p, t, f, 2.0, 60);
  EXPECT_LE(est, exact * (1 + 1e-12));
  EXPECT_GE(est, 0.95 * exact);
}

TEST(Maximal, DominatesInitialAndEvolvedFields) {
  const DirichletProblem& p = obstacle16();
  const Field f = random_field(p.size(), 1, p.cell_weight(), 9);
  const TimeGrid g = TimeGrid::for_spectrum(p.spectrum.lambda_min(), p.spectrum.lambda_max());
  const Field m = maximal_function(p, g, f);
  EXPECT_TRUE((m.values.col(0).array() >= f.values.col(0).array().abs() - 1e-15).all());
  const Field s = semigroup(p.spectrum, g.nodes[g.size() / 2], f);
  EXPECT_TRUE((m.values.col(0).array() >= s.values.col(0).array().abs() - 1e-13).all());
}

TEST(Domination, ObstacleKernelBelowFreeKernel) {
  const DirichletProblem& p = obstacle16();
  const DirichletProblem free_grid(p.domain.filled());
  for (Index src : {Index{0}, Index{100}, p.size() - 1}) {
    for (double t : {1e-4, 1e-3, 1e-2}) {
      const DominationReport r = gaussian_domination(p, free_grid, t, src);
      EXPECT_TRUE(r.dominated()) << r.max_excess;
      EXPECT_LE(r.max_row_sum, 1.0 + 1e-12);
      EXPECT_GT(r.peak_value, 0.0);
    }
  }
  EXPECT_THROW(gaussian_domination(p, free_grid, 1e-3, p.size()), std::out_of_range);
}

TEST(BoldQ, InfinityAndOneNormsCoincide) {
  const DirichletProblem& p = obstacle16();
  for (double t : {1e-4, 1e-3, 1e-2}) {
    const InducedNorms n = linfty_bound_boldq(p.spectrum, t);
    EXPECT_NEAR(n.inf_norm, n.one_norm, 1e-12 * n.inf_norm);
    EXPECT_GT(n.inf_norm, 0.0);
  }
  EXPECT_THROW(linfty_bound_boldq(p.spectrum, 1e-3, 10), CapacityError);
}
