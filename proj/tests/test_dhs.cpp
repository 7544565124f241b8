#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "hslab/dhs.hpp"
#include "hslab/heat_flow.hpp"

using namespace hslab;

namespace {

constexpr double kPi = std::numbers::pi;

Field random_field(Index n, double w, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Field f{Eigen::MatrixXd(n, 1), w};
  for (Index i = 0; i < n; ++i) f.values(i, 0) = g(rng);
  return f;
}

double rel(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST(Extension, RestrictsToSymbolOnRealAxis) {
  const auto ext = make_extension(make_dyadic_bump(1.0, 8), 4);
  for (double x : {0.1, 0.3, 1.0, 2.5, 3.9, 5.0}) {
    const Complex v = ext.value(Complex(x, 0.0));
    EXPECT_NEAR(v.real(), ext.symbol()(x), 1e-15);
    EXPECT_EQ(v.imag(), 0.0);
  }
}

TEST(Extension, VanishesOutsideTheCutoffBand) {
  const auto ext = make_extension(make_dyadic_bump(1.0, 8), 4);
  for (double x : {0.5, 1.0, 3.0}) {
    const double br = AlmostAnalyticExtension::bracket(x);
    for (double s : {2.0, 2.5, 10.0}) {
      EXPECT_EQ(ext.value(Complex(x, s * br)), Complex(0.0));
      EXPECT_EQ(ext.dbar(Complex(x, s * br)), Complex(0.0));
      EXPECT_EQ(ext.dbar(Complex(x, -s * br)), Complex(0.0));
    }
  }
}

TEST(Extension, DbarIsFlatNearTheRealAxis) {
  const auto psi = make_dyadic_bump(1.0, 8);
  for (int n : {2, 4}) {
    const auto ext = make_extension(psi, n);
    for (double x : {0.4, 1.3, 2.9}) {
      const double d = psi.derivative(x, n + 1);
      double fact = 1.0;
      for (int m = 2; m <= n; ++m) fact *= m;
      for (double y : {1e-3, 1e-2, 1e-1}) {
        // Inside the plateau of the cutoff, dbar is the Taylor remainder term.
        EXPECT_NEAR(std::abs(ext.dbar(Complex(x, y))), 0.5 * std::abs(d) * std::pow(y, n) / fact,
                    1e-12 * (1 + std::abs(d)));
      }
    }
  }
}

TEST(Extension, DbarMatchesFiniteDifferences) {
  const auto ext = make_extension(make_dyadic_bump(1.0, 8), 3);
  const double e = 1e-6;
  for (Complex z : {Complex(1.2, 1.7), Complex(0.7, 1.4), Complex(2.2, 3.5), Complex(1.0, 0.3)}) {
    const Complex dx = (ext.value(z + e) - ext.value(z - e)) / (2 * e);
    const Complex dy = (ext.value(z + Complex(0, e)) - ext.value(z - Complex(0, e))) / (2 * e);
    const Complex fd = 0.5 * (dx + Complex(0, 1) * dy);
    EXPECT_NEAR(std::abs(ext.dbar(z) - fd), 0.0, 1e-5 * std::max(1.0, std::abs(fd))) << z;
  }
}

TEST(Extension, RejectsInsufficientDerivativeTower) {
  EXPECT_THROW(make_extension(make_dyadic_bump(1.0, 4), 4), std::invalid_argument);
  EXPECT_NO_THROW(make_extension(make_dyadic_bump(1.0, 5), 4));
  EXPECT_THROW(make_extension(make_dyadic_bump(1.0, 8), -1), std::invalid_argument);
}

TEST(Quadrature, GaussLegendreIsExactForPolynomials) {
  const GaussRule r = gauss_legendre(5);
  double w = 0.0, m8 = 0.0, m9 = 0.0;
  for (std::size_t k = 0; k < r.nodes.size(); ++k) {
    w += r.weights[k];
    m8 += r.weights[k] * std::pow(r.nodes[k], 8);
    m9 += r.weights[k] * std::pow(r.nodes[k], 9);
  }
  EXPECT_NEAR(w, 2.0, 1e-14);
  EXPECT_NEAR(m8, 2.0 / 9.0, 1e-14);
  EXPECT_NEAR(m9, 0.0, 1e-14);
  EXPECT_THROW(gauss_legendre(0), std::invalid_argument);
}

TEST(Resolvent, SparseSolveMatchesSpectral) {
  const GridDomain d = build_domain(ObstacleSpec{RectangleSpec{1.0, 1.0, 10, 10}, 3, 3, 2, 4});
  const SparseOperator lap = dirichlet_laplacian(d);
  const SpectralDecomposition sd = dirichlet_spectrum(d);
  const Field f = random_field(d.size(), d.cell_weight(), 1);
  const double h2 = 1e-3;
  ResolventSolver solver(lap, h2);
  for (Complex z : {Complex(0.5, 0.1), Complex(-1.0, 2.0), Complex(3.0, 1e-3)}) {
    // (z + h2 Delta)^{-1} has multiplier 1 / (z - h2 l).
    const ComplexField expected = apply_multiplier(sd, [&](double l) { return 1.0 / (z - h2 * l); }, f);
    EXPECT_LE(rel(solver.solve(z, f.values.cast<Complex>()), expected.values), 1e-11);
  }
}

TEST(Dhs, MatchesSpectralCalculusOnSmallInterval) {
  const DirichletProblem p(build_domain(IntervalSpec{1.0, 50}));
  const auto ext = make_extension(make_dyadic_bump(1.0, 8), 4);
  const double h2 = std::ldexp(1.0, -8);
  const Field f = random_field(p.size(), p.cell_weight(), 2);
  const Field exact = apply_multiplier(p.spectrum, [&](double l) { return ext.symbol()(h2 * l); }, f);
  const Field approx = dhs_apply(ext, p.laplacian, h2, f, QuadratureSpec{});
  EXPECT_LE(lp_norm(Field{approx.values - exact.values, f.cell_weight}, 2.0), 1e-5 * lp_norm(f, 2.0));
}

TEST(Dhs, NearlyVanishesWhenSpectrumMissesTheSupport) {
  const DirichletProblem p(build_domain(IntervalSpec{1.0, 30}));
  const auto ext = make_extension(make_dyadic_bump(1.0, 8), 4);
  const double h2 = 8.0 / p.spectrum.lambda_min();  // h2 * l >= 8 > sup supp Psi
  const Field f = random_field(p.size(), p.cell_weight(), 3);
  const Field out = dhs_apply(ext, p.laplacian, h2, f, QuadratureSpec{});
  EXPECT_LE(lp_norm(out, 2.0), 1e-5 * lp_norm(f, 2.0));
}

TEST(Dhs, ThreadCountDoesNotChangeTheResult) {
  const DirichletProblem p(build_domain(IntervalSpec{1.0, 20}));
  const auto ext = make_extension(make_dyadic_bump(1.0, 8), 2);
  const Field f = random_field(p.size(), p.cell_weight(), 4);
  const QuadratureSpec q{100, 12, 12, 1e-3};
  const Field a = dhs_apply(ext, p.laplacian, 1e-3, f, q, 1);
  const Field b = dhs_apply(ext, p.laplacian, 1e-3, f, q, 3);
  EXPECT_EQ(a.values, b.values);
}

TEST(Dhs, RejectsInvalidQuadrature) {
  const DirichletProblem p(build_domain(IntervalSpec{1.0, 10}));
  const auto ext = make_extension(make_dyadic_bump(1.0, 8), 2);
  const Field f = random_field(p.size(), p.cell_weight(), 5);
  EXPECT_THROW(dhs_apply(ext, p.laplacian, 1e-3, f, QuadratureSpec{100, 8, 8, 0.0}), std::invalid_argument);
  EXPECT_THROW(dhs_apply(ext, p.laplacian, 1e-3, f, QuadratureSpec{100, 8, 8, 1.0}), std::invalid_argument);
  EXPECT_THROW(dhs_apply(ext, p.laplacian, 0.0, f, QuadratureSpec{}), std::invalid_argument);
  EXPECT_THROW(dhs_apply(make_extension(log_symbol(), 2), p.laplacian, 1e-3, f, QuadratureSpec{}),
               std::invalid_argument);
}

TEST(Dhs, NormBoundIsPsiNorm) {
  const auto psi = make_dyadic_bump(1.0, 8);
  EXPECT_DOUBLE_EQ(dhs_norm_bound(make_extension(psi, 3)), psi_norm(psi, 4));
}

TEST(Laplace, RealAxisMatchesExactResolvent) {
  const DirichletProblem p(build_domain(RectangleSpec{1.0, 1.0, 12, 12}));
  const Field f = random_field(p.size(), p.cell_weight(), 6);
  for (Complex z : {Complex(1.0, 0.0), Complex(100.0, 0.0)})
    EXPECT_LE(rel(laplace_resolvent(p.spectrum, z, f, 0.0).values, exact_resolvent(p.spectrum, z, f).values), 1e-8);
}

TEST(Laplace, RotatedRayMatchesExactResolvent) {
  const DirichletProblem p(build_domain(RectangleSpec{1.0, 1.0, 12, 12}));
  const Field f = random_field(p.size(), p.cell_weight(), 7);
  const Complex z1 = std::polar(1.0, 3 * kPi / 4);
  EXPECT_LE(rel(laplace_resolvent(p.spectrum, z1, f, -3 * kPi / 8).values, exact_resolvent(p.spectrum, z1, f).values),
            1e-8);
  const Complex z2(0.0, 50.0);
  EXPECT_LE(rel(laplace_resolvent(p.spectrum, z2, f, -kPi / 4).values, exact_resolvent(p.spectrum, z2, f).values),
            1e-8);
}

TEST(Laplace, RejectsBadRays) {
  const DirichletProblem p(build_domain(IntervalSpec{1.0, 10}));
  const Field f = random_field(p.size(), p.cell_weight(), 8);
  EXPECT_THROW(laplace_resolvent(p.spectrum, Complex(-1.0, 0.0), f, 0.0), std::invalid_argument);
  EXPECT_THROW(laplace_resolvent(p.spectrum, Complex(0.0, 0.0), f, 0.0), std::invalid_argument);
  EXPECT_THROW(laplace_resolvent(p.spectrum, Complex(1.0, 0.0), f, kPi / 2), std::invalid_argument);
  EXPECT_THROW(laplace_resolvent(p.spectrum, std::polar(1.0, 3 * kPi / 4), f, 0.0), std::invalid_argument);
}

TEST(Growth, L2ResolventHasExponentZeroInTheLeftHalfPlane) {
  const DirichletProblem p(build_domain(IntervalSpec{1.0, 50}));
  std::vector<double> thetas;
  for (int m = 2; m <= 7; ++m) thetas.push_back(kPi * (1 - std::ldexp(1.0, -m)));
  std::vector<double> radii;
  for (int k = 0; k <= 400; ++k)
    radii.push_back(0.01 * p.spectrum.lambda_min() * std::pow(1e4 * p.spectrum.lambda_max() / p.spectrum.lambda_min(), k / 400.0));
  const GrowthFit fit = resolvent_growth_exponent(p.spectrum, 2.0, thetas, radii);
  EXPECT_TRUE(fit.exact_norm);
  EXPECT_LE(fit.max_scaled, 1.0 + 1e-12);
  EXPECT_NEAR(fit.alpha, 0.0, 0.05);
  EXPECT_NEAR(fit.c(), 1.0, 0.05);
}

TEST(Growth, RejectsDegenerateAngles) {
  const DirichletProblem p(build_domain(IntervalSpec{1.0, 10}));
  EXPECT_THROW(resolvent_growth_exponent(p.spectrum, 2.0, {kPi / 2}, {1.0}), std::invalid_argument);
  EXPECT_THROW(resolvent_growth_exponent(p.spectrum, 2.0, {kPi / 2, kPi / 3}, {}), std::invalid_argument);
  EXPECT_THROW(resolvent_growth_exponent(p.spectrum, 2.0, {kPi, kPi / 3}, {1.0}), std::invalid_argument);
}

TEST(Growth, PowerIterationBoundsDiagonalNorm) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(4, 4);
  a.diagonal() << Complex(1, 0), Complex(0, -3), Complex(2, 2), Complex(0.5, 0);
  for (double p : {1.5, 3.0}) {
    const double b = induced_norm_lower_bound(a, p, 3, 30, 1);
    EXPECT_LE(b, 3.0 * (1 + 1e-12));
    EXPECT_GE(b, 3.0 * (1 - 1e-3));
  }
}

TEST(Growth, PowerIterationBelowRieszThorinBound) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(6, 6);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = Complex(g(rng), g(rng));
  const double n1 = a.cwiseAbs().colwise().sum().maxCoeff();
  const double ninf = a.cwiseAbs().rowwise().sum().maxCoeff();
  const double p = 3.0;
  const double b = induced_norm_lower_bound(a, p, 4, 40, 9);
  EXPECT_LE(b, std::pow(n1, 1 / p) * std::pow(ninf, 1 - 1 / p) * (1 + 1e-12));
  EXPECT_GT(b, 0.0);
}
