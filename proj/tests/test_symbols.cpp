#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/trapezoidal.hpp>
#include <gtest/gtest.h>

#include "hslab/jet.hpp"
#include "hslab/symbols.hpp"

using namespace hslab;

namespace {

double central_difference(const SmoothSymbol& s, double x, int order, double h) {
  if (order == 0) return s(x);
  return (central_difference(s, x + h, order - 1, h) - central_difference(s, x - h, order - 1, h)) / (2 * h);
}

}  // namespace

TEST(Jet, PolynomialDerivativesAreExact) {
  const Jet x = Jet::variable(2.0);
  const Jet p = x * x * x - 3.0 * x + 1.0;
  EXPECT_DOUBLE_EQ(p.value(), 3.0);
  EXPECT_DOUBLE_EQ(p.derivative(1), 9.0);
  EXPECT_DOUBLE_EQ(p.derivative(2), 12.0);
  EXPECT_DOUBLE_EQ(p.derivative(3), 6.0);
  EXPECT_DOUBLE_EQ(p.derivative(4), 0.0);
}

TEST(Jet, ExpLogAndQuotientMatchClosedForms) {
  const Jet x = Jet::variable(0.7);
  const Jet e = exp(x);
  for (int k = 0; k < 8; ++k) EXPECT_NEAR(e.derivative(k), std::exp(0.7), 1e-12 * std::exp(0.7));
  const Jet l = log(x);
  // d^k log x = (-1)^{k-1} (k-1)! / x^k
  double fact = 1.0;
  for (int k = 1; k < 8; ++k) {
    if (k > 1) fact *= (k - 1);
    EXPECT_NEAR(l.derivative(k), ((k % 2) ? 1.0 : -1.0) * fact / std::pow(0.7, k), 1e-9 * fact / std::pow(0.7, k));
  }
  const Jet q = Jet(1.0) / x;
  EXPECT_NEAR(q.derivative(3), -6.0 / std::pow(0.7, 4), 1e-10);
}

TEST(DyadicBump, PartitionOfUnityAtOne) {
  const auto fam = make_family(0.5, -5, 5);
  EXPECT_NEAR(fam.partition_sum(1.0), 1.0, 1e-10);
}

TEST(DyadicBump, PartitionOfUnityOnCoveredRange) {
  const auto fam = make_family(1.0, -3, 4);
  const auto [lo, hi] = fam.covered_range();
  for (int k = 0; k <= 400; ++k) {
    const double lam = lo * std::pow(hi / lo, k / 400.0);
    EXPECT_NEAR(fam.partition_sum(lam), 1.0, 1e-10) << lam;
  }
}

TEST(DyadicBump, VanishesWithDerivativesOutsideSupport) {
  const double a = 2.0;
  const auto psi = make_dyadic_bump(a, 8);
  const Support s = psi.support();
  EXPECT_DOUBLE_EQ(s.lo, a / 4);
  EXPECT_DOUBLE_EQ(s.hi, 4 * a);
  for (double x : {-1.0, 0.0, 0.1, s.lo, s.hi, 9.0, 100.0})
    for (double d : psi.derivatives(x, 8)) EXPECT_EQ(d, 0.0) << x;
  EXPECT_GT(psi(a), 0.0);
}

TEST(DyadicBump, DerivativeMatchesCentralDifference) {
  const auto psi = make_dyadic_bump(1.0, 8);
  const double mid = 0.5 * (psi.support().lo + psi.support().hi);
  EXPECT_NEAR(psi.derivative(mid, 1), central_difference(psi, mid, 1, 1e-5), 1e-6);
  for (double x : {0.4, 0.8, 1.5, 3.0}) {
    for (int m = 1; m <= 3; ++m) {
      const double exact = psi.derivative(x, m);
      const double fd = central_difference(psi, x, m, 1e-3);
      EXPECT_NEAR(exact, fd, 1e-3 * std::max(1.0, std::abs(exact))) << x << " order " << m;
    }
  }
}

TEST(DyadicBump, RejectsNonPositiveScaleAndDeepDerivatives) {
  EXPECT_THROW(make_dyadic_bump(0.0), std::invalid_argument);
  EXPECT_THROW(make_dyadic_bump(-1.0), std::invalid_argument);
  const auto psi = make_dyadic_bump(1.0, 4);
  EXPECT_THROW(psi.derivative(1.0, 5), std::out_of_range);
}

TEST(DyadicFamily, BlocksTwoApartHaveDisjointSupport) {
  const auto fam = make_family(1.0, -2, 4);
  for (int k = 0; k <= 2000; ++k) {
    const double lam = std::pow(10.0, -2.0 + 6.0 * k / 2000.0);
    for (int j = -2; j <= 2; ++j) EXPECT_EQ(fam.block_value(j, lam) * fam.block_value(j + 2, lam), 0.0);
  }
}

TEST(DyadicFamily, CoveringFamilyCoversSpectrum) {
  const auto fam = covering_family(1.0, 3.7, 5000.0);
  EXPECT_TRUE(fam.covers(3.7, 5000.0));
  EXPECT_NEAR(fam.partition_sum(3.7), 1.0, 1e-12);
  EXPECT_NEAR(fam.partition_sum(5000.0), 1.0, 1e-12);
}

TEST(PsiNorm, ZeroSymbolHasZeroNorm) { EXPECT_EQ(psi_norm(zero_symbol(), 3), 0.0); }

TEST(PsiNorm, OrderZeroMatchesIndependentQuadrature) {
  const auto psi = make_dyadic_bump(1.0, 8);
  const auto f = [&](double x) { return std::abs(psi(x)) / std::sqrt(1 + x * x); };
  // Trapezoid on a smooth compactly supported integrand, two refinements.
  const double coarse = boost::math::quadrature::trapezoidal(f, psi.support().lo, psi.support().hi, 1e-10);
  const double fine = boost::math::quadrature::trapezoidal(f, psi.support().lo, psi.support().hi, 1e-13);
  EXPECT_NEAR(coarse, fine, 1e-8);
  EXPECT_NEAR(psi_norm(psi, 0), fine, 1e-8);
}

TEST(PsiNorm, MonotoneInOrderAndRejectsMissingDerivatives) {
  const auto psi = make_dyadic_bump(1.0, 6);
  double prev = 0.0;
  for (int n = 0; n <= 6; ++n) {
    const double v = psi_norm(psi, n);
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_THROW(psi_norm(psi, 7), std::out_of_range);
}

TEST(Mikhlin, ConstantSymbolHasSeminormOne) {
  const auto est = mikhlin_seminorm(constant_symbol(1.0), 3);
  EXPECT_DOUBLE_EQ(est.value, 1.0);
  EXPECT_DOUBLE_EQ(est.per_order[0], 1.0);
  for (std::size_t k = 1; k < est.per_order.size(); ++k) EXPECT_EQ(est.per_order[k], 0.0);
}

TEST(Mikhlin, BumpSeminormStableUnderRefinement) {
  const auto psi = make_dyadic_bump(1.0, 8);
  const double a = mikhlin_seminorm(psi, 2, LogGrid{1e-3, 1e3, 2001}).value;
  const double b = mikhlin_seminorm(psi, 2, LogGrid{1e-3, 1e3, 8001}).value;
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(a, b, 0.05 * b);
}

TEST(Mikhlin, LogarithmGrowsWithTheGrid) {
  const double small = mikhlin_seminorm(log_symbol(), 1, LogGrid{1e-2, 1e2, 401}).value;
  const double large = mikhlin_seminorm(log_symbol(), 1, LogGrid{1e-8, 1e8, 401}).value;
  EXPECT_GT(large, 3.0 * small);
}

TEST(Rademacher, AllPlusNearZeroGivesPartitionSum) {
  const auto fam = make_family(1.0, 0, 3);
  const auto m = randomized_symbol(1e-9, fam, Sign::kPlus);
  for (double lam : {0.1, 1.0, 7.0, 40.0}) EXPECT_NEAR(m(lam), fam.partition_sum(lam), 1e-12);
}

TEST(Rademacher, SeminormBoundedUniformlyInT) {
  const auto fam = make_family(1.0, -2, 3);
  const double base = mikhlin_seminorm(fam.psi, 2).value;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double t = u(rng);
    for (Sign s : {Sign::kPlus, Sign::kMinus}) EXPECT_LE(mikhlin_seminorm(randomized_symbol(t, fam, s), 2).value, 10 * base);
  }
}

TEST(Rademacher, DifferenceSupportedWhereASignFlips) {
  const auto fam = make_family(1.0, 0, 3);
  // t and t2 differ only in r_0.
  const double t = 0.125 + 0.0625, t2 = 0.625 + 0.0625;
  for (int m = 1; m < 4; ++m) ASSERT_EQ(rademacher(m, t), rademacher(m, t2));
  ASSERT_NE(rademacher(0, t), rademacher(0, t2));
  const auto a = randomized_symbol(t, fam, Sign::kPlus);
  const auto b = randomized_symbol(t2, fam, Sign::kPlus);
  const auto block0 = fam.block(0);
  for (int k = 0; k <= 1000; ++k) {
    const double lam = std::pow(10.0, -2.0 + 5.0 * k / 1000.0);
    if (!block0.support().contains(lam)) EXPECT_NEAR(a(lam) - b(lam), 0.0, 1e-15) << lam;
  }
}

TEST(Khintchine, SingleCoefficientRatioIsOne) {
  for (double p : {1.0, 1.5, 2.0, 4.0, 7.0}) {
    const std::vector<double> a{1.0};
    EXPECT_DOUBLE_EQ(khintchine_check(a, p).ratio_low, 1.0);
  }
}

TEST(Khintchine, TwoCoefficientsExactValues) {
  const std::vector<double> a{1.0, 1.0};
  EXPECT_NEAR(khintchine_check(a, 2.0).lp_norm, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(khintchine_check(a, 2.0).ratio_low, 1.0, 1e-15);
  // Quarters take values 2, 0, 0, -2: ||.||_4 = (2 * 16 / 4)^{1/4} = 8^{1/4}.
  const auto r4 = khintchine_check(a, 4.0);
  EXPECT_NEAR(r4.lp_norm, std::pow(8.0, 0.25), 1e-14);
  EXPECT_NEAR(r4.ratio_low, std::pow(8.0, 0.25) / std::sqrt(2.0), 1e-14);
}

TEST(Khintchine, RejectsLongVectors) {
  const std::vector<double> a(21, 1.0);
  EXPECT_THROW(khintchine_check(a, 2.0), std::invalid_argument);
  EXPECT_THROW(khintchine_check(std::vector<double>{}, 2.0), std::invalid_argument);
}

TEST(Khintchine, PropertyL2IsIsometric) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  std::uniform_int_distribution<int> len(1, 14);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> a(static_cast<std::size_t>(len(rng)));
    for (auto& x : a) x = n(rng);
    EXPECT_NEAR(khintchine_check(a, 2.0).ratio_low, 1.0, 1e-12);
  }
}
