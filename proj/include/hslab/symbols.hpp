#pragma once

// Dyadic bump Psi and its derived symbols, Rademacher functions, the
// randomized symbols m^+-(t, .), and the symbol norms used to bound
// functional-calculus operators.

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "hslab/jet.hpp"

namespace hslab {

struct Support {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x > lo && x < hi; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
};

/// A real symbol on the line with a derivative tower. Evaluation pushes a
/// Taylor jet through the defining expression.
class SmoothSymbol {
 public:
  using JetMap = std::function<Jet(const Jet&)>;

  SmoothSymbol(std::string name, JetMap map, Support support,
               int max_order = kJetCapacity - 1)
      : name_(std::move(name)), map_(std::move(map)), support_(support),
        max_order_(max_order) {
    if (max_order_ < 0 || max_order_ >= kJetCapacity)
      throw std::invalid_argument("SmoothSymbol: derivative order out of range");
  }

  const std::string& name() const { return name_; }
  const Support& support() const { return support_; }
  int max_order() const { return max_order_; }

  Jet jet(const Jet& x) const { return map_(x); }
  Jet jet_at(double x) const { return map_(Jet::variable(x)); }

  double operator()(double x) const { return map_(Jet(x)).value(); }

  double derivative(double x, int order) const {
    check_order(order);
    return jet_at(x).derivative(order);
  }

  /// Derivatives 0..max_order at x.
  std::vector<double> derivatives(double x, int max_order) const {
    check_order(max_order);
    const Jet j = jet_at(x);
    std::vector<double> out(static_cast<std::size_t>(max_order) + 1);
    for (int m = 0; m <= max_order; ++m) out[m] = j.derivative(m);
    return out;
  }

 private:
  void check_order(int order) const {
    if (order < 0 || order > max_order_)
      throw std::out_of_range("symbol '" + name_ + "': derivative order " +
                              std::to_string(order) + " exceeds tower " +
                              std::to_string(max_order_));
  }

  std::string name_;
  JetMap map_;
  Support support_;
  int max_order_;
};

namespace detail {

// exp(-1/u) for u > 0, flat zero otherwise.
inline Jet flat_exp(const Jet& u) {
  const double u0 = u.value();
  if (u0 <= 0.0 || 1.0 / u0 > 700.0) return Jet(0.0);
  return exp(-(Jet(1.0) / u));
}

}  // namespace detail

/// C-infinity step: 0 for u <= 0, 1 for u >= 1.
inline Jet smooth_step(const Jet& u) {
  const double u0 = u.value();
  if (u0 <= 0.0) return Jet(0.0);
  if (u0 >= 1.0) return Jet(1.0);
  const Jet g0 = detail::flat_exp(u);
  const Jet g1 = detail::flat_exp(1.0 - u);
  return g0 / (g0 + g1);
}

/// Smooth transition chi: 1 on (-inf, 1], 0 on [4, inf).
inline Jet transition(const Jet& x) { return 1.0 - smooth_step((x - 1.0) / 3.0); }

/// Psi(l) = chi(l/a) - chi(4l/a). Supported in [a/4, 4a]; the dilates
/// Psi(4^-j l) telescope to one.
inline SmoothSymbol make_dyadic_bump(double a, int max_order = 8) {
  if (!(a > 0.0)) throw std::invalid_argument("make_dyadic_bump: a must be positive");
  return SmoothSymbol(
      "psi(a=" + std::to_string(a) + ")",
      [a](const Jet& x) { return transition(x * (1.0 / a)) - transition(x * (4.0 / a)); },
      Support{a / 4.0, 4.0 * a}, max_order);
}

/// Cutoff equal to one on supp Psi = [a/4, 4a], supported in [a/16, 16a].
inline SmoothSymbol make_bump_cutoff(double a, int max_order = 8) {
  if (!(a > 0.0)) throw std::invalid_argument("make_bump_cutoff: a must be positive");
  return SmoothSymbol(
      "psi_tilde(a=" + std::to_string(a) + ")",
      [a](const Jet& x) {
        return transition(x * (1.0 / (4.0 * a))) - transition(x * (16.0 / a));
      },
      Support{a / 16.0, 16.0 * a}, max_order);
}

/// l -> cutoff(l) / l.
inline SmoothSymbol make_reciprocal_cutoff(double a, int max_order = 8) {
  SmoothSymbol cut = make_bump_cutoff(a, max_order);
  const Support s = cut.support();
  return SmoothSymbol(
      "psi_breve(a=" + std::to_string(a) + ")",
      [cut, s](const Jet& x) {
        if (!s.contains(x.value())) return Jet(0.0);
        return cut.jet(x) / x;
      },
      s, max_order);
}

/// l -> cutoff(l) exp(l); the backward-heat factor on one dyadic block.
inline SmoothSymbol make_backward_heat_cutoff(double a, int max_order = 8) {
  SmoothSymbol cut = make_bump_cutoff(a, max_order);
  return SmoothSymbol(
      "psi_1(a=" + std::to_string(a) + ")",
      [cut](const Jet& x) { return cut.jet(x) * exp(x); }, cut.support(), max_order);
}

/// l -> s(c l).
inline SmoothSymbol dilate(const SmoothSymbol& s, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("dilate: factor must be positive");
  Support sup{s.support().lo / c, s.support().hi / c};
  return SmoothSymbol(
      s.name() + "(" + std::to_string(c) + "*.)",
      [s, c](const Jet& x) { return s.jet(x * c); }, sup, s.max_order());
}

inline SmoothSymbol multiply(const SmoothSymbol& f, const SmoothSymbol& g) {
  Support sup{std::max(f.support().lo, g.support().lo),
              std::min(f.support().hi, g.support().hi)};
  if (sup.lo > sup.hi) sup.hi = sup.lo;
  return SmoothSymbol(
      f.name() + "*" + g.name(), [f, g](const Jet& x) { return f.jet(x) * g.jet(x); },
      sup, std::min(f.max_order(), g.max_order()));
}

inline SmoothSymbol constant_symbol(double c) {
  return SmoothSymbol("const(" + std::to_string(c) + ")",
                      [c](const Jet&) { return Jet(c); }, Support{});
}

inline SmoothSymbol zero_symbol() {
  return SmoothSymbol("zero", [](const Jet&) { return Jet(0.0); }, Support{0.0, 1.0});
}

inline SmoothSymbol log_symbol() {
  return SmoothSymbol(
      "log", [](const Jet& x) { return log(x); },
      Support{0.0, std::numeric_limits<double>::infinity()});
}

/// Family of dilates Psi_j(l) = Psi(4^-j l), j in [j_min, j_max].
struct DyadicSymbolFamily {
  SmoothSymbol psi;
  double a = 1.0;
  int j_min = 0;
  int j_max = 0;

  SmoothSymbol block(int j) const { return dilate(psi, std::ldexp(1.0, -2 * j)); }

  double block_value(int j, double lambda) const {
    return psi(std::ldexp(lambda, -2 * j));
  }

  double partition_sum(double lambda) const {
    double s = 0.0;
    for (int j = j_min; j <= j_max; ++j) s += block_value(j, lambda);
    return s;
  }

  double square_sum(double lambda) const {
    double s = 0.0;
    for (int j = j_min; j <= j_max; ++j) {
      const double v = block_value(j, lambda);
      s += v * v;
    }
    return s;
  }

  /// Interval on which the truncated sum is exactly one.
  std::pair<double, double> covered_range() const {
    return {std::ldexp(a, 2 * j_min), std::ldexp(a, 2 * j_max)};
  }

  bool covers(double lambda_min, double lambda_max) const {
    const auto [lo, hi] = covered_range();
    return lo <= lambda_min && lambda_max <= hi;
  }

  int size() const { return j_max - j_min + 1; }
};

inline DyadicSymbolFamily make_family(double a, int j_min, int j_max, int max_order = 8) {
  if (j_min > j_max) throw std::invalid_argument("make_family: empty scale range");
  return DyadicSymbolFamily{make_dyadic_bump(a, max_order), a, j_min, j_max};
}

/// Smallest family whose partition of unity is exact on [lambda_min, lambda_max].
inline DyadicSymbolFamily covering_family(double a, double lambda_min, double lambda_max,
                                          int max_order = 8) {
  if (!(lambda_min > 0.0) || lambda_max < lambda_min)
    throw std::invalid_argument("covering_family: need 0 < lambda_min <= lambda_max");
  const int j_min = static_cast<int>(std::floor(std::log(lambda_min / a) / std::log(4.0)));
  const int j_max = static_cast<int>(std::ceil(std::log(lambda_max / a) / std::log(4.0)));
  return make_family(a, j_min, j_max, max_order);
}

/// sum_{m=0}^{N} int |d^m Psi(x)| <x>^{m-1} dx. The support is split at the
/// sign changes of d^m Psi so each piece is a smooth Gauss-Kronrod integral;
/// integrating |.| directly stalls adaptive refinement at the kinks.
inline double psi_norm(const SmoothSymbol& s, int order) {
  if (order < 0 || order > s.max_order())
    throw std::out_of_range("psi_norm: order exceeds the derivative tower of " + s.name());
  if (!s.support().bounded()) throw std::invalid_argument("psi_norm: unbounded support");
  constexpr int kSamples = 2000;
  const double lo = s.support().lo;
  const double hi = s.support().hi;
  double total = 0.0;
  for (int m = 0; m <= order; ++m) {
    auto d = [&](double x) { return s.derivative(x, m); };
    std::vector<double> breaks{lo};
    double x_prev = lo;
    double d_prev = d(lo);
    for (int k = 1; k <= kSamples; ++k) {
      const double x = lo + (hi - lo) * k / kSamples;
      const double dx = d(x);
      if (dx == 0.0 && d_prev != 0.0) {
        breaks.push_back(x);
      } else if (d_prev * dx < 0.0) {
        std::uintmax_t iters = 100;
        const auto r = boost::math::tools::toms748_solve(d, x_prev, x, d_prev, dx,
                                                         boost::math::tools::eps_tolerance<double>(50), iters);
        breaks.push_back(0.5 * (r.first + r.second));
      }
      x_prev = x;
      d_prev = dx;
    }
    breaks.push_back(hi);
    auto weighted = [&](double x) { return d(x) * std::pow(std::sqrt(1.0 + x * x), m - 1); };
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k)
      total += std::abs(boost::math::quadrature::gauss_kronrod<double, 61>::integrate(weighted, breaks[k],
                                                                                      breaks[k + 1], 10, 1e-12));
  }
  return total;
}

/// Log-spaced sample grid on (0, inf).
struct LogGrid {
  double lo = 1e-3;
  double hi = 1e3;
  int count = 2001;

  std::vector<double> nodes() const {
    if (!(lo > 0.0) || !(hi > lo) || count < 2)
      throw std::invalid_argument("LogGrid: need 0 < lo < hi and count >= 2");
    std::vector<double> x(static_cast<std::size_t>(count));
    const double step = std::log(hi / lo) / (count - 1);
    for (int i = 0; i < count; ++i) x[i] = lo * std::exp(step * i);
    return x;
  }
};

struct MikhlinEstimate {
  double value = 0.0;             ///< max over grid and k <= N
  std::vector<double> per_order;  ///< max over grid for each k
  LogGrid grid;
};

/// Sampled lower bound of sup_{xi, k <= N} |xi^k d^k m(xi)|.
inline MikhlinEstimate mikhlin_seminorm(const SmoothSymbol& m, int order, LogGrid grid = {}) {
  if (order < 0 || order > m.max_order())
    throw std::out_of_range("mikhlin_seminorm: order exceeds derivative tower");
  MikhlinEstimate est;
  est.grid = grid;
  est.per_order.assign(static_cast<std::size_t>(order) + 1, 0.0);
  for (double xi : grid.nodes()) {
    const Jet j = m.jet_at(xi);
    double power = 1.0;
    for (int k = 0; k <= order; ++k) {
      const double v = std::abs(power * j.derivative(k));
      est.per_order[k] = std::max(est.per_order[k], v);
      power *= xi;
    }
  }
  est.value = *std::max_element(est.per_order.begin(), est.per_order.end());
  return est;
}

/// r_m(t) = r_0(2^m t), r_0 = 1 on [0, 1/2], -1 on (1/2, 1), period 1.
inline int rademacher(int m, double t) {
  const double s = std::ldexp(t, m);
  const double frac = s - std::floor(s);
  return frac <= 0.5 ? 1 : -1;
}

enum class Sign { kPlus, kMinus };

/// m^+-(t, xi) = sum_{j >= 0} r_j(t) Psi_{+-j}(xi), truncated to the family.
inline SmoothSymbol randomized_symbol(double t, const DyadicSymbolFamily& family, Sign sign) {
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("randomized_symbol: t must lie in [0,1]");
  std::vector<std::pair<double, double>> terms;  // (weight r_j, dilation 4^{-(+-j)})
  if (sign == Sign::kPlus) {
    for (int j = std::max(0, family.j_min); j <= family.j_max; ++j)
      terms.emplace_back(rademacher(j, t), std::ldexp(1.0, -2 * j));
  } else {
    for (int j = std::max(0, -family.j_max); j <= -family.j_min; ++j)
      terms.emplace_back(rademacher(j, t), std::ldexp(1.0, 2 * j));
  }
  const SmoothSymbol psi = family.psi;
  return SmoothSymbol(
      std::string(sign == Sign::kPlus ? "m+" : "m-") + "(t=" + std::to_string(t) + ")",
      [psi, terms](const Jet& x) {
        Jet acc(0.0);
        for (const auto& [w, c] : terms) acc += w * psi.jet(x * c);
        return acc;
      },
      Support{0.0, std::numeric_limits<double>::infinity()}, psi.max_order());
}

/// Rademacher sum over the full family range, r_{j - j_min} attached to Psi_j.
inline SmoothSymbol shifted_randomized_symbol(double t, const DyadicSymbolFamily& family) {
  const SmoothSymbol psi = family.psi;
  const int j_min = family.j_min;
  const int j_max = family.j_max;
  return SmoothSymbol(
      "m(t=" + std::to_string(t) + ")",
      [psi, j_min, j_max, t](const Jet& x) {
        Jet acc(0.0);
        for (int j = j_min; j <= j_max; ++j)
          acc += static_cast<double>(rademacher(j - j_min, t)) * psi.jet(x * std::ldexp(1.0, -2 * j));
        return acc;
      },
      Support{0.0, std::numeric_limits<double>::infinity()}, psi.max_order());
}

struct KhintchineResult {
  double lp_norm = 0.0;  ///< || sum a_m r_m ||_{L^p[0,1]}
  double l2_norm = 0.0;  ///< (sum |a_m|^2)^{1/2}
  double ratio_low = 0.0;   ///< lp_norm / l2_norm
  double ratio_high = 0.0;  ///< l2_norm / lp_norm
};

inline constexpr std::size_t kMaxKhintchineLength = 20;

/// Exact L^p norm of a Rademacher sum: the sum is constant on the 2^len
/// dyadic pieces of [0,1], so evaluating at piece midpoints integrates exactly.
inline KhintchineResult khintchine_check(std::span<const double> coeffs, double p) {
  if (!(p >= 1.0) || !std::isfinite(p))
    throw std::invalid_argument("khintchine_check: p must lie in [1, inf)");
  if (coeffs.empty()) throw std::invalid_argument("khintchine_check: empty coefficient vector");
  if (coeffs.size() > kMaxKhintchineLength)
    throw std::invalid_argument("khintchine_check: more than 20 coefficients (2^20 piece cap)");
  const int len = static_cast<int>(coeffs.size());
  const long pieces = 1L << len;
  double acc = 0.0;
  for (long k = 0; k < pieces; ++k) {
    const double t = (static_cast<double>(k) + 0.5) / static_cast<double>(pieces);
    double s = 0.0;
    for (int m = 0; m < len; ++m) s += coeffs[m] * rademacher(m, t);
    acc += std::pow(std::abs(s), p);
  }
  KhintchineResult r;
  r.lp_norm = std::pow(acc / static_cast<double>(pieces), 1.0 / p);
  double sq = 0.0;
  for (double c : coeffs) sq += c * c;
  r.l2_norm = std::sqrt(sq);
  r.ratio_low = r.lp_norm / r.l2_norm;
  r.ratio_high = r.l2_norm / r.lp_norm;
  return r;
}

}  // namespace hslab
