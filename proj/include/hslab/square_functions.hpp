#pragma once

// Littlewood-Paley and heat-flow square functions, dyadic and continuous
// Besov norms, and the almost-orthogonality matrix between spectral blocks
// and heat localizations.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "hslab/heat_flow.hpp"
#include "hslab/symbols.hpp"

namespace hslab {

enum class HeatVariant {
  kGradient,        ///< Q_t = sqrt(t) grad S(t)
  kTimeDerivative,  ///< bold Q_t = t Delta S(t)
};

namespace detail {

inline Field localize(const HeatEvolution& ev, HeatVariant v, double t) {
  return v == HeatVariant::kGradient ? ev.q(t) : ev.bold_q(t);
}

inline Field block_from_coefficients(const DirichletProblem& p, const DyadicSymbolFamily& family, int j,
                                     const Eigen::MatrixXd& coeffs, double weight) {
  Eigen::MatrixXd c = coeffs;
  const Eigen::VectorXd& lam = p.spectrum.eigenvalues();
  for (Index i = 0; i < c.rows(); ++i) c.row(i) *= family.block_value(j, lam[i]);
  return {p.spectrum.synthesize(c), weight};
}

}  // namespace detail

/// Pointwise (sum_j |Delta_j f|^2)^{1/2}; Euclidean over components.
inline Field lp_square_function(const DirichletProblem& p, const DyadicSymbolFamily& family, const Field& f) {
  const Eigen::MatrixXd coeffs = p.spectrum.coefficients(f.values);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(f.points());
  for (int j = family.j_min; j <= family.j_max; ++j)
    acc += detail::block_from_coefficients(p, family, j, coeffs, f.cell_weight).values.rowwise().squaredNorm();
  return {acc.cwiseSqrt(), f.cell_weight};
}

/// [min, max] of sum_j Psi_j(l)^2 over the spectrum: the p = 2 window for
/// ||SF(f)||_2^2 / ||f||_2^2.
inline std::pair<double, double> square_sum_envelope(const SpectralDecomposition& sd,
                                                     const DyadicSymbolFamily& family) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Index i = 0; i < sd.size(); ++i) {
    const double s = family.square_sum(sd.eigenvalues()[i]);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return {lo, hi};
}

struct ScaleRange {
  int lo = 0;
  int hi = 0;
};

/// Scales k whose times 4^-k span [t_min, t_max].
inline ScaleRange dyadic_range(const TimeGrid& grid) {
  return {static_cast<int>(std::floor(-std::log(grid.t_max()) / std::log(4.0))),
          static_cast<int>(std::ceil(-std::log(grid.t_min()) / std::log(4.0)))};
}

/// (sum_k ||Q_{4^-k} f||_p^2)^{1/2}.
inline double besov_dyadic(const DirichletProblem& p, const Field& f, double exponent, ScaleRange k,
                           HeatVariant variant = HeatVariant::kGradient) {
  if (k.lo > k.hi) throw std::invalid_argument("besov_dyadic: empty k-range");
  const HeatEvolution ev(p, f);
  double acc = 0.0;
  for (int s = k.lo; s <= k.hi; ++s) {
    const double n = lp_norm(detail::localize(ev, variant, std::ldexp(1.0, -2 * s)), exponent);
    acc += n * n;
  }
  return std::sqrt(acc);
}

struct BesovEstimate {
  double value = 0.0;          ///< (sum_t w_t ||Q_t f||_p^2)^{1/2} over the grid
  double squared = 0.0;        ///< value^2
  double tail_below = 0.0;     ///< L^2 mass of the integral on (0, t_min), exact per mode
  double tail_above = 0.0;     ///< L^2 mass on (t_max, inf)
  double error_bar() const { return tail_below + tail_above; }
};

namespace detail {

// Per-mode integrals of ||.||_2^2 outside [t_min, t_max].
inline std::pair<double, double> heat_tails(const DirichletProblem& p, const Eigen::MatrixXd& coeffs, double weight,
                                            const TimeGrid& grid, HeatVariant v) {
  double below = 0.0;
  double above = 0.0;
  for (Index i = 0; i < coeffs.rows(); ++i) {
    const double c2 = weight * coeffs.row(i).squaredNorm();
    const double lo = grid.t_min() * p.spectrum.eigenvalues()[i];
    const double hi = grid.t_max() * p.spectrum.eigenvalues()[i];
    if (v == HeatVariant::kGradient) {
      below += c2 * (-std::expm1(-2 * lo)) / 2;
      above += c2 * std::exp(-2 * hi) / 2;
    } else {
      below += c2 * (1.0 - (1.0 + 2 * lo) * std::exp(-2 * lo)) / 4;
      above += c2 * (1.0 + 2 * hi) * std::exp(-2 * hi) / 4;
    }
  }
  return {below, above};
}

}  // namespace detail

/// (int ||Q_t f||_p^2 dt/t)^{1/2} by log-trapezoid over the grid, with the
/// per-mode tail mass attached.
inline BesovEstimate besov_continuous(const DirichletProblem& p, const Field& f, double exponent,
                                      const TimeGrid& grid, HeatVariant variant = HeatVariant::kGradient) {
  const HeatEvolution ev(p, f);
  BesovEstimate est;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double n = lp_norm(detail::localize(ev, variant, grid.nodes[k]), exponent);
    est.squared += grid.weights[k] * n * n;
  }
  est.value = std::sqrt(est.squared);
  std::tie(est.tail_below, est.tail_above) = detail::heat_tails(p, ev.coefficients(), f.cell_weight, grid, variant);
  return est;
}

/// Pointwise (int |Q_t f|^2 dt/t)^{1/2}. The gradient variant lives on the
/// staggered cells.
inline Field heat_square_function(const DirichletProblem& p, const Field& f, const TimeGrid& grid,
                                  HeatVariant variant = HeatVariant::kGradient) {
  const HeatEvolution ev(p, f);
  Eigen::VectorXd acc;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Eigen::VectorXd sq = detail::localize(ev, variant, grid.nodes[k]).values.rowwise().squaredNorm();
    if (acc.size() == 0) acc = Eigen::VectorXd::Zero(sq.size());
    acc += grid.weights[k] * sq;
  }
  return {acc.cwiseSqrt(), f.cell_weight};
}

/// R(k, j) = max over the corpus of ||Q_{4^-k} Delta_j f||_p / ||Delta_j f||_p.
struct OrthogonalityMatrix {
  ScaleRange j;
  ScaleRange k;
  double exponent = 2.0;
  Eigen::MatrixXd ratios;  ///< rows k - k.lo, cols j - j.lo; NaN when absent

  double at(int kk, int jj) const { return ratios(kk - k.lo, jj - j.lo); }

  /// Smallest C with R(k,j) <= C 2^{-|j-k|} for |j-k| <= max_offset.
  double decay_constant(int max_offset) const {
    double c = 0.0;
    for (int kk = k.lo; kk <= k.hi; ++kk)
      for (int jj = j.lo; jj <= j.hi; ++jj) {
        const double r = at(kk, jj);
        if (std::isnan(r) || std::abs(jj - kk) > max_offset) continue;
        c = std::max(c, r * std::ldexp(1.0, std::abs(jj - kk)));
      }
    return c;
  }

  /// Least-squares slope of log2 max_{|j-k|=d} R against d.
  double fitted_slope(int max_offset) const {
    std::vector<double> xs, ys;
    for (int d = 0; d <= max_offset; ++d) {
      double best = 0.0;
      for (int kk = k.lo; kk <= k.hi; ++kk)
        for (int jj = j.lo; jj <= j.hi; ++jj) {
          const double r = at(kk, jj);
          if (!std::isnan(r) && std::abs(jj - kk) == d) best = std::max(best, r);
        }
      if (best > 0.0) {
        xs.push_back(d);
        ys.push_back(std::log2(best));
      }
    }
    if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
};

inline OrthogonalityMatrix almost_orthogonality_matrix(const DirichletProblem& p, const DyadicSymbolFamily& family,
                                                       const std::vector<Field>& corpus, ScaleRange j, ScaleRange k,
                                                       double exponent) {
  OrthogonalityMatrix m;
  m.j = j;
  m.k = k;
  m.exponent = exponent;
  m.ratios = Eigen::MatrixXd::Constant(k.hi - k.lo + 1, j.hi - j.lo + 1, std::numeric_limits<double>::quiet_NaN());
  constexpr double kNegligible = 1e-12;
  for (const Field& f : corpus) {
    const Eigen::MatrixXd coeffs = p.spectrum.coefficients(f.values);
    const double scale = lp_norm(f, exponent);
    for (int jj = j.lo; jj <= j.hi; ++jj) {
      const Field block = detail::block_from_coefficients(p, family, jj, coeffs, f.cell_weight);
      const double denom = lp_norm(block, exponent);
      if (!(denom > kNegligible * scale)) continue;
      const HeatEvolution ev(p, block);
      for (int kk = k.lo; kk <= k.hi; ++kk) {
        const double r = lp_norm(ev.q(std::ldexp(1.0, -2 * kk)), exponent) / denom;
        double& slot = m.ratios(kk - k.lo, jj - j.lo);
        slot = std::isnan(slot) ? r : std::max(slot, r);
      }
    }
  }
  return m;
}

/// Ratios of one corpus against a reference norm, summarized.
struct EquivalenceMeasurement {
  double exponent = 2.0;
  std::string corpus;
  std::vector<double> ratios;
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  double drift = std::numeric_limits<double>::quiet_NaN();  ///< relative change under grid refinement

  static EquivalenceMeasurement summarize(double p, std::string corpus_id, std::vector<double> ratios) {
    if (ratios.empty()) throw std::invalid_argument("EquivalenceMeasurement: empty corpus");
    EquivalenceMeasurement m;
    m.exponent = p;
    m.corpus = std::move(corpus_id);
    m.ratios = std::move(ratios);
    std::vector<double> sorted = m.ratios;
    std::sort(sorted.begin(), sorted.end());
    m.min = sorted.front();
    m.max = sorted.back();
    const std::size_t n = sorted.size();
    m.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return m;
  }

  /// Two-sided constant: ratios lie in [1/C, C].
  double two_sided_constant() const { return std::max(max, 1.0 / min); }

  /// Largest relative change of min and max against a coarser measurement.
  double drift_against(const EquivalenceMeasurement& coarse) const {
    return std::max(std::abs(min - coarse.min) / coarse.min, std::abs(max - coarse.max) / coarse.max);
  }
};

struct RademacherReport {
  double square_function_norm = 0.0;  ///< ||(sum_j |Delta_j f|^2)^{1/2}||_p
  double aggregate = 0.0;             ///< || ||m(t,-Delta) f||_{L^2_t} ||_{L^p_x}
  double mean_lp = 0.0;               ///< (int ||m(t,-Delta) f||_p^p dt)^{1/p}
  double max_multiplier_ratio = 0.0;  ///< max_t ||m(t,-Delta) f||_p / ||f||_p
  int samples = 0;
};

/// Randomized-symbol route to the square function. The Rademacher sum uses
/// r_{j - j_min} on block j; t runs over the midpoints of the 2^J dyadic
/// pieces (J = number of blocks), which integrates in t exactly.
inline RademacherReport rademacher_equivalence(const DirichletProblem& p, const DyadicSymbolFamily& family,
                                               const Field& f, double exponent) {
  const int blocks = family.size();
  if (blocks > static_cast<int>(kMaxKhintchineLength))
    throw std::invalid_argument("rademacher_equivalence: too many blocks for exact dyadic integration");
  const Eigen::MatrixXd coeffs = p.spectrum.coefficients(f.values);
  std::vector<Eigen::MatrixXd> pieces;
  for (int j = family.j_min; j <= family.j_max; ++j)
    pieces.push_back(detail::block_from_coefficients(p, family, j, coeffs, f.cell_weight).values);

  const long samples = 1L << blocks;
  const double fnorm = lp_norm(f, exponent);
  Eigen::VectorXd time_l2 = Eigen::VectorXd::Zero(f.points());
  double mean_p = 0.0;
  RademacherReport r;
  for (long s = 0; s < samples; ++s) {
    const double t = (static_cast<double>(s) + 0.5) / static_cast<double>(samples);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(f.points(), f.components());
    for (int b = 0; b < blocks; ++b) g += static_cast<double>(rademacher(b, t)) * pieces[static_cast<std::size_t>(b)];
    time_l2 += g.rowwise().squaredNorm();
    const double n = lp_norm(Field{g, f.cell_weight}, exponent);
    mean_p += std::pow(n, exponent);
    r.max_multiplier_ratio = std::max(r.max_multiplier_ratio, fnorm > 0 ? n / fnorm : 0.0);
  }
  time_l2 /= static_cast<double>(samples);
  r.aggregate = lp_norm(Field{time_l2.cwiseSqrt(), f.cell_weight}, exponent);
  r.mean_lp = std::pow(mean_p / static_cast<double>(samples), 1.0 / exponent);
  r.square_function_norm = lp_norm(lp_square_function(p, family, f), exponent);
  r.samples = static_cast<int>(samples);
  return r;
}

/// ||S(4^-k - 4^-j) Delta_j f - S(4^-k) Psi_1(4^-j .) Psi(4^-j .) f||_2 / ||f||_2;
/// for k > j the left side is a backward heat flow, well defined on a
/// bounded spectrum.
inline double backheat_residual(const DirichletProblem& p, const DyadicSymbolFamily& family, int j, int k,
                                const Field& f) {
  const double tj = std::ldexp(1.0, -2 * j);
  const double tk = std::ldexp(1.0, -2 * k);
  const SmoothSymbol psi1 = make_backward_heat_cutoff(family.a, family.psi.max_order());
  const Field lhs = apply_multiplier(
      p.spectrum, [&](double l) { return std::exp(-(tk - tj) * l) * family.block_value(j, l); }, f);
  const Field rhs = apply_multiplier(
      p.spectrum, [&](double l) { return std::exp(-tk * l) * psi1(tj * l) * family.psi(tj * l); }, f);
  const double denom = lp_norm(f, 2.0);
  return lp_norm(Field{lhs.values - rhs.values, f.cell_weight}, 2.0) / (denom > 0 ? denom : 1.0);
}

}  // namespace hslab
