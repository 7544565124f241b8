#pragma once

// Named experiment suites. Each suite returns records in a fixed order;
// parallel work writes into indexed slots so payloads do not depend on the
// number of jobs.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "hslab/corpus.hpp"
#include "hslab/dhs.hpp"
#include "hslab/harness/config.hpp"
#include "hslab/harness/report.hpp"
#include "hslab/heat_flow.hpp"
#include "hslab/spectral.hpp"
#include "hslab/square_functions.hpp"
#include "hslab/symbols.hpp"

namespace hslab::harness {

struct RunOptions {
  int jobs = 1;
};

/// Acceptance criterion -> (suite, record name).
struct CriterionRecord {
  int criterion;
  const char* suite;
  const char* record;
};

inline const std::vector<CriterionRecord>& criterion_records() {
  static const std::vector<CriterionRecord> map{
      {1, "identities", "heat_identity_p2"},           {2, "identities", "heat_identity_bold"},
      {3, "dhs-convergence", "dhs_oracle_convergence"}, {4, "dhs-convergence", "dbar_flatness"},
      {5, "orthogonality", "almost_orthogonality"},     {6, "equivalences", "besov_window"},
      {7, "equivalences", "square_function_ratio"},            {8, "resolvent", "resolvent_growth"},
      {9, "heatflow-bounds", "hilbert_uniformity"},     {10, "heatflow-bounds", "gaussian_domination"},
      {11, "khintchine", "khintchine"},                 {12, "identities", "factorization"}};
  return map;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class Fn>
void parallel_for(int jobs, std::size_t n, Fn&& fn) {
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline TimeGrid time_grid(const ExperimentConfig& c, const DirichletProblem& p) {
  return TimeGrid::for_spectrum(p.spectrum.lambda_min(), p.spectrum.lambda_max(), c.time_grid.lo_factor,
                                c.time_grid.hi_factor, c.time_grid.ratio);
}

inline DyadicSymbolFamily family_for(const ExperimentConfig& c, const DirichletProblem& p) {
  return covering_family(c.symbol.a, p.spectrum.lambda_min(), p.spectrum.lambda_max(), c.symbol.max_order);
}

inline std::vector<Field> fields_of(const std::vector<CorpusMember>& corpus) {
  std::vector<Field> out;
  for (const auto& m : corpus) out.push_back(m.field);
  return out;
}

inline std::vector<double> geometric(double lo, double hi, int count) {
  std::vector<double> out;
  for (int k = 0; k < count; ++k)
    out.push_back(count == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(k) / (count - 1)));
  return out;
}

inline std::string exponent_key(double p) {
  if (std::isinf(p)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", p);
  return buf;
}

inline double slope(const std::vector<double>& xs, const std::vector<double>& ys) {
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

}  // namespace detail

// ---------------------------------------------------------------- identities

inline std::vector<Record> run_identities(const ExperimentConfig& c, const RunOptions& opt,
                                          std::map<std::string, double>& seconds) {
  Record p2{"heat_identity_p2", "identities"};
  Record bold{"heat_identity_bold", "identities"};
  Record fact{"factorization", "identities"};
  p2.thresholds["tolerance"] = bold.thresholds["tolerance"] = c.identities.tolerance;
  fact.thresholds["tolerance"] = c.identities.factorization_tolerance;
  double worst_p2 = 0.0, worst_bold = 0.0, worst_fact = 0.0, bar_p2 = 0.0, bar_bold = 0.0;
  double identity_time = 0.0;
  std::size_t fields = 0;

  for (const auto& nd : c.domains) {
    auto t0 = detail::Clock::now();
    const DirichletProblem p(build_domain(nd.descriptor));
    const auto corpus = generate_corpus(p, c.corpus);
    const TimeGrid grid = detail::time_grid(c, p);
    const double setup = detail::seconds_since(t0);

    struct Row {
      double err_p2, bar_p2, err_bold, bar_bold;
    };
    std::vector<Row> rows(corpus.size());
    t0 = detail::Clock::now();
    detail::parallel_for(opt.jobs, corpus.size(), [&](std::size_t i) {
      const Field& f = corpus[i].field;
      const double f2 = std::pow(lp_norm(f, 2.0), 2);
      const BesovEstimate g = besov_continuous(p, f, 2.0, grid, HeatVariant::kGradient);
      rows[i].err_p2 = std::abs(2.0 * g.squared - f2) / f2;
      rows[i].bar_p2 = 2.0 * g.error_bar() / f2;
    });
    identity_time += setup + detail::seconds_since(t0);
    detail::parallel_for(opt.jobs, corpus.size(), [&](std::size_t i) {
      const Field& f = corpus[i].field;
      const double f2 = std::pow(lp_norm(f, 2.0), 2);
      const BesovEstimate b = besov_continuous(p, f, 2.0, grid, HeatVariant::kTimeDerivative);
      rows[i].err_bold = std::abs(4.0 * b.squared - f2) / f2;
      rows[i].bar_bold = 4.0 * b.error_bar() / f2;
    });

    double d_p2 = 0, d_bold = 0;
    for (const auto& r : rows) {
      d_p2 = std::max(d_p2, r.err_p2);
      d_bold = std::max(d_bold, r.err_bold);
      bar_p2 = std::max(bar_p2, r.bar_p2);
      bar_bold = std::max(bar_bold, r.bar_bold);
    }
    worst_p2 = std::max(worst_p2, d_p2);
    worst_bold = std::max(worst_bold, d_bold);
    fields += corpus.size();
    p2.values["max_rel_error." + nd.name] = d_p2;
    bold.values["max_rel_error." + nd.name] = d_bold;
    const json row{{"domain", nd.name},
                   {"dofs", p.size()},
                   {"fields", corpus.size()},
                   {"time_nodes", grid.size()},
                   {"t_min", grid.t_min()},
                   {"t_max", grid.t_max()}};
    json r1 = row, r2 = row;
    r1["max_rel_error"] = d_p2;
    r2["max_rel_error"] = d_bold;
    p2.table.push_back(r1);
    bold.table.push_back(r2);

    const auto times = detail::geometric(1.0 / p.spectrum.lambda_max(), 10.0 / p.spectrum.lambda_min(),
                                         c.identities.factorization_times);
    const std::size_t nf = std::min<std::size_t>(corpus.size(), static_cast<std::size_t>(c.identities.factorization_fields));
    double d_fact = 0.0;
    for (double t : times)
      for (std::size_t i = 0; i < nf; ++i) d_fact = std::max(d_fact, factorization_check(p, t, corpus[i].field));
    worst_fact = std::max(worst_fact, d_fact);
    fact.values["max_residual." + nd.name] = d_fact;
    fact.table.push_back({{"domain", nd.name}, {"times", times}, {"fields", nf}, {"max_residual", d_fact}});
  }

  p2.values["max_rel_error"] = worst_p2;
  p2.values["max_truncation_bar"] = bar_p2;
  p2.values["fields"] = static_cast<double>(fields);
  bold.values["max_rel_error"] = worst_bold;
  bold.values["max_truncation_bar"] = bar_bold;
  bold.values["fields"] = static_cast<double>(fields);
  fact.values["max_residual"] = worst_fact;
  p2.pass = worst_p2 <= c.identities.tolerance;
  bold.pass = worst_bold <= c.identities.tolerance;
  fact.pass = worst_fact <= c.identities.factorization_tolerance;
  p2.notes.push_back("||f||^2 against 2 int ||Q_t f||^2 dt/t on the configured time grid; truncation bar is the exact per-mode mass outside the grid");
  seconds["heat_identity_p2"] = identity_time;
  return {p2, bold, fact};
}

// ----------------------------------------------------------- dhs-convergence

inline std::vector<Record> run_dhs(const ExperimentConfig& c, const RunOptions& opt) {
  const DhsConfig& dc = c.dhs;
  const DirichletProblem p(build_domain(dc.domain.descriptor));
  const SmoothSymbol psi = make_dyadic_bump(c.symbol.a, c.symbol.max_order);
  const AlmostAnalyticExtension ext = make_extension(psi, c.symbol.order);
  const double h2 = std::ldexp(1.0, -2 * dc.scale_exponent);
  const Eigen::VectorXd& lam = p.spectrum.eigenvalues();

  // The quadrature operator is a sum of resolvents of A, hence diagonal in
  // A's eigenbasis: one probe with unit spectral coefficients returns all of
  // its eigenvalues, and the 2->2 error is their largest deviation.
  const Field probe{p.spectrum.synthesize(Eigen::MatrixXd(Eigen::MatrixXd::Ones(p.size(), 1))), p.cell_weight()};
  auto eigen_of = [&](const Field& out) -> Eigen::VectorXd { return p.spectrum.coefficients(out.values).col(0); };
  Eigen::VectorXd exact(p.size());
  for (Index i = 0; i < p.size(); ++i) exact[i] = psi(h2 * lam[i]);
  const double scale = exact.cwiseAbs().maxCoeff();

  Record conv{"dhs_oracle_convergence", "dhs-convergence"};
  conv.thresholds["tolerance"] = dc.tolerance;
  conv.values["order"] = c.symbol.order;
  conv.values["h2"] = h2;
  QuadratureSpec q = dc.base;
  std::vector<double> errors;
  for (int r = 0; r <= dc.refinements; ++r) {
    const Eigen::VectorXd d = eigen_of(dhs_apply(ext, p.laplacian, h2, probe, q, opt.jobs));
    const double e = (d - exact).cwiseAbs().maxCoeff() / scale;
    errors.push_back(e);
    conv.values["error.level" + std::to_string(r)] = e;
    conv.table.push_back({{"level", r},
                          {"x_nodes", q.x_nodes},
                          {"y_nodes", q.y_nodes},
                          {"band_nodes", q.band_nodes},
                          {"y_min_factor", q.y_min_factor},
                          {"relative_operator_error", e}});
    if (r < dc.refinements) q = q.refined();
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < errors.size(); ++i) decreasing = decreasing && errors[i] < errors[i - 1];
  conv.values["final_error"] = errors.back();
  conv.values["strictly_decreasing"] = decreasing ? 1.0 : 0.0;
  conv.pass = decreasing && errors.back() <= dc.tolerance;
  conv.notes.push_back("relative 2->2 operator error against Psi(h^2 lambda_i); the final level is the reference quadrature");

  Record flat{"dbar_flatness", "dhs-convergence"};
  flat.thresholds["slope_margin"] = dc.slope_margin;
  flat.pass = true;
  const auto ys = detail::geometric(dc.flatness_y_lo, dc.flatness_y_hi, dc.flatness_samples);
  const Support sup = psi.support();
  for (int n : dc.flatness_orders) {
    const AlmostAnalyticExtension e = make_extension(psi, n);
    std::vector<std::vector<double>> towers;
    constexpr int kXSamples = 2001;
    for (int k = 1; k < kXSamples; ++k) towers.push_back(e.tower(sup.lo + (sup.hi - sup.lo) * k / kXSamples));
    std::vector<double> lx, ly;
    for (double y : ys) {
      double m = 0.0;
      for (int k = 1; k < kXSamples; ++k)
        m = std::max(m, std::abs(e.dbar(sup.lo + (sup.hi - sup.lo) * k / kXSamples, y, towers[static_cast<std::size_t>(k - 1)])));
      lx.push_back(std::log(y));
      ly.push_back(std::log(m));
    }
    const double s = detail::slope(lx, ly);
    flat.values["slope.N" + std::to_string(n)] = s;
    flat.thresholds["min_slope.N" + std::to_string(n)] = n - dc.slope_margin;
    flat.pass = flat.pass && s >= n - dc.slope_margin;
  }

  // Symbol supported beyond the spectrum of -h^2 Delta: the integral must vanish.
  Record disjoint{"dhs_disjoint_support", "dhs-convergence"};
  {
    const double h2_far = c.symbol.a / (8.0 * lam[lam.size() - 1]);
    const Field out = dhs_apply(ext, p.laplacian, h2_far, probe, QuadratureSpec{}, opt.jobs);
    disjoint.values["relative_output"] = lp_norm(out, 2.0) / lp_norm(probe, 2.0);
    disjoint.thresholds["max"] = 1e-6;
    disjoint.pass = disjoint.values["relative_output"] <= 1e-6;
  }

  // dhs(Psi) dhs(Psi) against dhs(Psi^2).
  Record product{"dhs_product_law", "dhs-convergence"};
  {
    const AlmostAnalyticExtension sq = make_extension(multiply(psi, psi), c.symbol.order);
    const Field once = dhs_apply(ext, p.laplacian, h2, probe, QuadratureSpec{}, opt.jobs);
    const Field twice = dhs_apply(ext, p.laplacian, h2, once, QuadratureSpec{}, opt.jobs);
    const Field direct = dhs_apply(sq, p.laplacian, h2, probe, QuadratureSpec{}, opt.jobs);
    const double e = (eigen_of(twice) - eigen_of(direct)).cwiseAbs().maxCoeff() / scale;
    product.values["relative_operator_error"] = e;
    product.thresholds["max"] = 1e-3;
    product.pass = e <= 1e-3;
  }

  // Corpus p->p ratios of the DHS operator against ||Psi||_{N+1}.
  Record bound{"dhs_lp_bound", "dhs-convergence"};
  bound.check = false;
  {
    const auto corpus = generate_corpus(p, c.corpus);
    Eigen::MatrixXd stacked(p.size(), 0);
    for (const auto& m : corpus) {
      stacked.conservativeResize(Eigen::NoChange, stacked.cols() + m.field.components());
      stacked.rightCols(m.field.components()) = m.field.values;
    }
    const double norm_n1 = dhs_norm_bound(ext);
    bound.values["psi_norm"] = norm_n1;
    if (stacked.cols() > 0) {
      const Field out = dhs_apply(ext, p.laplacian, h2, Field{stacked, p.cell_weight()}, QuadratureSpec{}, opt.jobs);
      for (double e : c.p_list) {
        double worst = 0.0;
        for (Index k = 0; k < stacked.cols(); ++k)
          worst = std::max(worst, lp_norm(Field{out.values.col(k), p.cell_weight()}, e) /
                                      lp_norm(Field{stacked.col(k), p.cell_weight()}, e));
        bound.values["ratio.p" + detail::exponent_key(e)] = worst;
        bound.values["c.p" + detail::exponent_key(e)] = worst / norm_n1;
      }
    }
    bound.notes.push_back("corpus lower bounds for ||Psi(-h^2 Delta)||_{p->p}; c = ratio / ||Psi||_{N+1}");
  }

  // Laplace-transform resolvent along a ray against the exact resolvent.
  Record laplace{"laplace_resolvent", "dhs-convergence"};
  {
    const DirichletProblem small(build_domain(IntervalSpec{1.0, 50}));
    Field f = small.zero_field();
    for (Index i = 0; i < small.size(); ++i) f.values(i, 0) = std::sin(0.3 * static_cast<double>(i)) + 0.5;
    auto rel = [&](Complex z, double phi) {
      const ComplexField a = laplace_resolvent(small.spectrum, z, f, phi);
      const ComplexField b = exact_resolvent(small.spectrum, z, f);
      return (a.values - b.values).norm() / b.values.norm();
    };
    laplace.values["error.z1"] = rel(1.0, 0.0);
    laplace.values["error.z3pi4"] = rel(std::polar(1.0, 3.0 * std::numbers::pi / 4.0), -3.0 * std::numbers::pi / 8.0);
    bool rejected = false;
    try {
      (void)laplace_resolvent(small.spectrum, Complex(-1.0, 0.0), f, 0.0);
    } catch (const std::invalid_argument&) {
      rejected = true;
    }
    laplace.values["theta_pi_rejected"] = rejected ? 1.0 : 0.0;
    laplace.thresholds["error.z1"] = 1e-6;
    laplace.thresholds["error.z3pi4"] = 1e-5;
    laplace.pass = laplace.values["error.z1"] <= 1e-6 && laplace.values["error.z3pi4"] <= 1e-5 && rejected;
    laplace.notes.push_back("z = e^{3 i pi/4} uses phi = -3 pi/8 so that 2|theta + phi| < pi holds strictly");
  }
  return {conv, flat, disjoint, product, bound, laplace};
}

// ------------------------------------------------------------- orthogonality

inline std::vector<Record> run_orthogonality(const ExperimentConfig& c, const RunOptions&) {
  const OrthogonalityConfig& oc = c.orthogonality;
  const DirichletProblem p(build_domain(oc.domain.descriptor));
  const auto corpus = detail::fields_of(generate_corpus(p, c.corpus));
  const DyadicSymbolFamily family = detail::family_for(c, p);
  const ScaleRange j{family.j_min, family.j_max};
  const ScaleRange k{family.j_min - oc.max_offset, family.j_max + oc.max_offset};

  Record r{"almost_orthogonality", "orthogonality"};
  r.thresholds["constant"] = oc.constant;
  r.thresholds["diagonal_bound.p2"] = oc.diagonal_bound;
  r.pass = true;
  for (double e : oc.exponents) {
    const OrthogonalityMatrix m = almost_orthogonality_matrix(p, family, corpus, j, k, e);
    const std::string key = detail::exponent_key(e);
    const double dc = m.decay_constant(oc.max_offset);
    r.values["decay_constant.p" + key] = dc;
    r.values["fitted_slope.p" + key] = m.fitted_slope(oc.max_offset);
    r.pass = r.pass && dc <= oc.constant;
    double diag = 0.0;
    for (int jj = j.lo; jj <= j.hi; ++jj)
      if (!std::isnan(m.at(jj, jj))) diag = std::max(diag, m.at(jj, jj));
    r.values["diagonal_max.p" + key] = diag;
    if (e == 2.0) {
      r.pass = r.pass && diag <= oc.diagonal_bound;
      // Scalar oracle: max over the block support of sqrt(s) e^{-s}, s = 4^{-k} lambda.
      double excess = -std::numeric_limits<double>::infinity();
      for (int kk = k.lo; kk <= k.hi; ++kk)
        for (int jj = j.lo; jj <= j.hi; ++jj) {
          if (std::isnan(m.at(kk, jj))) continue;
          const double lo = std::ldexp(c.symbol.a / 4.0, 2 * jj), hi = std::ldexp(4.0 * c.symbol.a, 2 * jj);
          const double slo = std::ldexp(lo, -2 * kk), shi = std::ldexp(hi, -2 * kk);
          const double s = std::clamp(0.5, slo, shi);
          excess = std::max(excess, m.at(kk, jj) - std::sqrt(s) * std::exp(-s));
        }
      r.values["oracle_excess.p2"] = excess;
    }
    for (int kk = k.lo; kk <= k.hi; ++kk) {
      json row{{"p", e}, {"k", kk}};
      json vals = json::array();
      for (int jj = j.lo; jj <= j.hi; ++jj) vals.push_back(detail::number(m.at(kk, jj)));
      row["R"] = vals;
      r.table.push_back(row);
    }
  }
  r.values["j_min"] = j.lo;
  r.values["j_max"] = j.hi;
  r.values["fields"] = static_cast<double>(corpus.size());
  return {r};
}

// -------------------------------------------------------------- equivalences

inline std::vector<Record> run_equivalences(const ExperimentConfig& c, const RunOptions& opt) {
  const EquivalenceConfig& ec = c.equivalences;
  const CorpusSpec spec = ec.corpus.value_or(c.corpus);

  struct Grid {
    std::string name;
    DirichletProblem problem;
    std::vector<CorpusMember> corpus;
    TimeGrid times;
    DyadicSymbolFamily family;
  };
  auto make = [&](const NamedDomain& nd) {
    DirichletProblem p(build_domain(nd.descriptor));
    auto corpus = generate_corpus(p, spec);
    TimeGrid g = detail::time_grid(c, p);
    DyadicSymbolFamily fam = detail::family_for(c, p);
    return Grid{nd.name, std::move(p), std::move(corpus), std::move(g), std::move(fam)};
  };
  const Grid coarse = make(ec.domain);
  const Grid fine = make(ec.refined);

  Record win{"besov_window", "equivalences"};
  win.thresholds["lo"] = ec.window.first;
  win.thresholds["hi"] = ec.window.second;
  win.thresholds["strict_lo"] = ec.strict_window.first;
  win.thresholds["strict_hi"] = ec.strict_window.second;
  win.pass = true;
  for (double e : ec.window_exponents) {
    std::vector<double> ratios(coarse.corpus.size());
    detail::parallel_for(opt.jobs, coarse.corpus.size(), [&](std::size_t i) {
      const Field& f = coarse.corpus[i].field;
      const double cont = besov_continuous(coarse.problem, f, e, coarse.times, HeatVariant::kGradient).squared;
      const double dyad = std::pow(besov_dyadic(coarse.problem, f, e, dyadic_range(coarse.times), HeatVariant::kGradient), 2);
      ratios[i] = cont / dyad;
    });
    const auto m = EquivalenceMeasurement::summarize(e, coarse.name, ratios);
    const std::string key = detail::exponent_key(e);
    int in_strict = 0;
    for (double r : ratios) in_strict += (r >= ec.strict_window.first && r <= ec.strict_window.second);
    win.values["min.p" + key] = m.min;
    win.values["median.p" + key] = m.median;
    win.values["max.p" + key] = m.max;
    win.values["strict_window_pass_rate.p" + key] = static_cast<double>(in_strict) / static_cast<double>(ratios.size());
    win.pass = win.pass && m.min >= ec.window.first && m.max <= ec.window.second;
    win.table.push_back({{"p", e}, {"domain", coarse.name}, {"ratios", ratios}});
  }
  win.notes.push_back("continuous^2 / dyadic^2 with continuous = int ||Q_t f||_p^2 dt/t and dyadic = sum_k ||Q_{4^-k} f||_p^2");

  Record thm{"square_function_ratio", "equivalences"};
  thm.thresholds["drift"] = ec.drift;
  thm.pass = true;
  for (double e : c.p_list) {
    auto measure = [&](const Grid& g) {
      std::vector<double> ratios(g.corpus.size());
      detail::parallel_for(opt.jobs, g.corpus.size(), [&](std::size_t i) {
        const Field& f = g.corpus[i].field;
        ratios[i] = lp_norm(f, e) / lp_norm(lp_square_function(g.problem, g.family, f), e);
      });
      return EquivalenceMeasurement::summarize(e, g.name, ratios);
    };
    const auto mc = measure(coarse);
    auto mf = measure(fine);
    mf.drift = mf.drift_against(mc);
    const std::string key = detail::exponent_key(e);
    thm.values["C." + coarse.name + ".p" + key] = mc.two_sided_constant();
    thm.values["C." + fine.name + ".p" + key] = mf.two_sided_constant();
    thm.values["drift.p" + key] = mf.drift;
    thm.pass = thm.pass && mf.drift <= ec.drift;
    if (e == 2.0) {
      // ||f||^2 / ||SF f||^2 lies in [1 / max sum Psi^2, 1 / min sum Psi^2].
      for (const auto* pair : {&coarse, &fine}) {
        const auto [lo, hi] = square_sum_envelope(pair->problem.spectrum, pair->family);
        const auto& m = pair == &coarse ? mc : mf;
        const double env_lo = 1.0 / std::sqrt(hi), env_hi = 1.0 / std::sqrt(lo);
        const bool inside = m.min >= env_lo * (1 - 1e-12) && m.max <= env_hi * (1 + 1e-12);
        thm.values["envelope_lo." + pair->name] = env_lo;
        thm.values["envelope_hi." + pair->name] = env_hi;
        thm.values["inside_envelope." + pair->name] = inside ? 1.0 : 0.0;
        thm.pass = thm.pass && inside;
      }
    }
    thm.table.push_back({{"p", e}, {"domain", coarse.name}, {"ratios", mc.ratios}});
    thm.table.push_back({{"p", e}, {"domain", fine.name}, {"ratios", mf.ratios}});
  }
  thm.notes.push_back("ratio ||f||_p / ||(sum_j |Delta_j f|^2)^{1/2}||_p; drift is the relative change of min and max under refinement");

  // Randomized-symbol route: the time-L^2 aggregate equals the square function.
  Record rad{"rademacher_route", "equivalences"};
  {
    double worst = 0.0;
    const std::size_t n = std::min<std::size_t>(coarse.corpus.size(), 4);
    for (double e : c.p_list)
      for (std::size_t i = 0; i < n; ++i) {
        const auto rr = rademacher_equivalence(coarse.problem, coarse.family, coarse.corpus[i].field, e);
        worst = std::max(worst, std::abs(rr.aggregate - rr.square_function_norm) / rr.square_function_norm);
        rad.values["mean_over_sf.p" + detail::exponent_key(e)] =
            std::max(rad.values["mean_over_sf.p" + detail::exponent_key(e)], rr.mean_lp / rr.square_function_norm);
      }
    rad.values["max_aggregate_mismatch"] = worst;
    rad.thresholds["max"] = 1e-10;
    rad.pass = worst <= 1e-10;
  }

  // Backward heat flow on a block.
  Record back{"backheat_identity", "equivalences"};
  {
    double worst = 0.0;
    const Field& f = coarse.corpus.front().field;
    for (int jj = coarse.family.j_min; jj <= coarse.family.j_max; ++jj)
      for (int kk = jj; kk <= jj + 2; ++kk) worst = std::max(worst, backheat_residual(coarse.problem, coarse.family, jj, kk, f));
    back.values["max_residual"] = worst;
    back.thresholds["max"] = 1e-10;
    back.pass = worst <= 1e-10;
  }
  return {win, thm, rad, back};
}

// ----------------------------------------------------------------- resolvent

inline std::vector<Record> run_resolvent(const ExperimentConfig& c, const RunOptions&) {
  const ResolventConfig& rc = c.resolvent;
  const DirichletProblem p(build_domain(rc.domain.descriptor));
  std::vector<double> thetas = rc.thetas;
  if (thetas.empty())
    for (int m = 1; m <= 7; ++m) thetas.push_back(std::numbers::pi * (1.0 - std::ldexp(1.0, -m)));
  const auto radii = detail::geometric(rc.radius_lo_factor * p.spectrum.lambda_min(),
                                       rc.radius_hi_factor * p.spectrum.lambda_max(), rc.radii);

  Record r{"resolvent_growth", "resolvent"};
  r.thresholds["alpha_max.p2"] = rc.alpha_max;
  r.thresholds["scaled_norm_max.p2"] = 1.0 + rc.norm_slack;
  r.thresholds["noise_sigmas"] = rc.noise_sigmas;
  r.thresholds["noise_floor"] = rc.noise_floor;
  r.pass = true;
  for (double e : rc.exponents) {
    GrowthOptions base;
    GrowthOptions scaled;
    scaled.scale = rc.scale;
    const GrowthFit f1 = resolvent_growth_exponent(p.spectrum, e, thetas, radii, base);
    const GrowthFit f2 = resolvent_growth_exponent(p.spectrum, e, thetas, radii, scaled);
    const std::string key = detail::exponent_key(e);
    r.values["alpha.p" + key] = f1.alpha;
    r.values["c.p" + key] = f1.c();
    r.values["alpha_stderr.p" + key] = f1.alpha_stderr;
    r.values["alpha_scaled.p" + key] = f2.alpha;
    r.values["c_scaled.p" + key] = f2.c();
    r.values["max_scaled_norm.p" + key] = std::max(f1.max_scaled, f2.max_scaled);
    r.values["envelope_c.p" + key] = f1.envelope_c;
    const double tol_alpha =
        std::max(rc.noise_floor, rc.noise_sigmas * std::hypot(f1.alpha_stderr, f2.alpha_stderr));
    const double tol_c = std::max(rc.noise_floor, rc.noise_sigmas * std::hypot(f1.log_c_stderr, f2.log_c_stderr));
    const double d_alpha = std::abs(f1.alpha - f2.alpha);
    const double d_logc = std::abs(f1.log_c - f2.log_c);
    r.values["scale_delta_alpha.p" + key] = d_alpha;
    r.values["scale_delta_log_c.p" + key] = d_logc;
    r.values["scale_tol_alpha.p" + key] = tol_alpha;
    r.values["scale_tol_log_c.p" + key] = tol_c;
    r.values["exact_norm.p" + key] = f1.exact_norm ? 1.0 : 0.0;
    if (e == 2.0) {
      r.pass = r.pass && f1.alpha <= rc.alpha_max && f2.alpha <= rc.alpha_max &&
               std::max(f1.max_scaled, f2.max_scaled) <= 1.0 + rc.norm_slack;
    } else if (e == 1.0 || std::isinf(e)) {
      const bool finite = std::isfinite(f1.alpha) && std::isfinite(f1.log_c) && std::isfinite(f1.envelope_c);
      r.pass = r.pass && finite && d_alpha <= tol_alpha && d_logc <= tol_c;
    }
    for (std::size_t i = 0; i < f1.points.size(); ++i)
      r.table.push_back({{"p", detail::number(e)},
                         {"theta", std::arg(f1.points[i].z)},
                         {"r", std::abs(f1.points[i].z)},
                         {"norm_times_im", f1.points[i].scaled()},
                         {"scaled_norm_times_im", f2.points[i].scaled()}});
  }
  r.notes.push_back("fit of log(max_r ||(z - s Delta)^{-1}|| |Im z|) against log(|z|/|Im z|) for s = 1 and s = h^2; p outside {1, 2, inf} uses power-iteration lower bounds");
  return {r};
}

// ----------------------------------------------------------- heatflow-bounds

inline std::vector<Record> run_heatflow(const ExperimentConfig& c, const RunOptions& opt) {
  const HeatflowConfig& hc = c.heatflow;
  const DirichletProblem p(build_domain(hc.domain.descriptor));
  const TimeGrid grid = detail::time_grid(c, p);

  Record uni{"hilbert_uniformity", "heatflow-bounds"};
  uni.thresholds["agreement"] = hc.agreement;
  uni.pass = true;
  for (double e : hc.exponents) {
    const std::string key = detail::exponent_key(e);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int n : hc.components) {
      CorpusSpec spec = c.corpus;
      spec.components = n;
      spec.count = hc.members;
      const auto corpus = generate_corpus(p, spec);
      std::vector<double> raw(corpus.size()), refined(corpus.size());
      detail::parallel_for(opt.jobs, corpus.size(), [&](std::size_t i) {
        const Field& f = corpus[i].field;
        const HeatEvolution ev(p, f);
        const double fn = lp_norm(f, e);
        double best = 0.0, t_best = grid.nodes.front();
        for (double t : grid.nodes) {
          const double r = lp_norm(ev.q(t), e) / fn;
          if (r > best) {
            best = r;
            t_best = t;
          }
        }
        raw[i] = best;
        refined[i] = std::max(best, q_t_norm_estimate(p, t_best, f, e, hc.power_iterations));
      });
      const double cn = *std::max_element(refined.begin(), refined.end());
      uni.values["constant.p" + key + ".N" + std::to_string(n)] = cn;
      uni.values["corpus_sup.p" + key + ".N" + std::to_string(n)] = *std::max_element(raw.begin(), raw.end());
      lo = std::min(lo, cn);
      hi = std::max(hi, cn);
    }
    const double spread = hi / lo - 1.0;
    uni.values["spread.p" + key] = spread;
    uni.pass = uni.pass && spread <= hc.agreement;
  }
  uni.notes.push_back("constant = max over corpus of sup_t ||Q_t f||_p / ||f||_p, refined by power iteration at the maximizing t; lower bounds");

  Record dom{"gaussian_domination", "heatflow-bounds"};
  const DirichletProblem obst(build_domain(hc.obstacle.descriptor));
  const DirichletProblem free_grid(obst.domain.filled());
  dom.thresholds["tolerance"] = hc.domination_tolerance;
  dom.thresholds["row_sum_max"] = 1.0 + hc.domination_tolerance;
  double excess = -std::numeric_limits<double>::infinity(), rows = 0.0;
  for (double t : detail::geometric(1.0 / obst.spectrum.lambda_max(), 10.0 / obst.spectrum.lambda_min(),
                                    hc.domination_times)) {
    double e_t = -std::numeric_limits<double>::infinity(), r_t = 0.0;
    for (Index s = 0; s < obst.size(); ++s) {
      const DominationReport rep = gaussian_domination(obst, free_grid, t, s);
      e_t = std::max(e_t, rep.max_excess);
      r_t = std::max(r_t, rep.max_row_sum);
    }
    dom.table.push_back({{"t", t}, {"max_excess", e_t}, {"max_row_sum", r_t}});
    excess = std::max(excess, e_t);
    rows = std::max(rows, r_t);
  }
  dom.values["max_excess"] = excess;
  dom.values["max_row_sum"] = rows;
  dom.pass = excess <= hc.domination_tolerance && rows <= 1.0 + hc.domination_tolerance;

  const auto corpus = generate_corpus(p, c.corpus);
  Record maxf{"maximal_function", "heatflow-bounds"};
  maxf.check = false;
  Record qb{"q_t_bounded", "heatflow-bounds"};
  qb.check = false;
  for (const auto& m : corpus) {
    const Field mf = maximal_function(p, grid, m.field);
    for (double e : hc.maximal_exponents) {
      const std::string key = "C.p" + detail::exponent_key(e);
      maxf.values[key] = std::max(maxf.values[key], lp_norm(mf, e) / lp_norm(m.field, e));
    }
    const HeatEvolution ev(p, m.field);
    for (double e : {2.0, 4.0, 8.0}) {
      const std::string key = "sup.p" + detail::exponent_key(e);
      for (double t : grid.nodes) qb.values[key] = std::max(qb.values[key], lp_norm(ev.q(t), e) / lp_norm(m.field, e));
    }
  }

  Record linf{"boldq_linfty", "heatflow-bounds"};
  linf.check = false;
  {
    const TimeGrid g = detail::time_grid(c, obst);
    double sup = 0.0;
    for (std::size_t k = 0; k < g.size(); k += 4) sup = std::max(sup, linfty_bound_boldq(obst.spectrum, g.nodes[k]).inf_norm);
    linf.values["sup_inf_norm." + hc.obstacle.name] = sup;
  }
  return {uni, dom, maxf, qb, linf};
}

// ---------------------------------------------------------------- khintchine

inline std::vector<Record> run_khintchine(const ExperimentConfig& c, const RunOptions&) {
  const KhintchineConfig& kc = c.khintchine;
  std::mt19937_64 rng(c.seed ^ 0x6b68696e7463ULL);
  std::uniform_int_distribution<int> length(1, kc.max_length);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> vectors;
  for (int v = 0; v < kc.vectors; ++v) {
    std::vector<double> a(static_cast<std::size_t>(length(rng)));
    for (auto& x : a) x = normal(rng);
    vectors.push_back(a);
  }
  Record r{"khintchine", "khintchine"};
  r.thresholds["l2_tolerance"] = kc.l2_tolerance;
  r.thresholds["window_lo"] = kc.window.first;
  r.thresholds["window_hi"] = kc.window.second;
  double dev2 = 0.0;
  for (const auto& a : vectors) dev2 = std::max(dev2, std::abs(khintchine_check(a, 2.0).ratio_low - 1.0));
  r.values["max_deviation.p2"] = dev2;
  r.pass = dev2 <= kc.l2_tolerance;
  for (double e : kc.exponents) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& a : vectors) {
      const KhintchineResult k = khintchine_check(a, e);
      lo = std::min({lo, k.ratio_low, k.ratio_high});
      hi = std::max({hi, k.ratio_low, k.ratio_high});
    }
    const std::string key = detail::exponent_key(e);
    r.values["min_ratio.p" + key] = lo;
    r.values["max_ratio.p" + key] = hi;
    r.pass = r.pass && lo >= kc.window.first && hi <= kc.window.second;
  }
  r.values["vectors"] = kc.vectors;
  return {r};
}

// ---------------------------------------------------------------------- runs

inline Report run_suite(const ExperimentConfig& c, const std::string& suite, const RunOptions& opt = {}) {
  validate_for(c, suite);
  Report rep;
  rep.suite = suite;
  rep.config = c.echo;
  rep.hash = config_hash(c.echo);
  for (const auto& s : expand_suite(suite)) {
    const auto t0 = detail::Clock::now();
    std::vector<Record> recs;
    if (s == "identities") recs = run_identities(c, opt, rep.seconds);
    else if (s == "dhs-convergence") recs = run_dhs(c, opt);
    else if (s == "orthogonality") recs = run_orthogonality(c, opt);
    else if (s == "equivalences") recs = run_equivalences(c, opt);
    else if (s == "resolvent") recs = run_resolvent(c, opt);
    else if (s == "heatflow-bounds") recs = run_heatflow(c, opt);
    else recs = run_khintchine(c, opt);
    rep.seconds["suite." + s] = detail::seconds_since(t0);
    for (auto& r : recs) rep.records.push_back(std::move(r));
  }
  return rep;
}

}  // namespace hslab::harness
