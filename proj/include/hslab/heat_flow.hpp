#pragma once

// Heat semigroup S(t) = exp(t Delta_D) and its localizations
// Q_t = sqrt(t) grad S(t) and bold Q_t = t d/dt S(t) = t Delta_D S(t).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "hslab/grid_domain.hpp"
#include "hslab/spectral.hpp"

namespace hslab {

/// Everything the heat-flow and square-function operations need about one
/// domain: the stencils and the exact spectral decomposition.
struct DirichletProblem {
  GridDomain domain;
  SparseOperator laplacian;
  SparseOperator grad;
  SpectralDecomposition spectrum;

  explicit DirichletProblem(GridDomain d, Index cap = kDefaultDenseCap)
      : domain(std::move(d)),
        laplacian(dirichlet_laplacian(domain)),
        grad(gradient(domain)),
        spectrum(dirichlet_spectrum(domain, cap)) {}

  int dimension() const { return domain.dimension(); }
  double cell_weight() const { return domain.cell_weight(); }
  Index size() const { return domain.size(); }

  Field zero_field(Index components = 1) const {
    return {Eigen::MatrixXd::Zero(size(), components), cell_weight()};
  }
};

/// Geometric time nodes with trapezoid weights for dt/t = d(log t).
struct TimeGrid {
  std::vector<double> nodes;
  std::vector<double> weights;

  static TimeGrid geometric(double t_min, double t_max, double ratio) {
    if (!(t_min > 0.0) || !(t_max > t_min) || !(ratio > 1.0))
      throw std::invalid_argument("TimeGrid: need 0 < t_min < t_max and ratio > 1");
    const double span = std::log(t_max / t_min);
    const int steps = std::max(1, static_cast<int>(std::ceil(span / std::log(ratio) - 1e-9)));
    const double du = span / steps;
    TimeGrid g;
    for (int k = 0; k <= steps; ++k) {
      g.nodes.push_back(t_min * std::exp(du * k));
      g.weights.push_back((k == 0 || k == steps) ? du / 2 : du);
    }
    g.nodes.back() = t_max;
    return g;
  }

  /// t_min = lo_factor / l_max, t_max = hi_factor / l_min.
  static TimeGrid for_spectrum(double lambda_min, double lambda_max, double lo_factor = 0.01,
                               double hi_factor = 20.0, double ratio = std::pow(2.0, 1.0 / 8.0)) {
    return geometric(lo_factor / lambda_max, hi_factor / lambda_min, ratio);
  }

  std::size_t size() const { return nodes.size(); }
  double t_min() const { return nodes.front(); }
  double t_max() const { return nodes.back(); }
  double ratio() const { return nodes.size() > 1 ? nodes[1] / nodes[0] : 1.0; }
  double log_span() const { return std::log(t_max() / t_min()); }

  TimeGrid refined() const { return geometric(t_min(), t_max(), std::sqrt(ratio())); }
};

/// Caches the spectral coefficients of f so that many times are cheap.
class HeatEvolution {
 public:
  HeatEvolution(const DirichletProblem& p, const Field& f)
      : p_(&p), coeffs_(p.spectrum.coefficients(f.values)), weight_(f.cell_weight) {}

  template <class Multiplier>
  Field multiply(Multiplier&& m) const {
    Eigen::MatrixXd c = coeffs_;
    const Eigen::VectorXd& lam = p_->spectrum.eigenvalues();
    for (Index i = 0; i < c.rows(); ++i) c.row(i) *= m(lam[i]);
    return {p_->spectrum.synthesize(c), weight_};
  }

  Field semigroup(double t) const {
    return multiply([t](double l) { return std::exp(-t * l); });
  }

  Field q(double t) const {
    Field s = semigroup(t);
    s.values *= std::sqrt(t);
    return apply_gradient(p_->grad, p_->dimension(), s);
  }

  Field bold_q(double t) const {
    return multiply([t](double l) { return -t * l * std::exp(-t * l); });
  }

  const Eigen::MatrixXd& coefficients() const { return coeffs_; }

 private:
  const DirichletProblem* p_;
  Eigen::MatrixXd coeffs_;
  double weight_;
};

namespace detail {
inline void require_nonnegative_time(double t, const char* what) {
  if (!(t >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative time");
}
inline void require_positive_time(double t, const char* what) {
  if (!(t > 0.0)) throw std::invalid_argument(std::string(what) + ": time must be positive");
}
}  // namespace detail

/// Oracle path: multiplier exp(-t l).
inline Field semigroup(const SpectralDecomposition& sd, double t, const Field& f) {
  detail::require_nonnegative_time(t, "semigroup");
  if (t == 0.0) return f;
  return apply_multiplier(sd, [t](double l) { return std::exp(-t * l); }, f);
}

/// Crank-Nicolson stepping with `substeps` equal steps.
inline Field semigroup_crank_nicolson(const SparseOperator& laplacian, double t, const Field& f, int substeps) {
  detail::require_nonnegative_time(t, "semigroup_crank_nicolson");
  if (substeps < 1) throw std::invalid_argument("semigroup_crank_nicolson: need at least one substep");
  if (t == 0.0) return f;
  const double dt = t / substeps;
  Eigen::SparseMatrix<double> id(laplacian.rows(), laplacian.cols());
  id.setIdentity();
  const Eigen::SparseMatrix<double> implicit = id - (0.5 * dt) * laplacian.matrix;
  const Eigen::SparseMatrix<double> explicit_part = id + (0.5 * dt) * laplacian.matrix;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(implicit);
  if (solver.info() != Eigen::Success) throw std::runtime_error("semigroup_crank_nicolson: factorization failed");
  Eigen::MatrixXd u = f.values;
  for (int k = 0; k < substeps; ++k) {
    const Eigen::MatrixXd rhs = explicit_part * u;
    u = solver.solve(rhs);
  }
  return {u, f.cell_weight};
}

/// Q_t f = sqrt(t) grad S(t) f on the staggered cells.
inline Field q_t(const DirichletProblem& p, double t, const Field& f) {
  detail::require_positive_time(t, "q_t");
  Field s = semigroup(p.spectrum, t, f);
  s.values *= std::sqrt(t);
  return apply_gradient(p.grad, p.dimension(), s);
}

/// bold Q_t f = t Delta_D S(t) f.
inline Field bold_q_t(const DirichletProblem& p, double t, const Field& f) {
  detail::require_positive_time(t, "bold_q_t");
  Field s = semigroup(p.spectrum, t, f);
  Field out = p.laplacian.apply(s);
  out.values *= t;
  return out;
}

/// sqrt(t) S(t) div v; with this operator bold Q_t = 2 Qd_{t/2} Q_{t/2}.
inline Field q_t_dual(const DirichletProblem& p, double t, const Field& v) {
  detail::require_positive_time(t, "q_t_dual");
  Field d = apply_divergence(p.grad, p.dimension(), v);
  d = semigroup(p.spectrum, t, d);
  d.values *= std::sqrt(t);
  return d;
}

/// ||bold Q_t f - 2 Qd_{t/2} Q_{t/2} f||_2 / ||f||_2.
inline double factorization_check(const DirichletProblem& p, double t, const Field& f) {
  const Field lhs = bold_q_t(p, t, f);
  Field rhs = q_t_dual(p, t / 2, q_t(p, t / 2, f));
  rhs.values *= 2.0;
  const double denom = lp_norm(f, 2.0);
  Field diff{lhs.values - rhs.values, f.cell_weight};
  return denom == 0.0 ? lp_norm(diff, 2.0) : lp_norm(diff, 2.0) / denom;
}

namespace detail {
// Norming functional of y in L^p: |y|^{p-2} y / ||y||_p^{p-1}, modulus Euclidean per point.
inline Field norming(const Field& y, double p) {
  const double n = lp_norm(y, p);
  Field out{Eigen::MatrixXd::Zero(y.points(), y.components()), y.cell_weight};
  if (!(n > 0.0)) return out;
  for (Index i = 0; i < y.points(); ++i) {
    const double m = y.values.row(i).norm();
    if (m > 0.0) out.values.row(i) = std::pow(m / n, p - 1.0) * y.values.row(i) / m;
  }
  return out;
}
}  // namespace detail

/// Boyd's power iteration for ||Q_t||_{p->p} on fields with f's component
/// count, started at f. Returns the largest ratio seen: a lower bound.
inline double q_t_norm_estimate(const DirichletProblem& p, double t, const Field& f, double exponent,
                                int iterations) {
  detail::require_positive_time(t, "q_t_norm_estimate");
  if (!(exponent > 1.0) || !std::isfinite(exponent))
    throw std::invalid_argument("q_t_norm_estimate: need 1 < p < inf");
  const double dual = exponent / (exponent - 1.0);
  Field x = f;
  double best = 0.0;
  for (int it = 0; it <= iterations; ++it) {
    const double xn = lp_norm(x, exponent);
    if (!(xn > 0.0)) break;
    x.values /= xn;
    const Field y = q_t(p, t, x);
    best = std::max(best, lp_norm(y, exponent));
    if (it == iterations) break;
    // Q_t^T = sqrt(t) S(t) G^T = -q_t_dual.
    Field z = q_t_dual(p, t, detail::norming(y, exponent));
    z.values = -z.values;
    x = detail::norming(z, dual);
  }
  return best;
}

/// Pointwise sup over {0} and the grid nodes of |S(t) f|.
inline Field maximal_function(const DirichletProblem& p, const TimeGrid& grid, const Field& f) {
  HeatEvolution ev(p, f);
  Eigen::VectorXd sup = f.values.rowwise().norm();
  for (double t : grid.nodes) sup = sup.cwiseMax(ev.semigroup(t).values.rowwise().norm());
  return {sup, f.cell_weight};
}

struct DominationReport {
  double time = 0.0;
  double max_excess = 0.0;    ///< max_x (S_domain(t) delta - S_free(t) delta)
  double max_row_sum = 0.0;   ///< max_x sum_y S_domain(t)(x, y)
  double peak_value = 0.0;    ///< S_domain(t) delta at the source cell
  bool dominated(double tol = 1e-12) const { return max_excess <= tol; }
};

/// Compares the Dirichlet heat kernel column at `source` with the kernel of
/// the filled bounding box (same spacing). Both spectra are supplied so
/// sweeps over t reuse them.
inline DominationReport gaussian_domination(const DirichletProblem& domain, const DirichletProblem& free_grid,
                                            double t, Index source) {
  if (source < 0 || source >= domain.size()) throw std::out_of_range("gaussian_domination: source outside interior");
  const Cell c = domain.domain.cell(source);
  const Index free_source = free_grid.domain.dof(c.ix, c.iy);
  if (free_source < 0) throw std::invalid_argument("gaussian_domination: free grid does not contain the source");

  Field delta = domain.zero_field();
  delta.values(source, 0) = 1.0;
  Field delta_free = free_grid.zero_field();
  delta_free.values(free_source, 0) = 1.0;
  const Field k_dom = semigroup(domain.spectrum, t, delta);
  const Field k_free = semigroup(free_grid.spectrum, t, delta_free);

  DominationReport r;
  r.time = t;
  r.max_excess = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < domain.size(); ++i) {
    const Cell& ci = domain.domain.cell(i);
    r.max_excess = std::max(r.max_excess, k_dom.values(i, 0) - k_free.values(free_grid.domain.dof(ci.ix, ci.iy), 0));
  }
  Field ones{Eigen::MatrixXd::Ones(domain.size(), 1), domain.cell_weight()};
  r.max_row_sum = semigroup(domain.spectrum, t, ones).values.maxCoeff();
  r.peak_value = k_dom.values(source, 0);
  return r;
}

struct InducedNorms {
  double time = 0.0;
  double inf_norm = 0.0;  ///< max absolute row sum
  double one_norm = 0.0;  ///< max absolute column sum
};

/// Exact inf->inf and 1->1 norms of bold Q_t = t Delta exp(t Delta).
inline InducedNorms linfty_bound_boldq(const SpectralDecomposition& sd, double t, Index cap = kDefaultDenseCap) {
  detail::require_positive_time(t, "linfty_bound_boldq");
  if (sd.size() > cap) throw CapacityError("linfty_bound_boldq: kernel matrix exceeds the dense cap");
  const Eigen::MatrixXd u = sd.basis();
  Eigen::VectorXd m(sd.size());
  for (Index i = 0; i < sd.size(); ++i) m[i] = -t * sd.eigenvalues()[i] * std::exp(-t * sd.eigenvalues()[i]);
  const Eigen::MatrixXd k = u * m.asDiagonal() * u.transpose();
  InducedNorms n;
  n.time = t;
  n.inf_norm = k.cwiseAbs().rowwise().sum().maxCoeff();
  n.one_norm = k.cwiseAbs().colwise().sum().maxCoeff();
  return n;
}

inline std::vector<InducedNorms> linfty_bound_boldq(const SpectralDecomposition& sd, const TimeGrid& grid,
                                                    Index cap = kDefaultDenseCap) {
  std::vector<InducedNorms> out;
  for (double t : grid.nodes) out.push_back(linfty_bound_boldq(sd, t, cap));
  return out;
}

}  // namespace hslab
