#pragma once

// Dynkin-Helffer-Sjostrand functional calculus: the almost-analytic
// extension of a compactly supported symbol, the plane integral of its
// dbar against resolvent solves, the Laplace-transform resolvent along a
// ray, and measured L^p growth of the resolvent near the spectrum.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "hslab/grid_domain.hpp"
#include "hslab/spectral.hpp"
#include "hslab/symbols.hpp"

namespace hslab {

using Complex = std::complex<double>;

/// Psi~(x+iy) = (sum_{m<=N} Psi^(m)(x) (iy)^m / m!) tau(y / <x>), with tau = 1
/// on |s| <= 1 and 0 on |s| >= 2. dbar is assembled in closed form:
/// dbar of the Taylor polynomial telescopes to Psi^(N+1)(x) (iy)^N / (2 N!).
class AlmostAnalyticExtension {
 public:
  AlmostAnalyticExtension(SmoothSymbol psi, int order) : psi_(std::move(psi)), order_(order) {
    if (order_ < 0) throw std::invalid_argument("make_extension: negative order");
    if (order_ + 1 > psi_.max_order())
      throw std::invalid_argument("make_extension: need derivatives up to order " + std::to_string(order_ + 1) +
                                  " but " + psi_.name() + " provides " + std::to_string(psi_.max_order()));
  }

  const SmoothSymbol& symbol() const { return psi_; }
  int order() const { return order_; }

  /// Derivatives 0..N+1 of Psi at x; pass to the overloads below to reuse.
  std::vector<double> tower(double x) const { return psi_.derivatives(x, order_ + 1); }

  Complex value(Complex z) const { return value(z.real(), z.imag(), tower(z.real())); }
  Complex dbar(Complex z) const { return dbar(z.real(), z.imag(), tower(z.real())); }

  Complex value(double x, double y, const std::vector<double>& d) const {
    return polynomial(y, d) * cutoff(y / bracket(x)).value();
  }

  Complex dbar(double x, double y, const std::vector<double>& d) const {
    const double br = bracket(x);
    const double s = y / br;
    const Jet tau = cutoff(s);
    Complex iy_pow(1.0, 0.0);
    double fact = 1.0;
    for (int m = 1; m <= order_; ++m) {
      iy_pow *= Complex(0.0, y);
      fact *= m;
    }
    const Complex poly_dbar = 0.5 * d[static_cast<std::size_t>(order_ + 1)] * iy_pow / fact;
    Complex out = poly_dbar * tau.value();
    const double dtau = tau.derivative(1) * (s < 0 ? -1.0 : 1.0);
    if (dtau != 0.0) {
      const double ds_dx = -y * x / (br * br * br);
      const double ds_dy = 1.0 / br;
      out += polynomial(y, d) * 0.5 * dtau * Complex(ds_dx, ds_dy);
    }
    return out;
  }

  static double bracket(double x) { return std::sqrt(1.0 + x * x); }

 private:
  // tau as a jet in |s|.
  static Jet cutoff(double s) { return 1.0 - smooth_step(Jet::variable(std::abs(s)) - 1.0); }

  Complex polynomial(double y, const std::vector<double>& d) const {
    Complex acc(0.0, 0.0);
    Complex term(1.0, 0.0);
    for (int m = 0; m <= order_; ++m) {
      if (m > 0) term *= Complex(0.0, y) / static_cast<double>(m);
      acc += d[static_cast<std::size_t>(m)] * term;
    }
    return acc;
  }

  SmoothSymbol psi_;
  int order_;
};

inline AlmostAnalyticExtension make_extension(const SmoothSymbol& s, int order) {
  return AlmostAnalyticExtension(s, order);
}

/// Tensor grid over supp Psi x (y_min_factor <x>, 2 <x>). x is uniform
/// (endpoints carry zero weight). y uses two Gauss-Legendre panels: in log y
/// on (y_min, <x>), where tau = 1, and in y on the cutoff band (<x>, 2 <x>).
struct QuadratureSpec {
  int x_nodes = 800;
  int y_nodes = 48;
  int band_nodes = 48;
  double y_min_factor = 1e-4;

  QuadratureSpec refined() const { return {2 * x_nodes, 2 * y_nodes, 2 * band_nodes, y_min_factor}; }
};

struct GaussRule {
  std::vector<double> nodes;    ///< on (-1, 1)
  std::vector<double> weights;
};

/// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix.
inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  GaussRule r;
  for (int k = 0; k < n; ++k) {
    r.nodes.push_back(es.eigenvalues()[k]);
    r.weights.push_back(2.0 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k));
  }
  return r;
}

inline constexpr double kResolventResidualTol = 1e-10;

class DhsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Direct sparse factorization of z + h^2 Delta per node.
class ResolventSolver {
 public:
  ResolventSolver(const SparseOperator& laplacian, double h2) {
    Eigen::SparseMatrix<Complex> m = (h2 * laplacian.matrix).cast<Complex>();
    for (Index i = 0; i < m.rows(); ++i) m.coeffRef(i, i) += Complex(1.0, 0.0);
    m.makeCompressed();
    shifted_ = m;
    base_ = (h2 * laplacian.matrix).cast<Complex>();
    lu_.analyzePattern(shifted_);
  }

  /// Solves (z + h^2 Delta) u = f and checks the residual.
  Eigen::MatrixXcd solve(Complex z, const Eigen::MatrixXcd& f) {
    for (Index i = 0; i < shifted_.rows(); ++i) shifted_.coeffRef(i, i) = base_.coeff(i, i) + z;
    lu_.factorize(shifted_);
    if (lu_.info() != Eigen::Success) throw DhsError("resolvent factorization failed");
    Eigen::MatrixXcd u = lu_.solve(f);
    const double res = (shifted_ * u - f).norm();
    if (!(res <= kResolventResidualTol * f.norm()))
      throw DhsError("resolvent residual " + std::to_string(res / f.norm()) + " above tolerance");
    return u;
  }

 private:
  Eigen::SparseMatrix<Complex> base_;
  Eigen::SparseMatrix<Complex> shifted_;
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu_;
};

/// Psi(-h^2 Delta) f = (i / 2 pi) int dbar Psi~(z) (z + h^2 Delta)^{-1} f dzbar ^ dz.
/// dzbar ^ dz = 2i dx dy; for real f the y < 0 half is the conjugate of the
/// y > 0 half, so only y > 0 is solved. Accumulation runs over fixed chunks
/// of x nodes and sums them in chunk order, independent of `jobs`.
inline Field dhs_apply(const AlmostAnalyticExtension& ext, const SparseOperator& laplacian, double h2,
                       const Field& f, const QuadratureSpec& quad, int jobs = 1) {
  if (!(quad.y_min_factor > 0.0))
    throw std::invalid_argument("dhs_apply: the y-grid must stay off the real axis (y_min_factor > 0)");
  if (quad.y_min_factor >= 1.0) throw std::invalid_argument("dhs_apply: y_min_factor must be below 1");
  if (quad.x_nodes < 2 || quad.y_nodes < 1 || quad.band_nodes < 1) throw std::invalid_argument("dhs_apply: need at least two nodes per axis");
  if (!(h2 > 0.0)) throw std::invalid_argument("dhs_apply: scale h^2 must be positive");
  if (f.points() != laplacian.rows()) throw std::invalid_argument("dhs_apply: size mismatch");
  const Support sup = ext.symbol().support();
  if (!sup.bounded()) throw std::invalid_argument("dhs_apply: symbol must have compact support");

  const double dx = (sup.hi - sup.lo) / quad.x_nodes;
  const Eigen::MatrixXcd rhs = f.values.cast<Complex>();
  constexpr int kChunk = 8;
  const int interior = quad.x_nodes - 1;
  const int chunks = (interior + kChunk - 1) / kChunk;
  std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(chunks));
  std::atomic<int> next{0};
  std::vector<std::string> errors(static_cast<std::size_t>(chunks));
  const GaussRule low = gauss_legendre(quad.y_nodes);
  const GaussRule band = gauss_legendre(quad.band_nodes);

  auto worker = [&] {
    ResolventSolver solver(laplacian, h2);
    for (int c = next++; c < chunks; c = next++) {
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(f.points(), f.components());
      try {
        for (int k = 1 + c * kChunk; k <= std::min(interior, (c + 1) * kChunk); ++k) {
          const double x = sup.lo + k * dx;
          const std::vector<double> d = ext.tower(x);
          const double br = AlmostAnalyticExtension::bracket(x);
          const double log_lo = std::log(quad.y_min_factor * br);
          const double log_half = 0.5 * (std::log(br) - log_lo);
          for (std::size_t l = 0; l < low.nodes.size() + band.nodes.size(); ++l) {
            double y, wy;
            if (l < low.nodes.size()) {
              y = std::exp(log_lo + log_half * (low.nodes[l] + 1.0));
              wy = log_half * low.weights[l] * y;
            } else {
              const std::size_t b = l - low.nodes.size();
              y = br * (1.5 + 0.5 * band.nodes[b]);
              wy = 0.5 * br * band.weights[b];
            }
            const Complex w = ext.dbar(x, y, d);
            if (w == Complex(0.0, 0.0)) continue;
            try {
              acc += (w * solver.solve(Complex(x, y), rhs)).real() * (dx * wy);
            } catch (const DhsError& e) {
              throw DhsError(std::string(e.what()) + " at node z = " + std::to_string(x) + " + " + std::to_string(y) + "i");
            }
          }
        }
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(c)] = e.what();
      }
      partial[static_cast<std::size_t>(c)] = std::move(acc);
    }
  };

  const int threads = std::max(1, std::min(jobs, chunks));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (!e.empty()) throw DhsError("dhs_apply: " + e);

  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(f.points(), f.components());
  for (const auto& p : partial) total += p;
  return {total * (-2.0 / std::numbers::pi), f.cell_weight};
}

/// Trapezoid in log(rho) along the ray w = rho e^{i phi}.
struct RaySpec {
  int nodes = 2000;
  double rho_min_factor = 1e-14;  ///< rho_min = factor / (l_max + |z|)
  double decay_margin = 40.0;     ///< rho_max = margin / min_i Re(e^{i phi}(l_i + z))
};

/// (z - Delta)^{-1} f = int_0^inf e^{w Delta - w z} f dw along w = rho e^{i phi},
/// evaluated through the spectral semigroup S(w) = exp(-w l).
inline ComplexField laplace_resolvent(const SpectralDecomposition& sd, Complex z, const Field& f, double phi,
                                      const RaySpec& ray = {}) {
  const double r = std::abs(z);
  const double theta = std::arg(z);
  if (r == 0.0) throw std::invalid_argument("laplace_resolvent: z = 0");
  if (z.imag() == 0.0 && z.real() < 0.0) throw std::invalid_argument("laplace_resolvent: theta = pi is excluded");
  if (!(std::abs(phi) < std::numbers::pi / 2))
    throw std::invalid_argument("laplace_resolvent: |phi| must stay below pi/2");
  if (!(2.0 * std::abs(theta + phi) < std::numbers::pi))
    throw std::invalid_argument("laplace_resolvent: ray angle violates 2|theta + phi| < pi");
  if (ray.nodes < 2) throw std::invalid_argument("laplace_resolvent: need at least two nodes");

  const Complex dir = std::polar(1.0, phi);
  const Eigen::VectorXd& lam = sd.eigenvalues();
  double decay_min = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < lam.size(); ++i) decay_min = std::min(decay_min, std::real(dir * (lam[i] + z)));
  if (!(decay_min > 0.0)) throw std::invalid_argument("laplace_resolvent: integrand does not decay along the ray");
  const double rho_min = ray.rho_min_factor / (sd.lambda_max() + r);
  const double rho_max = ray.decay_margin / decay_min;
  const double du = std::log(rho_max / rho_min) / (ray.nodes - 1);

  Eigen::VectorXcd mult = Eigen::VectorXcd::Zero(lam.size());
  for (int k = 0; k < ray.nodes; ++k) {
    const double rho = rho_min * std::exp(du * k);
    const double w = du * rho * ((k == 0 || k == ray.nodes - 1) ? 0.5 : 1.0);
    const Complex wdir = rho * dir;
    for (Index i = 0; i < lam.size(); ++i) mult[i] += w * dir * std::exp(-wdir * (lam[i] + z));
  }
  // The omitted segment (0, rho_min) contributes rho_min e^{i phi} to first order.
  mult.array() += rho_min * dir;

  const Eigen::MatrixXd c = sd.coefficients(f.values);
  Eigen::MatrixXcd scaled(c.rows(), c.cols());
  for (Index i = 0; i < c.rows(); ++i) scaled.row(i) = mult[i] * c.row(i).cast<Complex>();
  return {sd.synthesize(scaled), f.cell_weight};
}

/// Exact resolvent applied spectrally: sum_i (z + l_i)^{-1} v_i <v_i, f>.
inline ComplexField exact_resolvent(const SpectralDecomposition& sd, Complex z, const Field& f) {
  return apply_multiplier(sd, [z](double l) { return 1.0 / (z + l); }, f);
}

/// Boyd's power iteration for ||A||_{p->p}; returns a lower bound.
inline double induced_norm_lower_bound(const Eigen::MatrixXcd& a, double p, int starts, int iterations,
                                       std::uint64_t seed) {
  if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("induced_norm_lower_bound: need 1 < p < inf");
  const double q = p / (p - 1.0);
  auto norm_p = [](const Eigen::VectorXcd& v, double e) {
    double s = 0.0;
    for (Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]), e);
    return std::pow(s, 1.0 / e);
  };
  auto dual = [&](const Eigen::VectorXcd& v, double e) {
    const double n = norm_p(v, e);
    Eigen::VectorXcd d(v.size());
    for (Index i = 0; i < v.size(); ++i) {
      const double m = std::abs(v[i]);
      d[i] = m == 0.0 ? Complex(0.0) : std::pow(m / n, e - 1.0) * (v[i] / m);
    }
    return d;
  };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double best = 0.0;
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXcd x(a.cols());
    for (Index i = 0; i < x.size(); ++i) x[i] = Complex(normal(rng), 0.0);
    x /= norm_p(x, p);
    for (int it = 0; it < iterations; ++it) {
      const Eigen::VectorXcd y = a * x;
      best = std::max(best, norm_p(y, p));
      const Eigen::VectorXcd z = a.adjoint() * dual(y, p);
      const Eigen::VectorXcd next = dual(z, q);
      if (!(norm_p(next, p) > 0.0)) break;
      x = next / norm_p(next, p);
    }
  }
  return best;
}

struct GrowthPoint {
  Complex z;
  double norm = 0.0;  ///< ||(z - s Delta)^{-1}||_{p->p}
  double scaled() const { return norm * std::abs(z.imag()); }
  double aspect() const { return std::abs(z) / std::abs(z.imag()); }
};

struct GrowthFit {
  double exponent = 2.0;
  double alpha = 0.0;         ///< fitted slope
  double log_c = 0.0;         ///< fitted intercept
  double alpha_stderr = 0.0;
  double log_c_stderr = 0.0;
  double envelope_c = 0.0;    ///< max over data of norm |Im z| / aspect^alpha
  double max_scaled = 0.0;    ///< max over data of norm |Im z|
  bool exact_norm = true;     ///< false when the norm is a power-iteration lower bound
  std::vector<GrowthPoint> points;

  double c() const { return std::exp(log_c); }
};

struct GrowthOptions {
  double scale = 1.0;          ///< operator is scale * Delta (h^2 with h = sqrt(scale))
  int power_starts = 4;
  int power_iterations = 30;
  std::uint64_t seed = 7;
  Index cap = 1024;
};

/// Measures ||(z - s Delta)^{-1}||_{p->p} over z = r e^{i theta}; fits
/// log(max_r norm |Im z|) = log c + alpha log(|z| / |Im z|) across theta.
inline GrowthFit resolvent_growth_exponent(const SpectralDecomposition& sd, double p, const std::vector<double>& thetas,
                                           const std::vector<double>& radii, const GrowthOptions& opt = {}) {
  if (!(p >= 1.0)) throw std::invalid_argument("resolvent_growth_exponent: p must be >= 1");
  if (radii.empty()) throw std::invalid_argument("resolvent_growth_exponent: empty r-grid");
  std::vector<double> distinct;
  for (double t : thetas) {
    if (!(std::abs(std::sin(t)) > 1e-12)) throw std::invalid_argument("resolvent_growth_exponent: theta on the real axis");
    const double a = -std::log(std::abs(std::sin(t)));
    if (std::none_of(distinct.begin(), distinct.end(), [&](double d) { return std::abs(d - a) < 1e-12; }))
      distinct.push_back(a);
  }
  if (distinct.size() < 2) throw std::invalid_argument("resolvent_growth_exponent: degenerate fit (need two aspect ratios)");
  const bool exact = p == 1.0 || p == 2.0 || std::isinf(p);
  if (p != 2.0 && sd.size() > opt.cap)
    throw CapacityError("resolvent_growth_exponent: resolvent matrix exceeds the cap of " + std::to_string(opt.cap));

  const Eigen::VectorXd lam = sd.eigenvalues() * opt.scale;
  Eigen::MatrixXd u;
  if (p != 2.0) u = sd.basis();

  GrowthFit fit;
  fit.exponent = p;
  fit.exact_norm = exact;
  std::vector<double> xs, ys;
  std::uint64_t seed = opt.seed;
  for (double theta : thetas) {
    double best = 0.0;
    for (double r : radii) {
      const Complex z = std::polar(r, theta);
      double norm = 0.0;
      if (p == 2.0) {
        double dist = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < lam.size(); ++i) dist = std::min(dist, std::abs(z + lam[i]));
        norm = 1.0 / dist;
      } else {
        Eigen::VectorXcd d(lam.size());
        for (Index i = 0; i < lam.size(); ++i) d[i] = 1.0 / (z + lam[i]);
        Eigen::MatrixXcd res(u.rows(), u.rows());
        res.real() = u * d.real().asDiagonal() * u.transpose();
        res.imag() = u * d.imag().asDiagonal() * u.transpose();
        if (p == 1.0)
          norm = res.cwiseAbs().colwise().sum().maxCoeff();
        else if (std::isinf(p))
          norm = res.cwiseAbs().rowwise().sum().maxCoeff();
        else
          norm = induced_norm_lower_bound(res, p, opt.power_starts, opt.power_iterations, seed++);
      }
      GrowthPoint pt{z, norm};
      fit.points.push_back(pt);
      fit.max_scaled = std::max(fit.max_scaled, pt.scaled());
      best = std::max(best, pt.scaled());
    }
    xs.push_back(-std::log(std::abs(std::sin(theta))));
    ys.push_back(std::log(best));
  }

  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  fit.alpha = (n * sxy - sx * sy) / denom;
  fit.log_c = (sy - fit.alpha * sx) / n;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - fit.log_c - fit.alpha * xs[i];
    rss += e * e;
  }
  fit.alpha_stderr = xs.size() > 2 ? std::sqrt(rss / (n - 2) * n / denom) : 0.0;
  fit.log_c_stderr = xs.size() > 2 ? std::sqrt(rss / (n - 2) * sxx / denom) : 0.0;
  for (const auto& pt : fit.points)
    fit.envelope_c = std::max(fit.envelope_c, pt.scaled() / std::pow(pt.aspect(), fit.alpha));
  return fit;
}

/// sum_{m<=N+1} int |Psi^(m)| <x>^{m-1} dx: the right side of the L^p bound
/// on Psi(-h^2 Delta) obtained from the DHS integral.
inline double dhs_norm_bound(const AlmostAnalyticExtension& ext) { return psi_norm(ext.symbol(), ext.order() + 1); }

}  // namespace hslab
