#pragma once

// Exact functional calculus by eigendecomposition. Full rectangles use the
// separable tensor-product eigenbasis; other masks use a dense symmetric
// eigensolve capped at kDefaultDenseCap degrees of freedom.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "hslab/grid_domain.hpp"
#include "hslab/symbols.hpp"

namespace hslab {

inline constexpr Index kDefaultDenseCap = 4096;

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Eigenpairs of the nonnegative generator (-A for a Laplacian, A otherwise).
/// Coefficients are taken against the Euclidean-orthonormal basis U; the
/// h^n-weighted orthonormal eigenvectors are U / h^{n/2}, so multipliers
/// U m(L) U^T f are the same in either normalization.
class SpectralDecomposition {
 public:
  static SpectralDecomposition dense(const Eigen::MatrixXd& generator, double cell_weight) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(generator);
    if (es.info() != Eigen::Success) throw std::runtime_error("SpectralDecomposition: eigensolver failed");
    SpectralDecomposition sd;
    sd.weight_ = cell_weight;
    sd.values_ = es.eigenvalues();
    sd.dense_basis_ = es.eigenvectors();
    sd.separable_ = false;
    return sd;
  }

  /// Tensor product of two Euclidean-orthonormal 1D eigenbases; the 2D
  /// degree of freedom is ix + nx * iy.
  static SpectralDecomposition separable(const Eigen::VectorXd& lx, const Eigen::MatrixXd& vx,
                                         const Eigen::VectorXd& ly, const Eigen::MatrixXd& vy,
                                         double cell_weight) {
    SpectralDecomposition sd;
    sd.weight_ = cell_weight;
    sd.separable_ = true;
    sd.vx_ = vx;
    sd.vy_ = vy;
    const Index nx = lx.size();
    const Index ny = ly.size();
    std::vector<double> grid(static_cast<std::size_t>(nx * ny));
    for (Index y = 0; y < ny; ++y)
      for (Index x = 0; x < nx; ++x) grid[static_cast<std::size_t>(x + nx * y)] = lx[x] + ly[y];
    sd.order_.resize(grid.size());
    std::iota(sd.order_.begin(), sd.order_.end(), Index{0});
    std::stable_sort(sd.order_.begin(), sd.order_.end(),
                     [&](Index a, Index b) { return grid[static_cast<std::size_t>(a)] < grid[static_cast<std::size_t>(b)]; });
    sd.values_.resize(nx * ny);
    for (std::size_t r = 0; r < sd.order_.size(); ++r) sd.values_[static_cast<Index>(r)] = grid[static_cast<std::size_t>(sd.order_[r])];
    return sd;
  }

  Index size() const { return values_.size(); }
  double cell_weight() const { return weight_; }
  const Eigen::VectorXd& eigenvalues() const { return values_; }
  double lambda_min() const { return values_[0]; }
  double lambda_max() const { return values_[values_.size() - 1]; }
  bool is_separable() const { return separable_; }

  /// Spectral coefficients (rows sorted by eigenvalue) of every column.
  Eigen::MatrixXd coefficients(const Eigen::MatrixXd& f) const {
    if (f.rows() != size()) throw std::invalid_argument("SpectralDecomposition: size mismatch");
    if (!separable_) return dense_basis_.transpose() * f;
    const Index nx = vx_.rows();
    const Index ny = vy_.rows();
    Eigen::MatrixXd out(size(), f.cols());
    Eigen::MatrixXd grid(nx, ny);
    for (Index c = 0; c < f.cols(); ++c) {
      const Eigen::Map<const Eigen::MatrixXd> m(f.col(c).data(), nx, ny);
      grid.noalias() = vx_.transpose() * m * vy_;
      for (Index r = 0; r < size(); ++r) out(r, c) = grid.data()[order_[static_cast<std::size_t>(r)]];
    }
    return out;
  }

  /// Inverse of coefficients().
  Eigen::MatrixXd synthesize(const Eigen::MatrixXd& c) const {
    if (c.rows() != size()) throw std::invalid_argument("SpectralDecomposition: size mismatch");
    if (!separable_) return dense_basis_ * c;
    const Index nx = vx_.rows();
    const Index ny = vy_.rows();
    Eigen::MatrixXd out(size(), c.cols());
    Eigen::MatrixXd grid(nx, ny);
    for (Index k = 0; k < c.cols(); ++k) {
      for (Index r = 0; r < size(); ++r) grid.data()[order_[static_cast<std::size_t>(r)]] = c(r, k);
      Eigen::Map<Eigen::MatrixXd> m(out.col(k).data(), nx, ny);
      m.noalias() = vx_ * grid * vy_.transpose();
    }
    return out;
  }

  Eigen::MatrixXcd synthesize(const Eigen::MatrixXcd& c) const {
    const Eigen::MatrixXd re = synthesize(Eigen::MatrixXd(c.real()));
    const Eigen::MatrixXd im = synthesize(Eigen::MatrixXd(c.imag()));
    Eigen::MatrixXcd out(re.rows(), re.cols());
    out.real() = re;
    out.imag() = im;
    return out;
  }

  /// Euclidean-orthonormal basis as a dense matrix (columns sorted by eigenvalue).
  Eigen::MatrixXd basis() const {
    if (!separable_) return dense_basis_;
    return synthesize(Eigen::MatrixXd(Eigen::MatrixXd::Identity(size(), size())));
  }

  /// i-th eigenvector, orthonormal in the h^n-weighted inner product.
  Field eigenvector(Index i) const {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(size(), 1);
    e(i, 0) = 1.0 / std::sqrt(weight_);
    return {synthesize(e), weight_};
  }

 private:
  SpectralDecomposition() = default;

  double weight_ = 1.0;
  Eigen::VectorXd values_;
  bool separable_ = false;
  Eigen::MatrixXd dense_basis_;
  Eigen::MatrixXd vx_, vy_;
  std::vector<Index> order_;
};

/// Dense eigendecomposition of a symmetric operator. Laplacian-type
/// operators (negative definiteness tags) are decomposed as -A.
inline SpectralDecomposition decompose(const SparseOperator& a, double cell_weight = 1.0,
                                       Index cap = kDefaultDenseCap) {
  if (a.rows() != a.cols()) throw std::invalid_argument("decompose: operator is not square");
  if (!a.symmetric) throw std::invalid_argument("decompose: operator is not symmetric");
  if (a.rows() > cap)
    throw CapacityError("decompose: " + std::to_string(a.rows()) + " degrees of freedom exceed the dense cap of " +
                        std::to_string(cap) + "; use the separable rectangle path or the iterative heat-flow/DHS paths");
  const bool negative = a.definiteness == Definiteness::kNegativeDefinite ||
                        a.definiteness == Definiteness::kNegativeSemidefinite;
  Eigen::MatrixXd m = Eigen::MatrixXd(a.matrix);
  if (negative) m = -m;
  return SpectralDecomposition::dense(m, cell_weight);
}

/// Decomposition of -Delta_D on a domain; separable when the mask is a full box.
inline SpectralDecomposition dirichlet_spectrum(const GridDomain& d, Index cap = kDefaultDenseCap) {
  if (d.dimension() == 2 && d.is_full_box()) {
    auto line = [&](int cells) {
      const GridDomain seg(1, d.spacing(), cells, 1, std::vector<std::uint8_t>(static_cast<std::size_t>(cells), 1));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-Eigen::MatrixXd(dirichlet_laplacian(seg).matrix));
      return std::pair{Eigen::VectorXd(es.eigenvalues()), Eigen::MatrixXd(es.eigenvectors())};
    };
    const auto [lx, vx] = line(d.extent_x());
    const auto [ly, vy] = line(d.extent_y());
    return SpectralDecomposition::separable(lx, vx, ly, vy, d.cell_weight());
  }
  return decompose(dirichlet_laplacian(d), d.cell_weight(), cap);
}

/// sum_i m(l_i) v_i <v_i, f>, applied per component.
template <class Multiplier>
auto apply_multiplier(const SpectralDecomposition& sd, Multiplier&& m, const Field& f) {
  using Value = std::decay_t<decltype(m(0.0))>;
  const Eigen::MatrixXd c = sd.coefficients(f.values);
  const Eigen::VectorXd& lam = sd.eigenvalues();
  if constexpr (std::is_same_v<Value, std::complex<double>>) {
    Eigen::MatrixXcd scaled(c.rows(), c.cols());
    for (Index i = 0; i < c.rows(); ++i) scaled.row(i) = m(lam[i]) * c.row(i).cast<std::complex<double>>();
    return ComplexField{sd.synthesize(scaled), f.cell_weight};
  } else {
    Eigen::MatrixXd scaled = c;
    for (Index i = 0; i < c.rows(); ++i) scaled.row(i) *= static_cast<double>(m(lam[i]));
    return Field{sd.synthesize(scaled), f.cell_weight};
  }
}

/// Delta_j f = Psi(4^-j (-Delta)) f.
inline Field lp_block(const SpectralDecomposition& sd, const DyadicSymbolFamily& family, int j, const Field& f) {
  return apply_multiplier(sd, [&](double lam) { return family.block_value(j, lam); }, f);
}

/// ||(z - Delta)^{-1}||_{2->2} = 1 / min_i |z + l_i|.
inline double exact_resolvent_norm2(const SpectralDecomposition& sd, std::complex<double> z) {
  double dist = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < sd.size(); ++i) dist = std::min(dist, std::abs(z + sd.eigenvalues()[i]));
  if (dist == 0.0) throw std::domain_error("exact_resolvent_norm2: z lies on the spectrum");
  return 1.0 / dist;
}

}  // namespace hslab
