#pragma once

// Cell-centered grid domains with Dirichlet zero-extension, the sparse
// Laplacian/gradient stencils built on them, and weighted L^p norms.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace hslab {

using Index = Eigen::Index;

/// Grid function: one row per point, one column per component. Norms use
/// the cell weight h^n of the owning domain.
template <class Scalar>
struct BasicField {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix values;
  double cell_weight = 1.0;

  Index points() const { return values.rows(); }
  Index components() const { return values.cols(); }
};

using Field = BasicField<double>;
using ComplexField = BasicField<std::complex<double>>;

/// (sum_x |f(x)|^p h^n)^{1/p}, max for p = inf; |f(x)| is the Euclidean
/// norm over components.
template <class Scalar>
double lp_norm(const BasicField<Scalar>& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  if (f.values.size() == 0) return 0.0;
  const Eigen::VectorXd modulus = f.values.rowwise().stableNorm();
  const double peak = modulus.maxCoeff();
  if (std::isinf(p)) return peak;
  if (peak == 0.0) return 0.0;
  if (p == 2.0) return std::sqrt(f.cell_weight) * modulus.stableNorm();
  double acc = 0.0;
  for (Index i = 0; i < modulus.size(); ++i) acc += std::pow(modulus[i] / peak, p);
  return peak * std::pow(acc * f.cell_weight, 1.0 / p);
}

template <class Scalar>
double inner_product(const BasicField<Scalar>& f, const BasicField<Scalar>& g) {
  return f.cell_weight * std::real((f.values.conjugate().cwiseProduct(g.values)).sum());
}

struct Cell {
  int ix = 0;
  int iy = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct IntervalSpec {
  double length = 1.0;
  int cells = 1;
};

struct RectangleSpec {
  double width = 1.0;
  double height = 1.0;
  int cells_x = 1;
  int cells_y = 1;
};

/// Rectangle minus a block of cells; obstacle given in interior cell indices.
struct ObstacleSpec {
  RectangleSpec outer;
  int x0 = 0;
  int y0 = 0;
  int size_x = 0;
  int size_y = 0;
};

/// Explicit mask: rows[y][x] in {'1','#'} marks interior cells.
struct MaskSpec {
  int dimension = 2;
  double spacing = 1.0;
  std::vector<std::string> rows;
};

using DomainDescriptor = std::variant<IntervalSpec, RectangleSpec, ObstacleSpec, MaskSpec>;

/// Cell-centered domain. The stored box carries one ring of exterior cells
/// on every side (none along y in 1D), so the zero extension needed by the
/// gradient stencil is always addressable. Exterior cell centers adjacent to
/// the interior lie on the boundary.
class GridDomain {
 public:
  /// `interior` is nx * ny, row-major with x fastest; dimension 1 requires ny == 1.
  GridDomain(int dimension, double spacing, int nx, int ny, const std::vector<std::uint8_t>& interior)
      : dim_(dimension), h_(spacing) {
    if (dim_ != 1 && dim_ != 2) throw std::invalid_argument("GridDomain: dimension must be 1 or 2");
    if (!(h_ > 0.0) || !std::isfinite(h_)) throw std::invalid_argument("GridDomain: spacing must be positive");
    if (nx < 1 || ny < 1 || (dim_ == 1 && ny != 1))
      throw std::invalid_argument("GridDomain: bad box extent");
    if (interior.size() != static_cast<std::size_t>(nx) * ny)
      throw std::invalid_argument("GridDomain: mask size does not match box");
    nx_ = nx;
    ny_ = ny;
    bx_ = nx + 2;
    by_ = dim_ == 2 ? ny + 2 : 1;
    const int pad_y = dim_ == 2 ? 1 : 0;
    mask_.assign(static_cast<std::size_t>(bx_) * by_, 0);
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x)
        mask_[box_index(x + 1, y + pad_y)] = interior[static_cast<std::size_t>(y) * nx + x] ? 1 : 0;

    dof_of_.assign(mask_.size(), -1);
    for (int y = 0; y < by_; ++y)
      for (int x = 0; x < bx_; ++x)
        if (mask_[box_index(x, y)]) {
          dof_of_[box_index(x, y)] = static_cast<Index>(cells_.size());
          cells_.push_back({x, y});
        }
    if (cells_.empty()) throw std::invalid_argument("GridDomain: empty interior");
    if (!connected()) throw std::invalid_argument("GridDomain: disconnected interior");

    for (int y = 0; y < by_; ++y)
      for (int x = 0; x < bx_; ++x) {
        bool touches = mask_[box_index(x, y)] != 0 || is_interior(x + 1, y);
        if (dim_ == 2) touches = touches || is_interior(x, y + 1);
        if (touches) staggered_.push_back({x, y});
      }
  }

  int dimension() const { return dim_; }
  double spacing() const { return h_; }
  double cell_weight() const { return dim_ == 1 ? h_ : h_ * h_; }

  /// Interior extent without the padding ring.
  int extent_x() const { return nx_; }
  int extent_y() const { return ny_; }
  int box_x() const { return bx_; }
  int box_y() const { return by_; }

  Index size() const { return static_cast<Index>(cells_.size()); }
  const Cell& cell(Index dof) const { return cells_[static_cast<std::size_t>(dof)]; }

  bool is_interior(int x, int y) const {
    if (x < 0 || y < 0 || x >= bx_ || y >= by_) return false;
    return mask_[box_index(x, y)] != 0;
  }

  /// Degree of freedom of a box cell, -1 when exterior.
  Index dof(int x, int y) const {
    if (x < 0 || y < 0 || x >= bx_ || y >= by_) return -1;
    return dof_of_[box_index(x, y)];
  }

  /// Cells carrying forward differences: interior cells and exterior cells
  /// with an interior forward neighbor. Gradient fields live here.
  const std::vector<Cell>& staggered_cells() const { return staggered_; }
  Index staggered_size() const { return static_cast<Index>(staggered_.size()); }

  bool is_full_box() const { return size() == static_cast<Index>(nx_) * ny_; }

  /// Physical coordinates of a box cell center; the box origin lies on the boundary.
  std::array<double, 2> position(const Cell& c) const {
    return {c.ix * h_, dim_ == 2 ? c.iy * h_ : 0.0};
  }

  /// Distance from an interior cell center to the nearest exterior cell center.
  double boundary_distance(Index dof) const {
    const Cell& c = cell(dof);
    double best = std::numeric_limits<double>::infinity();
    for (int y = 0; y < by_; ++y)
      for (int x = 0; x < bx_; ++x)
        if (!mask_[box_index(x, y)]) {
          const double dx = x - c.ix;
          const double dy = y - c.iy;
          best = std::min(best, std::sqrt(dx * dx + dy * dy));
        }
    return best * h_;
  }

  /// Same box with every cell interior; the free-grid companion.
  GridDomain filled() const {
    return GridDomain(dim_, h_, nx_, ny_, std::vector<std::uint8_t>(static_cast<std::size_t>(nx_) * ny_, 1));
  }

 private:
  std::size_t box_index(int x, int y) const { return static_cast<std::size_t>(y) * bx_ + x; }

  bool connected() const {
    std::vector<std::uint8_t> seen(cells_.size(), 0);
    std::queue<Index> q;
    q.push(0);
    seen[0] = 1;
    std::size_t count = 1;
    const int offsets[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    while (!q.empty()) {
      const Cell c = cells_[static_cast<std::size_t>(q.front())];
      q.pop();
      for (const auto& o : offsets) {
        const Index d = dof(c.ix + o[0], c.iy + o[1]);
        if (d >= 0 && !seen[static_cast<std::size_t>(d)]) {
          seen[static_cast<std::size_t>(d)] = 1;
          ++count;
          q.push(d);
        }
      }
    }
    return count == cells_.size();
  }

  int dim_;
  double h_;
  int nx_ = 0, ny_ = 0, bx_ = 0, by_ = 0;
  std::vector<std::uint8_t> mask_;
  std::vector<Index> dof_of_;
  std::vector<Cell> cells_;
  std::vector<Cell> staggered_;
};

namespace detail {

inline double uniform_spacing(double length, int cells, const char* what) {
  if (cells < 1) throw std::invalid_argument(std::string(what) + ": need at least one cell");
  if (!(length > 0.0)) throw std::invalid_argument(std::string(what) + ": length must be positive");
  return length / (cells + 1);
}

}  // namespace detail

inline GridDomain build_domain(const DomainDescriptor& desc) {
  struct Builder {
    GridDomain operator()(const IntervalSpec& s) const {
      const double h = detail::uniform_spacing(s.length, s.cells, "interval");
      return GridDomain(1, h, s.cells, 1, std::vector<std::uint8_t>(static_cast<std::size_t>(s.cells), 1));
    }
    GridDomain operator()(const RectangleSpec& s) const { return rectangle(s, 0, 0, 0, 0); }
    GridDomain operator()(const ObstacleSpec& s) const {
      if (s.size_x < 1 || s.size_y < 1) throw std::invalid_argument("obstacle: empty obstacle");
      if (s.x0 < 0 || s.y0 < 0 || s.x0 + s.size_x > s.outer.cells_x || s.y0 + s.size_y > s.outer.cells_y)
        throw std::invalid_argument("obstacle: obstacle leaves the outer rectangle");
      return rectangle(s.outer, s.x0, s.y0, s.size_x, s.size_y);
    }
    GridDomain operator()(const MaskSpec& s) const {
      if (s.rows.empty()) throw std::invalid_argument("mask: no rows");
      const int nx = static_cast<int>(s.rows.front().size());
      const int ny = static_cast<int>(s.rows.size());
      if (s.dimension == 1 && ny != 1) throw std::invalid_argument("mask: 1D mask must have one row");
      std::vector<std::uint8_t> m(static_cast<std::size_t>(nx) * ny, 0);
      for (int y = 0; y < ny; ++y) {
        if (static_cast<int>(s.rows[y].size()) != nx) throw std::invalid_argument("mask: ragged rows");
        for (int x = 0; x < nx; ++x) {
          const char ch = s.rows[y][x];
          m[static_cast<std::size_t>(y) * nx + x] = (ch == '1' || ch == '#') ? 1 : 0;
        }
      }
      return GridDomain(s.dimension, s.spacing, nx, ny, m);
    }

    static GridDomain rectangle(const RectangleSpec& s, int x0, int y0, int wx, int wy) {
      const double hx = detail::uniform_spacing(s.width, s.cells_x, "rectangle");
      const double hy = detail::uniform_spacing(s.height, s.cells_y, "rectangle");
      if (std::abs(hx - hy) > 1e-12 * hx) throw std::invalid_argument("rectangle: anisotropic spacing");
      std::vector<std::uint8_t> m(static_cast<std::size_t>(s.cells_x) * s.cells_y, 1);
      for (int y = y0; y < y0 + wy; ++y)
        for (int x = x0; x < x0 + wx; ++x) m[static_cast<std::size_t>(y) * s.cells_x + x] = 0;
      return GridDomain(2, hx, s.cells_x, s.cells_y, m);
    }
  };
  return std::visit(Builder{}, desc);
}

enum class Definiteness {
  kNegativeDefinite,
  kNegativeSemidefinite,
  kPositiveDefinite,
  kPositiveSemidefinite,
  kIndefinite
};

struct SparseOperator {
  Eigen::SparseMatrix<double> matrix;
  bool symmetric = false;
  Definiteness definiteness = Definiteness::kIndefinite;

  Index rows() const { return matrix.rows(); }
  Index cols() const { return matrix.cols(); }

  template <class Scalar>
  BasicField<Scalar> apply(const BasicField<Scalar>& f) const {
    if (f.points() != matrix.cols()) throw std::invalid_argument("SparseOperator::apply: size mismatch");
    return {matrix.template cast<Scalar>() * f.values, f.cell_weight};
  }
};

namespace detail {

inline SparseOperator laplacian(const GridDomain& d, bool dirichlet) {
  const double inv_h2 = 1.0 / (d.spacing() * d.spacing());
  const int neighbors = 2 * d.dimension();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(d.size()) * (neighbors + 1));
  for (Index i = 0; i < d.size(); ++i) {
    const Cell& c = d.cell(i);
    const int off[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    int inside = 0;
    for (int k = 0; k < neighbors; ++k) {
      const Index j = d.dof(c.ix + off[k][0], c.iy + off[k][1]);
      if (j >= 0) {
        t.emplace_back(i, j, inv_h2);
        ++inside;
      }
    }
    t.emplace_back(i, i, -(dirichlet ? neighbors : inside) * inv_h2);
  }
  SparseOperator op;
  op.matrix.resize(d.size(), d.size());
  op.matrix.setFromTriplets(t.begin(), t.end());
  op.symmetric = true;
  op.definiteness = dirichlet ? Definiteness::kNegativeDefinite : Definiteness::kNegativeSemidefinite;
  return op;
}

}  // namespace detail

/// 3-/5-point Laplacian scaled by 1/h^2 with zero extension outside the mask.
inline SparseOperator dirichlet_laplacian(const GridDomain& d) { return detail::laplacian(d, true); }

/// Reflecting stencil: no flux across the mask boundary, constants in the kernel.
inline SparseOperator neumann_laplacian(const GridDomain& d) { return detail::laplacian(d, false); }

/// Forward differences on the staggered cells, stacked by axis:
/// rows [a * S, (a+1) * S) hold the axis-a component, S = staggered_size().
/// G^T G equals minus the Dirichlet Laplacian.
inline SparseOperator gradient(const GridDomain& d) {
  const Index s = d.staggered_size();
  const double inv_h = 1.0 / d.spacing();
  std::vector<Eigen::Triplet<double>> t;
  for (int axis = 0; axis < d.dimension(); ++axis) {
    for (Index k = 0; k < s; ++k) {
      const Cell& c = d.staggered_cells()[static_cast<std::size_t>(k)];
      const Index here = d.dof(c.ix, c.iy);
      const Index ahead = axis == 0 ? d.dof(c.ix + 1, c.iy) : d.dof(c.ix, c.iy + 1);
      const Index row = axis * s + k;
      if (ahead >= 0) t.emplace_back(row, ahead, inv_h);
      if (here >= 0) t.emplace_back(row, here, -inv_h);
    }
  }
  SparseOperator op;
  op.matrix.resize(d.dimension() * s, d.size());
  op.matrix.setFromTriplets(t.begin(), t.end());
  return op;
}

/// Apply a stacked gradient to every component of f. The result has one row
/// per staggered cell and components ordered (component, axis).
template <class Scalar>
BasicField<Scalar> apply_gradient(const SparseOperator& grad, int dimension, const BasicField<Scalar>& f) {
  if (f.points() != grad.cols()) throw std::invalid_argument("apply_gradient: size mismatch");
  const Index s = grad.rows() / dimension;
  const typename BasicField<Scalar>::Matrix stacked = grad.matrix.template cast<Scalar>() * f.values;
  BasicField<Scalar> out{typename BasicField<Scalar>::Matrix(s, f.components() * dimension), f.cell_weight};
  for (Index l = 0; l < f.components(); ++l)
    for (int a = 0; a < dimension; ++a) out.values.col(l * dimension + a) = stacked.col(l).segment(a * s, s);
  return out;
}

/// Discrete divergence -G^T of a field laid out as apply_gradient produces.
template <class Scalar>
BasicField<Scalar> apply_divergence(const SparseOperator& grad, int dimension, const BasicField<Scalar>& v) {
  const Index s = grad.rows() / dimension;
  if (v.points() != s || v.components() % dimension != 0)
    throw std::invalid_argument("apply_divergence: layout mismatch");
  const Index n = v.components() / dimension;
  typename BasicField<Scalar>::Matrix stacked(grad.rows(), n);
  for (Index l = 0; l < n; ++l)
    for (int a = 0; a < dimension; ++a) stacked.col(l).segment(a * s, s) = v.values.col(l * dimension + a);
  return {-(grad.matrix.transpose().template cast<Scalar>() * stacked), v.cell_weight};
}

}  // namespace hslab
