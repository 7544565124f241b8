#pragma once

// Seeded test-field corpora. Fields other than eigenvectors are defined by
// physical coordinates, so the same spec yields comparable fields on
// refined grids of the same domain.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hslab/heat_flow.hpp"

namespace hslab {

inline const std::vector<std::string>& corpus_kinds() {
  static const std::vector<std::string> kinds{"eigenvector", "band_limited", "boundary_layer", "indicator"};
  return kinds;
}

struct CorpusSpec {
  std::vector<std::string> kinds{"band_limited"};
  int count = 8;           ///< total members, dealt to the kinds round-robin
  int components = 1;
  std::uint64_t seed = 1;
  int band_modes = 6;      ///< sine indices 1..band_modes per axis
  double layer_min = 0.03; ///< boundary-layer width range, fraction of the box diameter
  double layer_max = 0.2;
  double indicator_width = 0.0;  ///< fraction of the box side; 0 means one cell
};

struct CorpusMember {
  std::string kind;
  int index = 0;
  Field field;
  std::string id() const { return kind + "/" + std::to_string(index); }
};

namespace detail {

inline std::mt19937_64 member_rng(std::uint64_t seed, std::size_t kind, int index, int component) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(kind), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(component)};
  return std::mt19937_64(seq);
}

inline std::array<double, 2> box_lengths(const GridDomain& d) {
  return {(d.box_x() - 1) * d.spacing(), d.dimension() == 2 ? (d.box_y() - 1) * d.spacing() : 0.0};
}

// Random sine series on the bounding box, projected onto the spectral band
// lambda <= the largest discrete eigenvalue of the series' modes. On full
// boxes the series already lies in that band and the projection is exact.
inline Eigen::VectorXd band_limited(const DirichletProblem& p, int modes, std::mt19937_64& rng) {
  const GridDomain& d = p.domain;
  const auto len = box_lengths(d);
  const int my = d.dimension() == 2 ? modes : 1;
  std::normal_distribution<double> normal;
  Eigen::MatrixXd c(modes, my);
  for (int n = 0; n < my; ++n)
    for (int m = 0; m < modes; ++m) c(m, n) = normal(rng) / ((m + 1) * (n + 1));
  Eigen::VectorXd v(d.size());
  for (Index i = 0; i < d.size(); ++i) {
    const auto x = d.position(d.cell(i));
    double s = 0.0;
    for (int n = 0; n < my; ++n) {
      const double sy = d.dimension() == 2 ? std::sin((n + 1) * std::numbers::pi * x[1] / len[1]) : 1.0;
      for (int m = 0; m < modes; ++m) s += c(m, n) * std::sin((m + 1) * std::numbers::pi * x[0] / len[0]) * sy;
    }
    v[i] = s;
  }
  const double h = d.spacing();
  auto line = [&](int m, double l) {
    const double s = std::sin(m * std::numbers::pi * h / (2.0 * l));
    return 4.0 * s * s / (h * h);
  };
  const double cut = line(modes, len[0]) + (d.dimension() == 2 ? line(modes, len[1]) : 0.0);
  Eigen::MatrixXd coeff = p.spectrum.coefficients(v);
  const Eigen::VectorXd& lam = p.spectrum.eigenvalues();
  for (Index i = 0; i < coeff.rows(); ++i)
    if (lam[i] > cut * (1.0 + 1e-12)) coeff(i, 0) = 0.0;
  return p.spectrum.synthesize(coeff).col(0);
}

// (d / delta) e^{1 - d / delta} in the boundary distance d, peak 1 at d = delta.
inline Eigen::VectorXd boundary_layer(const GridDomain& d, const std::vector<double>& dist, double lo, double hi,
                                      std::mt19937_64& rng) {
  const auto len = box_lengths(d);
  const double diam = std::hypot(len[0], len[1]);
  std::uniform_real_distribution<double> u(lo, hi);
  const double delta = u(rng) * diam;
  Eigen::VectorXd v(d.size());
  for (Index i = 0; i < d.size(); ++i) v[i] = dist[static_cast<std::size_t>(i)] / delta * std::exp(1.0 - dist[static_cast<std::size_t>(i)] / delta);
  return v;
}

// Indicator of an axis-aligned square at a random interior point; the cell
// nearest to the center is always included.
inline Eigen::VectorXd indicator(const GridDomain& d, double width, std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> pick(0, d.size() - 1);
  const auto center = d.position(d.cell(pick(rng)));
  const auto len = box_lengths(d);
  const double half = 0.5 * width * std::max(len[0], len[1]);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d.size());
  for (Index i = 0; i < d.size(); ++i) {
    const auto x = d.position(d.cell(i));
    const double r = std::max(std::abs(x[0] - center[0]), std::abs(x[1] - center[1]));
    if (r <= half + 1e-12 * d.spacing() || r == 0.0) v[i] = 1.0;
  }
  return v;
}

}  // namespace detail

/// Deterministic in (spec, domain). Eigenvector members use consecutive
/// eigenvectors for their components, starting at `index * components`.
inline std::vector<CorpusMember> generate_corpus(const DirichletProblem& p, const CorpusSpec& spec) {
  if (spec.count < 0) throw std::invalid_argument("generate_corpus: negative count");
  if (spec.components < 1) throw std::invalid_argument("generate_corpus: components must be positive");
  if (spec.band_modes < 1) throw std::invalid_argument("generate_corpus: band_modes must be positive");
  if (!(spec.layer_min > 0.0) || !(spec.layer_max >= spec.layer_min))
    throw std::invalid_argument("generate_corpus: need 0 < layer_min <= layer_max");
  if (!(spec.indicator_width >= 0.0)) throw std::invalid_argument("generate_corpus: negative indicator width");
  for (const auto& k : spec.kinds)
    if (std::find(corpus_kinds().begin(), corpus_kinds().end(), k) == corpus_kinds().end())
      throw std::invalid_argument("generate_corpus: unknown kind '" + k + "'");

  if (spec.count > 0 && spec.kinds.empty()) throw std::invalid_argument("generate_corpus: no kinds given");

  const GridDomain& d = p.domain;
  std::vector<double> dist;
  std::vector<CorpusMember> out;
  const int kinds = static_cast<int>(spec.kinds.size());
  for (int n = 0; n < spec.count; ++n) {
    const std::size_t ki = static_cast<std::size_t>(n % kinds);
    const int m = n / kinds;
    const std::string& kind = spec.kinds[ki];
    if (kind == "boundary_layer" && dist.empty())
      for (Index i = 0; i < d.size(); ++i) dist.push_back(d.boundary_distance(i));
    Eigen::MatrixXd values(d.size(), spec.components);
    for (int c = 0; c < spec.components; ++c) {
      auto rng = detail::member_rng(spec.seed, ki, m, c);
      if (kind == "eigenvector") {
        const Index e = (static_cast<Index>(m) * spec.components + c) % d.size();
        values.col(c) = p.spectrum.eigenvector(e).values.col(0);
      } else if (kind == "band_limited") {
        values.col(c) = detail::band_limited(p, spec.band_modes, rng);
      } else if (kind == "boundary_layer") {
        values.col(c) = detail::boundary_layer(d, dist, spec.layer_min, spec.layer_max, rng);
      } else {
        values.col(c) = detail::indicator(d, spec.indicator_width, rng);
      }
      if (!(values.col(c).cwiseAbs().maxCoeff() > 0.0))
        throw std::runtime_error("generate_corpus: " + kind + " member " + std::to_string(m) + " vanished");
    }
    out.push_back({kind, m, Field{values, d.cell_weight()}});
  }
  return out;
}

}  // namespace hslab
