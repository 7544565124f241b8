#pragma once

// Experiment configuration: a JSON document with one section per suite.
// Every value has a default except `seed`; parse errors name the field path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "hslab/corpus.hpp"
#include "hslab/dhs.hpp"
#include "hslab/grid_domain.hpp"

namespace hslab::harness {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what) : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"identities", "dhs-convergence", "equivalences", "orthogonality",
                                              "resolvent",  "heatflow-bounds", "khintchine"};
  return names;
}

/// A JSON object plus its path, with typed accessors that reject unknown keys.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return j_.contains(key); }
  std::string at(const std::string& key) const { return path_ + "." + key; }

  void allow_only(std::initializer_list<const char*> keys) const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
        throw ConfigError(at(it.key()), "unknown key");
  }

  Section section(const std::string& key) const {
    static const json empty = json::object();
    return has(key) ? Section(j_.at(key), at(key)) : Section(empty, at(key));
  }
  const json& raw(const std::string& key) const { return j_.at(key); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return as_number(j_.at(key), at(key));
  }
  double positive(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0.0)) throw ConfigError(at(key), "must be positive");
    return v;
  }
  int integer(const std::string& key, int fallback, int min = std::numeric_limits<int>::min()) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    const auto i = v.get<long long>();
    if (i < min || i > std::numeric_limits<int>::max())
      throw ConfigError(at(key), "must be at least " + std::to_string(min));
    return static_cast<int>(i);
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) throw ConfigError(at(key), "expected a string");
    return j_.at(key).get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(at(key), "expected a non-empty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], at(key) + "[" + std::to_string(i) + "]"));
    return out;
  }
  std::vector<int> integers(const std::string& key, std::vector<int> fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(at(key), "expected a non-empty array");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected an integer");
      out.push_back(v[i].get<int>());
    }
    return out;
  }
  std::pair<double, double> window(const std::string& key, std::pair<double, double> fallback) const {
    if (!has(key)) return fallback;
    const auto v = numbers(key, {});
    if (v.size() != 2 || !(v[0] > 0.0) || !(v[1] >= v[0])) throw ConfigError(at(key), "expected [lo, hi] with 0 < lo <= hi");
    return {v[0], v[1]};
  }

  /// Exponent list; "inf" is accepted for p = infinity.
  std::vector<double> exponents(const std::string& key, std::vector<double> fallback, double min = 1.0) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(at(key), "expected a non-empty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = at(key) + "[" + std::to_string(i) + "]";
      const double e = v[i].is_string() && v[i].get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                                                              : as_number(v[i], p);
      if (!(e >= min)) throw ConfigError(p, "exponent must be at least " + std::to_string(min));
      out.push_back(e);
    }
    return out;
  }

 private:
  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path, "must be finite");
    return d;
  }

  const json& j_;
  std::string path_;
};

struct NamedDomain {
  std::string name;
  DomainDescriptor descriptor;
};

/// {"kind": "interval" | "rectangle" | "obstacle" | "mask", ...}; checked by building it.
inline NamedDomain parse_domain(const Section& s, const std::string& fallback_name) {
  const std::string kind = s.string("kind", "");
  NamedDomain d;
  d.name = s.string("name", fallback_name);
  auto rect = [](const Section& r) {
    r.allow_only({"kind", "name", "width", "height", "cells_x", "cells_y"});
    return RectangleSpec{r.positive("width", 1.0), r.positive("height", 1.0), r.integer("cells_x", 16, 1),
                         r.integer("cells_y", 16, 1)};
  };
  if (kind == "interval") {
    s.allow_only({"kind", "name", "length", "cells"});
    d.descriptor = IntervalSpec{s.positive("length", 1.0), s.integer("cells", 100, 1)};
  } else if (kind == "rectangle") {
    d.descriptor = rect(s);
  } else if (kind == "obstacle") {
    s.allow_only({"kind", "name", "outer", "x0", "y0", "size_x", "size_y"});
    d.descriptor = ObstacleSpec{rect(s.section("outer")), s.integer("x0", 0, 0), s.integer("y0", 0, 0),
                                s.integer("size_x", 1, 1), s.integer("size_y", 1, 1)};
  } else if (kind == "mask") {
    s.allow_only({"kind", "name", "dimension", "spacing", "rows"});
    MaskSpec m;
    m.dimension = s.integer("dimension", 2, 1);
    m.spacing = s.positive("spacing", 1.0);
    if (!s.has("rows") || !s.raw("rows").is_array()) throw ConfigError(s.at("rows"), "expected an array of strings");
    for (std::size_t i = 0; i < s.raw("rows").size(); ++i) {
      const json& r = s.raw("rows")[i];
      if (!r.is_string()) throw ConfigError(s.at("rows") + "[" + std::to_string(i) + "]", "expected a string");
      m.rows.push_back(r.get<std::string>());
    }
    d.descriptor = m;
  } else {
    throw ConfigError(s.at("kind"), "expected one of interval, rectangle, obstacle, mask");
  }
  try {
    (void)build_domain(d.descriptor);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.path(), e.what());
  }
  return d;
}

inline NamedDomain parse_domain_or(const Section& parent, const std::string& key, NamedDomain fallback) {
  if (!parent.has(key)) return fallback;
  return parse_domain(parent.section(key), key);
}

struct SymbolConfig {
  double a = 1.0;
  int order = 4;       ///< N of the almost-analytic extension
  int max_order = 8;   ///< derivative tower M_max
};

struct TimeGridConfig {
  double lo_factor = 1e-8;  ///< t_min = lo_factor / lambda_max
  double hi_factor = 40.0;  ///< t_max = hi_factor / lambda_min
  double ratio = 1.0905077326652577;  ///< 2^{1/8}
};

struct IdentitiesConfig {
  double tolerance = 1e-6;
  double factorization_tolerance = 1e-10;
  int factorization_times = 10;
  int factorization_fields = 5;
};

struct DhsConfig {
  NamedDomain domain{"dhs", IntervalSpec{1.0, 200}};
  int scale_exponent = 4;  ///< h^2 = 4^{-scale_exponent}
  QuadratureSpec base{200, 12, 12, 1e-4};
  int refinements = 3;
  double tolerance = 1e-4;
  std::vector<int> flatness_orders{2, 4};
  double flatness_y_lo = 1e-3;
  double flatness_y_hi = 1e-1;
  int flatness_samples = 21;
  double slope_margin = 0.2;
};

struct OrthogonalityConfig {
  NamedDomain domain{"square32", RectangleSpec{1.0, 1.0, 32, 32}};
  std::vector<double> exponents{2.0, 4.0};
  int max_offset = 6;
  double constant = 16.0;
  double diagonal_bound = 0.43;
};

struct EquivalenceConfig {
  NamedDomain domain{"square32", RectangleSpec{1.0, 1.0, 32, 32}};
  NamedDomain refined{"square64", RectangleSpec{1.0, 1.0, 64, 64}};
  std::vector<double> window_exponents{2.0, 4.0};
  std::pair<double, double> window{0.25, 4.0};
  std::pair<double, double> strict_window{0.75, 3.0};
  double drift = 0.1;
  std::optional<CorpusSpec> corpus;  ///< overrides the top-level corpus
};

struct ResolventConfig {
  NamedDomain domain{"square12", RectangleSpec{1.0, 1.0, 12, 12}};
  std::vector<double> thetas;  ///< empty: pi - pi 2^{-m}, m = 1..7
  int radii = 97;
  double radius_lo_factor = 0.01;  ///< r_min = factor * lambda_min
  double radius_hi_factor = 100.0; ///< r_max = factor * lambda_max
  std::vector<double> exponents{1.0, 2.0, std::numeric_limits<double>::infinity()};
  double alpha_max = 0.05;
  double norm_slack = 1e-9;
  double scale = 0.25;        ///< h^2 for the scale-invariance comparison
  double noise_sigmas = 3.0;  ///< scale invariance within this many standard errors
  double noise_floor = 1e-3;
};

struct HeatflowConfig {
  NamedDomain domain{"square32", RectangleSpec{1.0, 1.0, 32, 32}};
  NamedDomain obstacle{"obstacle16", ObstacleSpec{RectangleSpec{1.0, 1.0, 16, 16}, 6, 6, 4, 4}};
  std::vector<int> components{1, 4, 16};
  std::vector<double> exponents{2.0, 4.0};
  double agreement = 0.05;
  int power_iterations = 25;
  int members = 6;  ///< corpus members per component count
  int domination_times = 5;
  double domination_tolerance = 1e-12;
  std::vector<double> maximal_exponents{2.0, 4.0, std::numeric_limits<double>::infinity()};
};

struct KhintchineConfig {
  int vectors = 100;
  int max_length = 12;
  std::vector<double> exponents{1.0, 4.0};
  std::pair<double, double> window{0.2, 5.0};
  double l2_tolerance = 1e-12;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "reports";
  std::vector<std::string> suites;
  std::vector<NamedDomain> domains;
  SymbolConfig symbol;
  TimeGridConfig time_grid;
  std::vector<double> p_list{1.5, 2.0, 3.0, 4.0};
  CorpusSpec corpus;
  IdentitiesConfig identities;
  DhsConfig dhs;
  OrthogonalityConfig orthogonality;
  EquivalenceConfig equivalences;
  ResolventConfig resolvent;
  HeatflowConfig heatflow;
  KhintchineConfig khintchine;
  json echo;  ///< the parsed document, for hashing and report headers
};

inline CorpusSpec parse_corpus(const Section& s, std::uint64_t seed) {
  s.allow_only({"kinds", "count", "components", "band_modes", "layer_min", "layer_max", "indicator_width"});
  CorpusSpec c;
  c.seed = seed;
  if (s.has("kinds")) {
    const json& k = s.raw("kinds");
    if (!k.is_array()) throw ConfigError(s.at("kinds"), "expected an array of kind names");
    c.kinds.clear();
    for (std::size_t i = 0; i < k.size(); ++i) {
      const std::string path = s.at("kinds") + "[" + std::to_string(i) + "]";
      if (!k[i].is_string()) throw ConfigError(path, "expected a string");
      const auto name = k[i].get<std::string>();
      if (std::find(corpus_kinds().begin(), corpus_kinds().end(), name) == corpus_kinds().end())
        throw ConfigError(path, "unknown corpus kind '" + name + "'");
      c.kinds.push_back(name);
    }
  }
  c.count = s.integer("count", c.count, 0);
  c.components = s.integer("components", c.components, 1);
  c.band_modes = s.integer("band_modes", c.band_modes, 1);
  c.layer_min = s.positive("layer_min", c.layer_min);
  c.layer_max = s.positive("layer_max", c.layer_max);
  if (c.layer_max < c.layer_min) throw ConfigError(s.at("layer_max"), "must be at least layer_min");
  c.indicator_width = s.number("indicator_width", c.indicator_width);
  if (c.indicator_width < 0.0) throw ConfigError(s.at("indicator_width"), "must be non-negative");
  if (c.count > 0 && c.kinds.empty()) throw ConfigError(s.at("kinds"), "empty kind list with a positive count");
  return c;
}

inline QuadratureSpec parse_quadrature(const Section& s, QuadratureSpec q) {
  s.allow_only({"x_nodes", "y_nodes", "band_nodes", "y_min_factor"});
  q.x_nodes = s.integer("x_nodes", q.x_nodes, 2);
  q.y_nodes = s.integer("y_nodes", q.y_nodes, 1);
  q.band_nodes = s.integer("band_nodes", q.band_nodes, 1);
  q.y_min_factor = s.positive("y_min_factor", q.y_min_factor);
  if (q.y_min_factor >= 1.0) throw ConfigError(s.at("y_min_factor"), "must be below 1 (the y-grid must stay off the axis)");
  return q;
}

inline ExperimentConfig parse_config(const json& doc) {
  const Section root(doc, "config");
  root.allow_only({"schema_version", "seed", "output_dir", "suites", "domains", "symbol", "time_grid", "p_list",
                   "corpus", "identities", "dhs", "orthogonality", "equivalences", "resolvent", "heatflow",
                   "khintchine"});
  ExperimentConfig c;
  c.echo = doc;
  if (root.integer("schema_version", kSchemaVersion) != kSchemaVersion)
    throw ConfigError(root.at("schema_version"), "unsupported schema version");
  if (!root.has("seed")) throw ConfigError(root.at("seed"), "required for reproducibility");
  const json& seed = root.raw("seed");
  if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<long long>() < 0)) throw ConfigError(root.at("seed"), "expected a non-negative integer");
  c.seed = seed.get<std::uint64_t>();
  c.output_dir = root.string("output_dir", c.output_dir);

  if (root.has("suites")) {
    const json& s = root.raw("suites");
    if (!s.is_array()) throw ConfigError(root.at("suites"), "expected an array of suite names");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string path = root.at("suites") + "[" + std::to_string(i) + "]";
      if (!s[i].is_string()) throw ConfigError(path, "expected a string");
      const auto name = s[i].get<std::string>();
      if (name != "all" && std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end())
        throw ConfigError(path, "unknown suite '" + name + "'");
      c.suites.push_back(name);
    }
  }

  if (root.has("domains")) {
    const json& d = root.raw("domains");
    if (!d.is_array()) throw ConfigError(root.at("domains"), "expected an array of domain descriptors");
    for (std::size_t i = 0; i < d.size(); ++i)
      c.domains.push_back(parse_domain(Section(d[i], root.at("domains") + "[" + std::to_string(i) + "]"),
                                       "domain" + std::to_string(i)));
  } else {
    c.domains = {{"interval100", IntervalSpec{1.0, 100}},
                 {"square32", RectangleSpec{1.0, 1.0, 32, 32}},
                 {"obstacle16", ObstacleSpec{RectangleSpec{1.0, 1.0, 16, 16}, 6, 6, 4, 4}}};
  }

  const Section sym = root.section("symbol");
  sym.allow_only({"a", "order", "max_order"});
  c.symbol.a = sym.positive("a", c.symbol.a);
  c.symbol.order = sym.integer("order", c.symbol.order, 0);
  c.symbol.max_order = sym.integer("max_order", c.symbol.max_order, 1);
  if (c.symbol.max_order > static_cast<int>(kJetCapacity) - 1)
    throw ConfigError(sym.at("max_order"), "derivative tower is capped at " + std::to_string(kJetCapacity - 1));
  if (c.symbol.order > c.symbol.max_order - 1)
    throw ConfigError(sym.at("order"), "needs order <= max_order - 1 for the closed-form dbar");

  const Section tg = root.section("time_grid");
  tg.allow_only({"lo_factor", "hi_factor", "ratio"});
  c.time_grid.lo_factor = tg.positive("lo_factor", c.time_grid.lo_factor);
  c.time_grid.hi_factor = tg.positive("hi_factor", c.time_grid.hi_factor);
  c.time_grid.ratio = tg.number("ratio", c.time_grid.ratio);
  if (!(c.time_grid.ratio > 1.0)) throw ConfigError(tg.at("ratio"), "must exceed 1");

  c.p_list = root.exponents("p_list", c.p_list, 1.5);
  c.corpus = parse_corpus(root.section("corpus"), c.seed);

  const Section id = root.section("identities");
  id.allow_only({"tolerance", "factorization_tolerance", "factorization_times", "factorization_fields"});
  c.identities.tolerance = id.positive("tolerance", c.identities.tolerance);
  c.identities.factorization_tolerance = id.positive("factorization_tolerance", c.identities.factorization_tolerance);
  c.identities.factorization_times = id.integer("factorization_times", c.identities.factorization_times, 1);
  c.identities.factorization_fields = id.integer("factorization_fields", c.identities.factorization_fields, 1);

  const Section dh = root.section("dhs");
  dh.allow_only({"domain", "scale_exponent", "quadrature", "refinements", "tolerance", "flatness_orders",
                 "flatness_y", "flatness_samples", "slope_margin"});
  c.dhs.domain = parse_domain_or(dh, "domain", c.dhs.domain);
  c.dhs.scale_exponent = dh.integer("scale_exponent", c.dhs.scale_exponent);
  c.dhs.base = parse_quadrature(dh.section("quadrature"), c.dhs.base);
  c.dhs.refinements = dh.integer("refinements", c.dhs.refinements, 1);
  c.dhs.tolerance = dh.positive("tolerance", c.dhs.tolerance);
  c.dhs.flatness_orders = dh.integers("flatness_orders", c.dhs.flatness_orders);
  for (std::size_t i = 0; i < c.dhs.flatness_orders.size(); ++i) {
    const int n = c.dhs.flatness_orders[i];
    if (n < 1 || n > c.symbol.max_order - 1)
      throw ConfigError(dh.at("flatness_orders") + "[" + std::to_string(i) + "]", "order outside 1..max_order-1");
  }
  std::tie(c.dhs.flatness_y_lo, c.dhs.flatness_y_hi) =
      dh.window("flatness_y", {c.dhs.flatness_y_lo, c.dhs.flatness_y_hi});
  if (!(c.dhs.flatness_y_hi > c.dhs.flatness_y_lo)) throw ConfigError(dh.at("flatness_y"), "empty y-range");
  c.dhs.flatness_samples = dh.integer("flatness_samples", c.dhs.flatness_samples, 2);
  c.dhs.slope_margin = dh.number("slope_margin", c.dhs.slope_margin);

  const Section orth = root.section("orthogonality");
  orth.allow_only({"domain", "exponents", "max_offset", "constant", "diagonal_bound"});
  c.orthogonality.domain = parse_domain_or(orth, "domain", c.orthogonality.domain);
  c.orthogonality.exponents = orth.exponents("exponents", c.orthogonality.exponents, 1.0);
  c.orthogonality.max_offset = orth.integer("max_offset", c.orthogonality.max_offset, 0);
  c.orthogonality.constant = orth.positive("constant", c.orthogonality.constant);
  c.orthogonality.diagonal_bound = orth.positive("diagonal_bound", c.orthogonality.diagonal_bound);

  const Section eq = root.section("equivalences");
  eq.allow_only({"domain", "refined_domain", "window_exponents", "window", "strict_window", "drift", "corpus"});
  c.equivalences.domain = parse_domain_or(eq, "domain", c.equivalences.domain);
  c.equivalences.refined = parse_domain_or(eq, "refined_domain", c.equivalences.refined);
  c.equivalences.window_exponents = eq.exponents("window_exponents", c.equivalences.window_exponents, 1.0);
  c.equivalences.window = eq.window("window", c.equivalences.window);
  c.equivalences.strict_window = eq.window("strict_window", c.equivalences.strict_window);
  c.equivalences.drift = eq.positive("drift", c.equivalences.drift);
  if (eq.has("corpus")) c.equivalences.corpus = parse_corpus(eq.section("corpus"), c.seed);

  const Section rs = root.section("resolvent");
  rs.allow_only({"domain", "thetas", "radii", "radius_lo_factor", "radius_hi_factor", "exponents", "alpha_max",
                 "norm_slack", "scale", "noise_sigmas", "noise_floor"});
  c.resolvent.domain = parse_domain_or(rs, "domain", c.resolvent.domain);
  c.resolvent.thetas = rs.numbers("thetas", {});
  for (std::size_t i = 0; i < c.resolvent.thetas.size(); ++i)
    if (!(c.resolvent.thetas[i] > 0.0 && c.resolvent.thetas[i] < std::numbers::pi))
      throw ConfigError(rs.at("thetas") + "[" + std::to_string(i) + "]", "theta must lie in (0, pi)");
  c.resolvent.radii = rs.integer("radii", c.resolvent.radii, 2);
  c.resolvent.radius_lo_factor = rs.positive("radius_lo_factor", c.resolvent.radius_lo_factor);
  c.resolvent.radius_hi_factor = rs.positive("radius_hi_factor", c.resolvent.radius_hi_factor);
  c.resolvent.exponents = rs.exponents("exponents", c.resolvent.exponents, 1.0);
  c.resolvent.alpha_max = rs.number("alpha_max", c.resolvent.alpha_max);
  c.resolvent.norm_slack = rs.positive("norm_slack", c.resolvent.norm_slack);
  c.resolvent.scale = rs.positive("scale", c.resolvent.scale);
  c.resolvent.noise_sigmas = rs.positive("noise_sigmas", c.resolvent.noise_sigmas);
  c.resolvent.noise_floor = rs.positive("noise_floor", c.resolvent.noise_floor);

  const Section hf = root.section("heatflow");
  hf.allow_only({"domain", "obstacle", "components", "exponents", "agreement", "power_iterations", "members",
                 "domination_times", "domination_tolerance", "maximal_exponents"});
  c.heatflow.domain = parse_domain_or(hf, "domain", c.heatflow.domain);
  c.heatflow.obstacle = parse_domain_or(hf, "obstacle", c.heatflow.obstacle);
  c.heatflow.components = hf.integers("components", c.heatflow.components);
  for (std::size_t i = 0; i < c.heatflow.components.size(); ++i)
    if (c.heatflow.components[i] < 1)
      throw ConfigError(hf.at("components") + "[" + std::to_string(i) + "]", "component count must be positive");
  c.heatflow.exponents = hf.exponents("exponents", c.heatflow.exponents, 1.0);
  for (std::size_t i = 0; i < c.heatflow.exponents.size(); ++i)
    if (!(c.heatflow.exponents[i] > 1.0) || std::isinf(c.heatflow.exponents[i]))
      throw ConfigError(hf.at("exponents") + "[" + std::to_string(i) + "]", "power iteration needs 1 < p < inf");
  c.heatflow.agreement = hf.positive("agreement", c.heatflow.agreement);
  c.heatflow.power_iterations = hf.integer("power_iterations", c.heatflow.power_iterations, 0);
  c.heatflow.members = hf.integer("members", c.heatflow.members, 1);
  c.heatflow.domination_times = hf.integer("domination_times", c.heatflow.domination_times, 1);
  c.heatflow.domination_tolerance = hf.positive("domination_tolerance", c.heatflow.domination_tolerance);
  c.heatflow.maximal_exponents = hf.exponents("maximal_exponents", c.heatflow.maximal_exponents, 1.0);

  const Section kh = root.section("khintchine");
  kh.allow_only({"vectors", "max_length", "exponents", "window", "l2_tolerance"});
  c.khintchine.vectors = kh.integer("vectors", c.khintchine.vectors, 1);
  c.khintchine.max_length = kh.integer("max_length", c.khintchine.max_length, 1);
  if (c.khintchine.max_length > static_cast<int>(kMaxKhintchineLength))
    throw ConfigError(kh.at("max_length"), "exact integration is capped at length " + std::to_string(kMaxKhintchineLength));
  c.khintchine.exponents = kh.exponents("exponents", c.khintchine.exponents, 1.0);
  c.khintchine.window = kh.window("window", c.khintchine.window);
  c.khintchine.l2_tolerance = kh.positive("l2_tolerance", c.khintchine.l2_tolerance);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

/// Suites a run resolves to, in canonical order.
inline std::vector<std::string> expand_suite(const std::string& suite) {
  if (suite == "all") return suite_names();
  if (std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end())
    throw ConfigError("suite", "unknown suite '" + suite + "'");
  return {suite};
}

/// Run-time checks that depend on the suite selection.
inline void validate_for(const ExperimentConfig& c, const std::string& suite) {
  for (const auto& s : expand_suite(suite)) {
    const bool needs_corpus = s == "identities" || s == "equivalences" || s == "orthogonality" || s == "heatflow-bounds";
    if (needs_corpus && c.corpus.count == 0)
      throw ConfigError("config.corpus.count", "suite '" + s + "' needs a non-empty corpus");
    if (s == "identities" && c.domains.empty()) throw ConfigError("config.domains", "no domains to run identities on");
  }
}

inline void validate_config(const ExperimentConfig& c) {
  if (c.suites.empty()) return;
  for (const auto& s : c.suites) validate_for(c, s);
}

}  // namespace hslab::harness
