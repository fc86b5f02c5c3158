#pragma once

// Experiment registry: configuration, batch evaluation of lhs/rhs pairs over
// a (sample, t) grid, and CSV/JSON report emission.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "radint/core.hpp"
#include "radint/interp.hpp"
#include "radint/kfunc.hpp"
#include "radint/norms.hpp"
#include "radint/rademacher.hpp"

namespace radint {

enum class ExperimentId {
  khintchine,
  identity3,
  theorem1,
  holmstedt9,
  montgomery,
  example1,
  example2,
  remark2,
  realizer,
  reiteration18,
  indices
};

enum class Family { random_gaussian, random_sparse, harmonic, random_dyadic, explicit_list };

inline const std::vector<std::pair<ExperimentId, std::string>>& experiment_names() {
  static const std::vector<std::pair<ExperimentId, std::string>> names{
      {ExperimentId::khintchine, "khintchine"}, {ExperimentId::identity3, "identity3"},
      {ExperimentId::theorem1, "theorem1"},     {ExperimentId::holmstedt9, "holmstedt9"},
      {ExperimentId::montgomery, "montgomery"}, {ExperimentId::example1, "example1"},
      {ExperimentId::example2, "example2"},     {ExperimentId::remark2, "remark2"},
      {ExperimentId::realizer, "realizer"},     {ExperimentId::reiteration18, "reiteration18"},
      {ExperimentId::indices, "indices"}};
  return names;
}

inline const std::vector<std::pair<Family, std::string>>& family_names() {
  static const std::vector<std::pair<Family, std::string>> names{
      {Family::random_gaussian, "random_gaussian"},
      {Family::random_sparse, "random_sparse"},
      {Family::harmonic, "harmonic"},
      {Family::random_dyadic, "random_dyadic"},
      {Family::explicit_list, "explicit"}};
  return names;
}

inline std::string to_string(ExperimentId id) {
  for (const auto& [k, v] : experiment_names())
    if (k == id) return v;
  return "?";
}
inline std::string to_string(Family f) {
  for (const auto& [k, v] : family_names())
    if (k == f) return v;
  return "?";
}

/// Invalid configuration; `field` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline ExperimentId parse_experiment_id(const std::string& s) {
  for (const auto& [k, v] : experiment_names())
    if (v == s) return k;
  throw ConfigError("experiment_id", "unknown experiment '" + s + "'");
}

inline Family parse_family(const std::string& s) {
  for (const auto& [k, v] : family_names())
    if (v == s) return k;
  throw ConfigError("coefficient_family", "unknown family '" + s + "'");
}

struct TGrid {
  double lo = 1.0 / 16.0;
  double hi = 64.0;
  std::size_t points = 33;
  std::vector<double> values;  ///< explicit grid; overrides the log spec when nonempty

  std::vector<double> resolve() const { return values.empty() ? log_grid(lo, hi, points) : values; }
};

struct Tolerances {
  std::optional<double> ratio_lo;
  std::optional<double> ratio_hi;
  std::optional<double> spread_max;  ///< bound on ratio_max / ratio_min
};

struct ExperimentConfig {
  ExperimentId experiment_id = ExperimentId::theorem1;
  Family family = Family::random_gaussian;
  std::vector<double> coefficients;  ///< explicit family only
  std::size_t n = 8;
  std::optional<TGrid> t_grid;  ///< experiment default when absent
  std::size_t samples = 20;
  std::optional<std::uint64_t> seed;
  std::map<std::string, double> params;
  Tolerances tolerances;
  bool rerun_doubled = false;
  std::size_t exact_cap = kExactCap;
  int lattice_bits = 14;

  double param(const std::string& key, double fallback) const {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

// ---------------------------------------------------------------------------
// Config (de)serialization

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.n < 1) throw ConfigError("n", "must be >= 1");
  if (cfg.samples < 1) throw ConfigError("samples", "must be >= 1");
  const bool uses_family =
      cfg.experiment_id != ExperimentId::realizer && cfg.experiment_id != ExperimentId::indices;
  const bool random_family = cfg.family == Family::random_gaussian || cfg.family == Family::random_sparse ||
                             cfg.family == Family::random_dyadic;
  const bool randomized = (uses_family && random_family) || cfg.experiment_id == ExperimentId::reiteration18;
  if (randomized && !cfg.seed) throw ConfigError("seed", "required for randomized families");
  if (cfg.family == Family::explicit_list && cfg.coefficients.empty())
    throw ConfigError("coefficients", "explicit family needs a nonempty list");
  for (double c : cfg.coefficients)
    if (!std::isfinite(c)) throw ConfigError("coefficients", "entries must be finite");
  if (cfg.t_grid) {
    const auto& g = *cfg.t_grid;
    if (g.values.empty()) {
      if (g.points < 1) throw ConfigError("t_grid", "must be nonempty");
      if (!(g.lo > 0.0) || !(g.hi >= g.lo)) throw ConfigError("t_grid", "need 0 < min <= max");
    } else {
      for (double t : g.values)
        if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("t_grid", "values must be positive");
    }
  }
  if (cfg.lattice_bits < 1 || cfg.lattice_bits > 30) throw ConfigError("lattice_bits", "must lie in [1, 30]");
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  auto get = [&j]<class T>(const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
      out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(key, e.what());
    }
  };
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  std::string id;
  get("experiment_id", id);
  if (!id.empty()) cfg.experiment_id = parse_experiment_id(id);
  std::string fam;
  get("coefficient_family", fam);
  if (!fam.empty()) cfg.family = parse_family(fam);
  get("coefficients", cfg.coefficients);
  if (j.contains("n")) {
    long long n = 0;
    get("n", n);
    if (n < 1) throw ConfigError("n", "must be >= 1");
    cfg.n = static_cast<std::size_t>(n);
  }
  if (j.contains("samples")) {
    long long s = 0;
    get("samples", s);
    if (s < 1) throw ConfigError("samples", "must be >= 1");
    cfg.samples = static_cast<std::size_t>(s);
  }
  if (j.contains("seed")) {
    std::uint64_t s = 0;
    get("seed", s);
    cfg.seed = s;
  }
  if (j.contains("t_grid")) {
    const auto& g = j.at("t_grid");
    TGrid grid;
    try {
      if (g.is_array()) {
        grid.values = g.get<std::vector<double>>();
        if (grid.values.empty()) throw ConfigError("t_grid", "must be nonempty");
      } else {
        grid.lo = g.value("min", grid.lo);
        grid.hi = g.value("max", grid.hi);
        grid.points = g.value("points", grid.points);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("t_grid", e.what());
    }
    cfg.t_grid = grid;
  }
  get("params", cfg.params);
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    if (!t.is_object()) throw ConfigError("tolerances", "must be an object");
    try {
      if (t.contains("ratio_lo")) cfg.tolerances.ratio_lo = t.at("ratio_lo").get<double>();
      if (t.contains("ratio_hi")) cfg.tolerances.ratio_hi = t.at("ratio_hi").get<double>();
      if (t.contains("spread_max")) cfg.tolerances.spread_max = t.at("spread_max").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("tolerances", e.what());
    }
  }
  get("rerun_doubled", cfg.rerun_doubled);
  if (j.contains("exact_cap")) {
    long long c = 0;
    get("exact_cap", c);
    if (c < 0) throw ConfigError("exact_cap", "must be >= 0");
    cfg.exact_cap = static_cast<std::size_t>(c);
  }
  get("lattice_bits", cfg.lattice_bits);
  validate(cfg);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("--config", "'" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Report

struct ReportRow {
  double t = 0.0;
  std::size_t sample_index = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// The input and t at which an extreme ratio was observed.
struct Witness {
  std::size_t sample_index = 0;
  double t = 0.0;
  double ratio = 0.0;
  std::vector<double> coeffs;
  std::vector<double> breaks;  ///< step-function inputs only
  std::vector<double> values;
  friend bool operator==(const Witness&, const Witness&) = default;
};

struct Truncation {
  std::size_t n = 0;
  std::size_t doubled_n = 0;  ///< 0 when no rerun was made
  double doubled_ratio_min = 0.0;
  double doubled_ratio_max = 0.0;
  double drift = 0.0;  ///< max relative change of the envelope ends
  bool exact = true;   ///< false when a lattice law replaced the exact one
  double value_error_bound = 0.0;
  friend bool operator==(const Truncation&, const Truncation&) = default;
};

struct EquivalenceReport {
  std::string experiment_id;
  std::string family;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::vector<double> t_grid;
  double ratio_min = 0.0;
  double ratio_max = 0.0;
  Witness witness_min;
  Witness witness_max;
  Truncation truncation;
  std::map<std::string, double> bounds;
  std::map<std::string, double> extras;
  std::vector<std::string> notes;
  bool pass = false;
  std::vector<ReportRow> rows;
  friend bool operator==(const EquivalenceReport&, const EquivalenceReport&) = default;
};

// ---------------------------------------------------------------------------
// Instances

/// One experiment input: a coefficient sequence or, for reiteration18, a
/// step function on the half line.
struct Instance {
  Sequence a;
  std::optional<StepFunction> x;
};

namespace detail {

inline std::mt19937_64 sample_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Random sign-changing step function on the half line with `pieces` pieces
/// and support of length about `support`.
inline StepFunction random_half_line_function(std::mt19937_64& rng, std::size_t pieces, double support) {
  std::uniform_real_distribution<double> len(0.05, 2.0 * support / static_cast<double>(pieces));
  std::normal_distribution<double> val(0.0, 1.0);
  std::vector<std::pair<double, double>> p;
  for (std::size_t i = 0; i < pieces; ++i) {
    double v = val(rng);
    if (v == 0.0) v = 1.0;
    p.emplace_back(len(rng), v);
  }
  return StepFunction::from_pieces(Domain::half_line, p);
}

}  // namespace detail

/// The coefficient sequence of sample `index`.
///
/// random_sparse keeps each gaussian coordinate with probability 1/4; a draw
/// that keeps none falls back to its first coordinate so the sum is nonzero.
/// random_dyadic draws m/2^j with m in [-64, 64] and j in [0, 6].
inline Sequence make_coefficients(const ExperimentConfig& cfg, std::size_t n, std::size_t index) {
  switch (cfg.family) {
    case Family::harmonic: {
      std::vector<double> a(n);
      for (std::size_t k = 0; k < n; ++k) a[k] = 1.0 / static_cast<double>(k + 1);
      return Sequence(std::move(a));
    }
    case Family::explicit_list:
      return Sequence(cfg.coefficients);
    case Family::random_gaussian:
    case Family::random_sparse: {
      auto rng = detail::sample_rng(*cfg.seed, index);
      std::normal_distribution<double> g(0.0, 1.0);
      std::bernoulli_distribution keep(0.25);
      std::vector<double> a(n);
      bool any = false;
      for (auto& c : a) {
        c = g(rng);
        if (cfg.family == Family::random_sparse && !keep(rng)) c = 0.0;
        any = any || c != 0.0;
      }
      if (!any) a[0] = g(rng);
      return Sequence(std::move(a));
    }
    case Family::random_dyadic: {
      auto rng = detail::sample_rng(*cfg.seed, index);
      std::uniform_int_distribution<int> m(-64, 64);
      std::uniform_int_distribution<int> j(0, 6);
      std::vector<double> a(n);
      bool any = false;
      for (auto& c : a) {
        c = std::ldexp(static_cast<double>(m(rng)), -j(rng));
        any = any || c != 0.0;
      }
      if (!any) a[0] = 1.0;
      return Sequence(std::move(a));
    }
  }
  throw ConfigError("coefficient_family", "unsupported family");
}

inline Instance make_instance(const ExperimentConfig& cfg, std::size_t n, std::size_t index) {
  if (cfg.experiment_id == ExperimentId::reiteration18) {
    auto rng = detail::sample_rng(*cfg.seed, index);
    const auto pieces = static_cast<std::size_t>(cfg.param("pieces", 6));
    return {{}, detail::random_half_line_function(rng, std::max<std::size_t>(1, pieces), static_cast<double>(n))};
  }
  if (cfg.experiment_id == ExperimentId::realizer) {
    const double alpha = cfg.param("alpha", 0.5);
    const ConcaveFn f{[alpha](double t) { return std::min(t, std::pow(t, alpha)); }, Domain::half_line, true, true,
                      "min(t,t^alpha)"};
    return {realize_kfunctional(f, n), std::nullopt};
  }
  return {make_coefficients(cfg, n, index), std::nullopt};
}

// ---------------------------------------------------------------------------
// Evaluation

struct PointValue {
  double lhs;
  double rhs;
};

/// Per-instance state shared by all t of one sample.
struct Prepared {
  Instance inst;
  std::optional<SynthesisResult> ta;
  std::optional<DyadicRademacherSum> exact;  ///< identity3 only
  double minimal_A = 0.0;                    ///< montgomery only
};

inline std::vector<double> default_t_grid(const ExperimentConfig& cfg, std::size_t n) {
  switch (cfg.experiment_id) {
    case ExperimentId::khintchine: return {cfg.param("p", 2.0)};
    case ExperimentId::identity3:
    case ExperimentId::example1:
    case ExperimentId::example2: return {1.0};
    case ExperimentId::montgomery: return log_grid(0.1, 4.0, 33);
    case ExperimentId::remark2: return {std::sqrt(static_cast<double>(n))};
    case ExperimentId::realizer: return log_grid(1.0, 16.0, 33);
    case ExperimentId::reiteration18: return log_grid(1.0, 64.0, 33);
    case ExperimentId::indices: return {std::ldexp(1.0, -30), std::ldexp(1.0, 30)};
    default: return TGrid{}.resolve();
  }
}

inline ConcaveFn index_function(const ExperimentConfig& cfg) {
  const double which = cfg.param("function", 0.0);
  if (which == 1.0) return phi_exp_square();
  const double alpha = cfg.param("alpha", 0.5);
  return {[alpha](double t) { return std::pow(t, alpha); }, Domain::unit_interval, true, true, "t^alpha"};
}

inline Prepared prepare(const ExperimentConfig& cfg, Instance inst, const std::vector<double>& grid) {
  Prepared p{std::move(inst), std::nullopt, std::nullopt, 0.0};
  switch (cfg.experiment_id) {
    case ExperimentId::identity3:
      p.exact = synthesize_exact(to_dyadic(p.inst.a), cfg.exact_cap);
      break;
    case ExperimentId::khintchine:
    case ExperimentId::theorem1:
    case ExperimentId::montgomery:
    case ExperimentId::example1:
    case ExperimentId::example2:
    case ExperimentId::remark2:
      p.ta = synthesize(p.inst.a, cfg.exact_cap, cfg.lattice_bits);
      break;
    default:
      break;
  }
  if (cfg.experiment_id == ExperimentId::montgomery) {
    const auto rep = montgomery_smith_min_A(p.inst.a, p.ta->sum.law, grid, cfg.param("search_cap", 100.0));
    p.minimal_A = rep.minimal_A;
  }
  return p;
}

inline PointValue evaluate_point(const ExperimentConfig& cfg, const Prepared& p, double t) {
  const Sequence& a = p.inst.a;
  switch (cfg.experiment_id) {
    case ExperimentId::khintchine:
      return {lp_norm(p.ta->sum.as_step, cfg.param("p", 2.0)), seq_l2(a)};
    case ExperimentId::identity3: {
      Dyadic l1;
      for (const auto& c : to_dyadic(a)) l1 += abs_value(c);
      return {p.exact->law.max_abs().to_double(), l1.to_double()};
    }
    case ExperimentId::theorem1:
      return {k_linf_G(p.ta->sum.as_step, t), k_l1_l2_seq(a, t)};
    case ExperimentId::holmstedt9:
      return {holmstedt_phi(a, t), k_l1_l2_seq(a, t)};
    case ExperimentId::montgomery: {
      const double A = p.minimal_A;
      if (!std::isfinite(A)) return {0.0, 1.0};
      return {upper_tail_probability(p.ta->sum.law, k_l1_l2_seq(a, t) / A), std::exp(-A * t * t) / A};
    }
    case ExperimentId::example1: {
      const ConcaveFn phi{[](double u) { return u * std::log2(std::log2(16.0 / u)); }, Domain::unit_interval, true,
                          true, "t*log2(log2(16/t))"};
      return {marcinkiewicz_norm(p.ta->sum.as_step, phi), seq_l1log_norm(a)};
    }
    case ExperimentId::example2: {
      const double pp = cfg.param("p", 1.5);
      const ConcaveFn phi{[pp](double s) { return std::pow(std::log2(2.0 / s), 1.0 - pp); }, Domain::unit_interval,
                          false, true, "log2(2/s)^(1-p)"};
      return {lorentz_norm(p.ta->sum.as_step, phi, pp), seq_lp_norm(a, pp)};
    }
    case ExperimentId::remark2:
      return {k_linf_lq(p.ta->sum.as_step, t, cfg.param("q", 4.0)), k_l1_l2_seq(a, t)};
    case ExperimentId::realizer: {
      const double alpha = cfg.param("alpha", 0.5);
      return {k_l1_l2_seq(a, t), std::min(t, std::pow(t, alpha))};
    }
    case ExperimentId::reiteration18:
      return {k_l1_l2_seq(unit_average(rearrange_step(*p.inst.x)), t), k_l1_l2_fun(*p.inst.x, t)};
    case ExperimentId::indices: {
      const auto idx = dilation_indices(index_function(cfg));
      const double expected = cfg.param("expected", cfg.param("function", 0.0) == 1.0 ? 1.0 : cfg.param("alpha", 0.5));
      return {t < 1.0 ? idx.gamma : idx.delta, expected};
    }
  }
  throw ConfigError("experiment_id", "unsupported experiment");
}

inline double safe_ratio(double lhs, double rhs) {
  if (rhs == 0.0) return lhs == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return lhs / rhs;
}

inline Witness make_witness(const Prepared& p, std::size_t index, double t, double ratio) {
  Witness w{index, t, ratio, p.inst.a.coeffs(), {}, {}};
  if (p.inst.x) {
    w.breaks = p.inst.x->breaks();
    w.values = p.inst.x->values();
  }
  return w;
}

inline Instance instance_from_witness(const Witness& w) {
  Instance inst{Sequence(w.coeffs), std::nullopt};
  if (!w.breaks.empty()) inst.x = StepFunction(Domain::half_line, w.breaks, w.values);
  return inst;
}

/// Default acceptance bounds per experiment; configuration overrides.
inline Tolerances default_tolerances(const ExperimentConfig& cfg) {
  Tolerances t;
  switch (cfg.experiment_id) {
    case ExperimentId::khintchine:
      if (cfg.param("p", 2.0) == 2.0) {
        t.ratio_lo = 1.0 - 1e-12;
        t.ratio_hi = 1.0 + 1e-12;
      } else {
        t.ratio_lo = 0.5;
        t.ratio_hi = 1.5;
      }
      break;
    case ExperimentId::identity3:
      t.ratio_lo = 1.0;
      t.ratio_hi = 1.0;
      break;
    case ExperimentId::theorem1: t.spread_max = 100.0; break;
    case ExperimentId::holmstedt9:
      t.ratio_lo = 1.0 - 1e-9;
      t.ratio_hi = 8.0;
      break;
    case ExperimentId::montgomery: t.ratio_lo = 1.0; break;
    case ExperimentId::example1: t.spread_max = 100.0; break;
    case ExperimentId::example2: t.spread_max = 50.0; break;
    case ExperimentId::realizer: t.spread_max = 10.0; break;
    case ExperimentId::reiteration18: t.spread_max = 16.0; break;
    case ExperimentId::indices:
      t.ratio_lo = 0.9;
      t.ratio_hi = 1.1;
      break;
    case ExperimentId::remark2: break;
  }
  if (cfg.tolerances.ratio_lo) t.ratio_lo = cfg.tolerances.ratio_lo;
  if (cfg.tolerances.ratio_hi) t.ratio_hi = cfg.tolerances.ratio_hi;
  if (cfg.tolerances.spread_max) t.spread_max = cfg.tolerances.spread_max;
  return t;
}

namespace detail {

struct Envelope {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
};

/// Evaluates every (sample, t) pair of one truncation length. Samples are
/// processed concurrently; rows are assembled in (sample, t) order.
inline std::vector<std::pair<Prepared, std::vector<ReportRow>>> evaluate_all(const ExperimentConfig& cfg,
                                                                             std::size_t n,
                                                                             const std::vector<double>& grid) {
  const std::size_t samples = cfg.samples;
  std::vector<std::pair<Prepared, std::vector<ReportRow>>> out(samples);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Prepared p = prepare(cfg, make_instance(cfg, n, i), grid);
      std::vector<ReportRow> rows;
      rows.reserve(grid.size());
      for (double t : grid) {
        const auto [lhs, rhs] = evaluate_point(cfg, p, t);
        rows.push_back({t, i, lhs, rhs, safe_ratio(lhs, rhs)});
      }
      out[i] = {std::move(p), std::move(rows)};
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), samples));
  if (threads == 1) {
    work(0, samples);
    return out;
  }
  std::vector<std::future<void>> jobs;
  const std::size_t chunk = (samples + threads - 1) / threads;
  for (std::size_t b = 0; b < samples; b += chunk)
    jobs.push_back(std::async(std::launch::async, work, b, std::min(samples, b + chunk)));
  for (auto& j : jobs) j.get();
  return out;
}

inline Envelope envelope_of(const std::vector<std::pair<Prepared, std::vector<ReportRow>>>& all) {
  Envelope e;
  for (const auto& [p, rows] : all)
    for (const auto& r : rows) {
      e.lo = std::min(e.lo, r.ratio);
      e.hi = std::max(e.hi, r.ratio);
    }
  return e;
}

inline double relative_change(double a, double b) {
  if (a == b) return 0.0;
  return std::fabs(a - b) / std::max(std::fabs(a), std::fabs(b));
}

}  // namespace detail

/// Runs one experiment; deterministic given the configuration.
inline EquivalenceReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  EquivalenceReport rep;
  rep.experiment_id = to_string(cfg.experiment_id);
  rep.family = to_string(cfg.family);
  rep.seed = cfg.seed.value_or(0);
  rep.samples = cfg.samples;
  const std::vector<double> grid = cfg.t_grid ? cfg.t_grid->resolve() : default_t_grid(cfg, cfg.n);
  rep.t_grid = grid;

  const auto all = detail::evaluate_all(cfg, cfg.n, grid);
  rep.ratio_min = std::numeric_limits<double>::infinity();
  rep.ratio_max = -std::numeric_limits<double>::infinity();
  rep.truncation.n = cfg.n;
  for (const auto& [p, rows] : all) {
    if (p.ta && !p.ta->exact) {
      rep.truncation.exact = false;
      rep.truncation.value_error_bound = std::max(rep.truncation.value_error_bound, p.ta->value_error_bound);
    }
    for (const auto& r : rows) {
      if (r.ratio < rep.ratio_min) {
        rep.ratio_min = r.ratio;
        rep.witness_min = make_witness(p, r.sample_index, r.t, r.ratio);
      }
      if (r.ratio > rep.ratio_max) {
        rep.ratio_max = r.ratio;
        rep.witness_max = make_witness(p, r.sample_index, r.t, r.ratio);
      }
      rep.rows.push_back(r);
    }
  }
  if (!rep.truncation.exact)
    rep.notes.push_back("degraded: exact cap " + std::to_string(cfg.exact_cap) +
                        " exceeded; lattice law with value error bound " +
                        std::to_string(rep.truncation.value_error_bound));

  const Tolerances tol = default_tolerances(cfg);
  bool pass = true;
  if (tol.ratio_lo) {
    rep.bounds["ratio_lo"] = *tol.ratio_lo;
    pass = pass && rep.ratio_min >= *tol.ratio_lo;
  }
  if (tol.ratio_hi) {
    rep.bounds["ratio_hi"] = *tol.ratio_hi;
    pass = pass && rep.ratio_max <= *tol.ratio_hi;
  }
  if (tol.spread_max) {
    rep.bounds["spread_max"] = *tol.spread_max;
    pass = pass && rep.ratio_max <= *tol.spread_max * rep.ratio_min && rep.ratio_min > 0.0;
  }

  if (cfg.experiment_id == ExperimentId::montgomery) {
    double worst = 0.0;
    for (const auto& [p, rows] : all) worst = std::max(worst, p.minimal_A);
    rep.extras["max_minimal_A"] = worst;
    const double cap = cfg.param("A_max", 10.0);
    rep.bounds["A_max"] = cap;
    pass = pass && worst <= cap;
  }
  if (cfg.experiment_id == ExperimentId::remark2) {
    // The ratio at n is compared with the ratio at a reference length; the
    // couple (Linf, Lq) fails to be a K-subcouple iff it keeps collapsing.
    ExperimentConfig ref = cfg;
    ref.n = static_cast<std::size_t>(cfg.param("n_ref", 64));
    ref.t_grid.reset();
    const auto ref_all = detail::evaluate_all(ref, ref.n, default_t_grid(ref, ref.n));
    const auto ref_env = detail::envelope_of(ref_all);
    const double factor = ref_env.lo / rep.ratio_max;
    const double needed = cfg.param("divergence_factor", 1.5);
    rep.extras["reference_n"] = static_cast<double>(ref.n);
    rep.extras["reference_ratio"] = ref_env.lo;
    rep.extras["collapse_factor"] = factor;
    rep.bounds["divergence_factor"] = needed;
    pass = pass && factor >= needed;
  }

  if (cfg.rerun_doubled) {
    const std::size_t n2 = 2 * cfg.n;
    const auto grid2 = cfg.t_grid ? grid : default_t_grid(cfg, n2);
    const auto env = detail::envelope_of(detail::evaluate_all(cfg, n2, grid2));
    rep.truncation.doubled_n = n2;
    rep.truncation.doubled_ratio_min = env.lo;
    rep.truncation.doubled_ratio_max = env.hi;
    rep.truncation.drift = std::max(detail::relative_change(env.lo, rep.ratio_min),
                                    detail::relative_change(env.hi, rep.ratio_max));
  }
  rep.pass = pass;
  return rep;
}

/// Recomputes the ratio recorded in a witness.
inline double reevaluate_witness(const ExperimentConfig& cfg, const Witness& w) {
  const auto grid = cfg.t_grid ? cfg.t_grid->resolve() : default_t_grid(cfg, w.coeffs.empty() ? cfg.n : w.coeffs.size());
  const Prepared p = prepare(cfg, instance_from_witness(w), grid);
  const auto [lhs, rhs] = evaluate_point(cfg, p, w.t);
  return safe_ratio(lhs, rhs);
}

// ---------------------------------------------------------------------------
// Emission

enum class ReportFormat { csv, json };

inline ReportFormat parse_format(const std::string& s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw ConfigError("--format", "expected csv or json, got '" + s + "'");
}

namespace detail {

inline std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// JSON cannot carry non-finite numbers; they travel as strings.
inline nlohmann::json num(double x) {
  if (std::isfinite(x)) return x;
  return fmt_double(x);
}

inline double unnum(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

inline nlohmann::json nums(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline std::vector<double> unnums(const nlohmann::json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(unnum(x));
  return v;
}

inline nlohmann::json witness_json(const Witness& w) {
  return {{"sample_index", w.sample_index}, {"t", num(w.t)},         {"ratio", num(w.ratio)},
          {"coeffs", nums(w.coeffs)},       {"breaks", nums(w.breaks)}, {"values", nums(w.values)}};
}

inline Witness witness_from(const nlohmann::json& j) {
  return {j.at("sample_index").get<std::size_t>(), unnum(j.at("t")),         unnum(j.at("ratio")),
          unnums(j.at("coeffs")),                  unnums(j.at("breaks")), unnums(j.at("values"))};
}

}  // namespace detail

inline nlohmann::json to_json(const EquivalenceReport& r) {
  using detail::num;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"t", num(row.t)},
                    {"sample_index", row.sample_index},
                    {"lhs", num(row.lhs)},
                    {"rhs", num(row.rhs)},
                    {"ratio", num(row.ratio)}});
  nlohmann::json bounds = nlohmann::json::object();
  for (const auto& [k, v] : r.bounds) bounds[k] = num(v);
  nlohmann::json extras = nlohmann::json::object();
  for (const auto& [k, v] : r.extras) extras[k] = num(v);
  const auto& tr = r.truncation;
  return {{"experiment_id", r.experiment_id},
          {"family", r.family},
          {"seed", r.seed},
          {"samples", r.samples},
          {"t_grid", detail::nums(r.t_grid)},
          {"ratio_min", num(r.ratio_min)},
          {"ratio_max", num(r.ratio_max)},
          {"witness_min", detail::witness_json(r.witness_min)},
          {"witness_max", detail::witness_json(r.witness_max)},
          {"truncation",
           {{"n", tr.n},
            {"doubled_n", tr.doubled_n},
            {"doubled_ratio_min", num(tr.doubled_ratio_min)},
            {"doubled_ratio_max", num(tr.doubled_ratio_max)},
            {"drift", num(tr.drift)},
            {"exact", tr.exact},
            {"value_error_bound", num(tr.value_error_bound)}}},
          {"bounds", bounds},
          {"extras", extras},
          {"notes", r.notes},
          {"pass", r.pass},
          {"rows", rows}};
}

inline EquivalenceReport report_from_json(const nlohmann::json& j) {
  using detail::unnum;
  EquivalenceReport r;
  r.experiment_id = j.at("experiment_id").get<std::string>();
  r.family = j.at("family").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.samples = j.at("samples").get<std::size_t>();
  r.t_grid = detail::unnums(j.at("t_grid"));
  r.ratio_min = unnum(j.at("ratio_min"));
  r.ratio_max = unnum(j.at("ratio_max"));
  r.witness_min = detail::witness_from(j.at("witness_min"));
  r.witness_max = detail::witness_from(j.at("witness_max"));
  const auto& tr = j.at("truncation");
  r.truncation = {tr.at("n").get<std::size_t>(),     tr.at("doubled_n").get<std::size_t>(),
                  unnum(tr.at("doubled_ratio_min")), unnum(tr.at("doubled_ratio_max")),
                  unnum(tr.at("drift")),             tr.at("exact").get<bool>(),
                  unnum(tr.at("value_error_bound"))};
  for (const auto& [k, v] : j.at("bounds").items()) r.bounds[k] = unnum(v);
  for (const auto& [k, v] : j.at("extras").items()) r.extras[k] = unnum(v);
  r.notes = j.at("notes").get<std::vector<std::string>>();
  r.pass = j.at("pass").get<bool>();
  for (const auto& row : j.at("rows"))
    r.rows.push_back({unnum(row.at("t")), row.at("sample_index").get<std::size_t>(), unnum(row.at("lhs")),
                      unnum(row.at("rhs")), unnum(row.at("ratio"))});
  return r;
}

inline std::string to_csv(const EquivalenceReport& r) {
  std::string out = "experiment_id,t,sample_index,lhs,rhs,ratio\n";
  for (const auto& row : r.rows) {
    out += r.experiment_id;
    out += ',' + detail::fmt_double(row.t);
    out += ',' + std::to_string(row.sample_index);
    out += ',' + detail::fmt_double(row.lhs);
    out += ',' + detail::fmt_double(row.rhs);
    out += ',' + detail::fmt_double(row.ratio);
    out += '\n';
  }
  return out;
}

inline std::string render_report(const EquivalenceReport& r, ReportFormat format) {
  return format == ReportFormat::csv ? to_csv(r) : to_json(r).dump(2) + "\n";
}

/// Writes the report; I/O failures throw with the path in the message.
inline void emit_report(const EquivalenceReport& r, ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("emit_report: cannot open '" + path + "' for writing");
  out << render_report(r, format);
  out.flush();
  if (!out) throw std::runtime_error("emit_report: write to '" + path + "' failed");
}

}  // namespace radint
