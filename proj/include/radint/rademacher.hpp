#pragma once

// Rademacher sums Ta = sum a_k r_k: exact laws by convolution with
// coalescing, lattice laws for long sequences, Monte Carlo sampling, tails,
// and the Montgomery-Smith lower bound.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "radint/core.hpp"
#include "radint/kfunc.hpp"

namespace radint {

template <class V>
struct BasicRademacherSum {
  BasicSequence<V> coeffs;
  BasicDistribution<V> law;
  BasicStepFunction<V> as_step;  ///< |Ta|* on (0,1]
};

using RademacherSum = BasicRademacherSum<double>;
using DyadicRademacherSum = BasicRademacherSum<Dyadic>;

inline constexpr std::size_t kExactCap = 24;

namespace detail {

/// One convolution step: law of S + a*eps from the law of S, both as lists
/// sorted by decreasing value. The two shifted copies are merged and equal
/// values coalesced.
template <class V>
std::vector<Atom<V>> convolve_sign(const std::vector<Atom<V>>& law, const V& a) {
  std::vector<Atom<V>> out;
  out.reserve(2 * law.size());
  std::size_t i = 0;
  std::size_t j = 0;
  auto push = [&out](V v, double m) {
    if (!out.empty() && out.back().value == v)
      out.back().measure += m;
    else
      out.push_back({std::move(v), m});
  };
  // |a| shifts up and -|a| shifts down keep both lists decreasing.
  const V up = abs_value(a);
  const V down = -up;
  while (i < law.size() || j < law.size()) {
    if (j == law.size() || (i < law.size() && law[j].value + down < law[i].value + up)) {
      push(law[i].value + up, 0.5 * law[i].measure);
      ++i;
    } else {
      push(law[j].value + down, 0.5 * law[j].measure);
      ++j;
    }
  }
  return out;
}

template <class V>
std::vector<Atom<V>> convolve_all(std::span<const V> coeffs) {
  std::vector<Atom<V>> law{{V(0), 1.0}};
  for (const auto& a : coeffs) {
    if (a == V(0)) continue;
    law = convolve_sign(law, a);
  }
  return law;
}

inline std::size_t nonzero_count(const auto& a) {
  std::size_t n = 0;
  for (const auto& c : a)
    if (!(c == 0)) ++n;
  return n;
}

inline void check_cap(std::size_t nonzero, std::size_t cap) {
  if (nonzero > cap)
    throw std::length_error("synthesize_exact: " + std::to_string(nonzero) +
                            " nonzero coefficients exceed the exact cap of " + std::to_string(cap) +
                            "; use synthesize_lattice or sample_monte_carlo");
}

}  // namespace detail

/// Exact law of Ta in dyadic arithmetic.
inline DyadicRademacherSum synthesize_exact(const DyadicSequence& a, std::size_t cap = kExactCap) {
  detail::check_cap(detail::nonzero_count(a), cap);
  DyadicDistribution law(detail::convolve_all<Dyadic>(a.coeffs()));
  auto step = rearrangement_of_law(law);
  return {a, std::move(law), std::move(step)};
}

/// Exact law of Ta for double coefficients.
///
/// Coefficients are carried as dyadic rationals so that coalescing and the
/// identity max|Ta| = ||a||_1 hold without rounding; values are rounded to
/// double once at the end. Falls back to double arithmetic only when the
/// exponent spread of the input overflows the dyadic mantissa.
inline RademacherSum synthesize_exact(const Sequence& a, std::size_t cap = kExactCap) {
  detail::check_cap(detail::nonzero_count(a), cap);
  std::vector<Atom<double>> atoms;
  try {
    const auto exact = synthesize_exact(to_dyadic(a), cap);
    atoms.reserve(exact.law.size());
    for (const auto& at : exact.law.atoms()) {
      const double v = at.value.to_double();
      if (!atoms.empty() && atoms.back().value == v)
        atoms.back().measure += at.measure;
      else
        atoms.push_back({v, at.measure});
    }
  } catch (const std::overflow_error&) {
    atoms = detail::convolve_all<double>(a.coeffs());
  }
  Distribution law(std::move(atoms));
  auto step = rearrangement_of_law(law);
  return {a, std::move(law), std::move(step)};
}

/// Law of Ta after rounding every coefficient to the grid 2^-grid_bits.
///
/// The rounded sum is computed exactly on a dense lattice, so the only error
/// is the coefficient rounding: |Ta - T(round a)| <= value_error_bound
/// pointwise. Atoms whose measure underflows are dropped.
struct LatticeSum {
  RademacherSum sum;
  double value_error_bound;
  int grid_bits;
};

inline LatticeSum synthesize_lattice(const Sequence& a, int grid_bits = 14) {
  const double h = std::ldexp(1.0, -grid_bits);
  std::vector<std::int64_t> steps;
  double err = 0.0;
  std::int64_t total = 0;
  for (double c : a) {
    const double scaled = std::fabs(c) / h;
    if (scaled > 1e15) throw std::length_error("synthesize_lattice: coefficient too large for grid");
    const auto m = static_cast<std::int64_t>(std::llround(scaled));
    err += std::fabs(std::fabs(c) - static_cast<double>(m) * h);
    if (m != 0) steps.push_back(m);
    total += m;
  }
  if (total > (std::int64_t{1} << 28)) throw std::length_error("synthesize_lattice: lattice too large");
  const auto width = static_cast<std::size_t>(2 * total + 1);
  std::vector<double> p(width, 0.0);
  std::vector<double> q(width, 0.0);
  const auto centre = static_cast<std::size_t>(total);
  p[centre] = 1.0;
  std::int64_t reach = 0;  // current support is [centre-reach, centre+reach]
  for (std::int64_t m : steps) {
    const std::int64_t next = reach + m;
    const auto lo = static_cast<std::size_t>(static_cast<std::int64_t>(centre) - next);
    const auto hi = static_cast<std::size_t>(static_cast<std::int64_t>(centre) + next);
    std::fill(q.begin() + static_cast<std::ptrdiff_t>(lo), q.begin() + static_cast<std::ptrdiff_t>(hi) + 1, 0.0);
    const auto src_lo = static_cast<std::size_t>(static_cast<std::int64_t>(centre) - reach);
    const auto src_hi = static_cast<std::size_t>(static_cast<std::int64_t>(centre) + reach);
    const auto shift = static_cast<std::size_t>(m);
    for (std::size_t k = src_lo; k <= src_hi; ++k) {
      const double half = 0.5 * p[k];
      q[k + shift] += half;
      q[k - shift] += half;
    }
    std::swap(p, q);
    reach = next;
  }
  std::vector<Atom<double>> atoms;
  for (std::size_t k = width; k-- > 0;) {
    if (p[k] > 0.0)
      atoms.push_back({(static_cast<double>(k) - static_cast<double>(total)) * h, p[k]});
  }
  Distribution law(std::move(atoms));
  auto step = rearrangement_of_law(law);
  return {{a, std::move(law), std::move(step)}, err, grid_bits};
}

/// Law of Ta exactly when the cap allows, otherwise on a lattice.
struct SynthesisResult {
  RademacherSum sum;
  bool exact = true;
  double value_error_bound = 0.0;
};

inline SynthesisResult synthesize(const Sequence& a, std::size_t cap = kExactCap, int grid_bits = 14) {
  if (detail::nonzero_count(a) <= cap) return {synthesize_exact(a, cap), true, 0.0};
  auto lat = synthesize_lattice(a, grid_bits);
  return {std::move(lat.sum), false, lat.value_error_bound};
}

/// Empirical law of sum a_k eps_k over `samples` independent sign vectors.
///
/// The samples are split over a fixed number of streams, each seeded from
/// (seed, stream index); streams run concurrently and are merged in order,
/// so the result depends only on the seed.
inline Distribution sample_monte_carlo(const Sequence& a, std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("sample_monte_carlo: samples must be >= 1");
  constexpr std::size_t kStreams = 8;
  auto run_stream = [&a](std::uint64_t s, std::size_t stream, std::size_t count) {
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(stream)};
    std::mt19937_64 rng(seq);
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      double sum = 0.0;
      std::uint64_t bits = 0;
      int left = 0;
      for (double c : a) {
        if (left == 0) {
          bits = rng();
          left = 64;
        }
        sum += (bits & 1U) ? c : -c;
        bits >>= 1U;
        --left;
      }
      out.push_back(sum);
    }
    return out;
  };
  std::vector<std::future<std::vector<double>>> jobs;
  for (std::size_t s = 0; s < kStreams; ++s) {
    const std::size_t count = samples / kStreams + (s < samples % kStreams ? 1 : 0);
    jobs.push_back(std::async(std::launch::async, run_stream, seed, s, count));
  }
  std::vector<double> all;
  all.reserve(samples);
  for (auto& j : jobs) {
    auto part = j.get();
    all.insert(all.end(), part.begin(), part.end());
  }
  std::sort(all.begin(), all.end(), std::greater<>());
  std::vector<Atom<double>> atoms;
  std::vector<std::size_t> counts;
  for (double v : all) {
    if (!atoms.empty() && atoms.back().value == v) {
      ++counts.back();
    } else {
      atoms.push_back({v, 0.0});
      counts.push_back(1);
    }
  }
  for (std::size_t i = 0; i < atoms.size(); ++i)
    atoms[i].measure = static_cast<double>(counts[i]) / static_cast<double>(samples);
  return Distribution(std::move(atoms));
}

/// meas{|X| > tau}.
template <class V>
double tail_probability(const BasicDistribution<V>& d, double tau) {
  double m = 0.0;
  for (const auto& a : d.atoms())
    if (std::fabs(to_double(a.value)) > tau) m += a.measure;
  return m;
}

/// meas{X > tau}.
template <class V>
double upper_tail_probability(const BasicDistribution<V>& d, double tau) {
  double m = 0.0;
  for (const auto& a : d.atoms()) {
    if (!(to_double(a.value) > tau)) break;
    m += a.measure;
  }
  return m;
}

/// sup_x |F(x) - G(x)| between two laws.
inline double kolmogorov_distance(const Distribution& f, const Distribution& g) {
  // walk both atom lists in increasing value order
  const auto& fa = f.atoms();
  const auto& ga = g.atoms();
  std::size_t i = fa.size();
  std::size_t j = ga.size();
  double cf = 0.0;
  double cg = 0.0;
  double worst = 0.0;
  while (i > 0 || j > 0) {
    double v;
    if (j == 0 || (i > 0 && fa[i - 1].value <= ga[j - 1].value))
      v = fa[i - 1].value;
    else
      v = ga[j - 1].value;
    while (i > 0 && fa[i - 1].value == v) cf += fa[--i].measure;
    while (j > 0 && ga[j - 1].value == v) cg += ga[--j].measure;
    worst = std::max(worst, std::fabs(cf - cg));
  }
  return worst;
}

/// Integer part of t^2, snapping values within rounding of an integer.
inline std::size_t holmstedt_head_count(double t) {
  const double t2 = t * t;
  const double r = std::round(t2);
  const double snapped = std::fabs(t2 - r) <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, t2) ? r : t2;
  const double fl = std::floor(snapped);
  return fl >= 1e18 ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(fl);
}

/// sum_{k<=[t^2]} a_k* + t (sum_{k>[t^2]} (a_k*)^2)^{1/2}.
inline double holmstedt_phi(const Sequence& a, double t) {
  detail::require_positive_t(t, "holmstedt_phi");
  const Sequence s = rearrange_sequence(a);
  const std::size_t head = std::min(holmstedt_head_count(t), s.size());
  double h = 0.0;
  double tail = 0.0;
  for (std::size_t k = 0; k < head; ++k) h += s[k];
  for (std::size_t k = s.size(); k-- > head;) tail += s[k] * s[k];
  return h + t * std::sqrt(tail);
}

// ---------------------------------------------------------------------------
// Montgomery-Smith bound

struct MontgomeryWitness {
  double t = 0.0;
  double lhs = 0.0;  ///< meas{Ta > phi_a(t)/A}
  double rhs = 0.0;  ///< A^-1 exp(-A t^2)
};

struct MontgomeryReport {
  Sequence a;
  std::vector<double> t_grid;
  double minimal_A = std::numeric_limits<double>::infinity();
  MontgomeryWitness witness;

  bool finite() const { return std::isfinite(minimal_A); }
};

/// Smallest A in [1, search_cap] (to 1e-3) with
///   meas{Ta > phi_a(t)/A} >= exp(-A t^2)/A   for every t in t_grid,
/// phi_a being the exact K(t, a; l1, l2). Both sides are monotone in A, so
/// the feasible set is an interval [A_min, inf) and bisection applies.
/// The witness is the grid point with the smallest lhs/rhs at the reported A
/// (or at search_cap when no A qualifies).
template <class V>
MontgomeryReport montgomery_smith_min_A(const Sequence& a, const BasicDistribution<V>& law,
                                        std::span<const double> t_grid, double search_cap = 100.0) {
  if (t_grid.empty()) throw std::invalid_argument("montgomery_smith_min_A: empty t grid");
  MontgomeryReport rep;
  rep.a = a;
  rep.t_grid.assign(t_grid.begin(), t_grid.end());
  std::vector<double> phi;
  phi.reserve(t_grid.size());
  for (double t : t_grid) phi.push_back(k_l1_l2_seq(a, t));

  auto worst_at = [&](double A) {
    MontgomeryWitness w;
    double worst_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      const double t = t_grid[i];
      const double lhs = upper_tail_probability(law, phi[i] / A);
      const double rhs = std::exp(-A * t * t) / A;
      const double r = lhs / rhs;
      if (r < worst_ratio) {
        worst_ratio = r;
        w = {t, lhs, rhs};
      }
    }
    return std::pair{worst_ratio >= 1.0, w};
  };

  const auto [ok_cap, w_cap] = worst_at(search_cap);
  if (!ok_cap) {
    rep.witness = w_cap;
    return rep;
  }
  double lo = 1.0;
  double hi = search_cap;
  if (worst_at(lo).first) hi = lo;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    if (worst_at(mid).first)
      hi = mid;
    else
      lo = mid;
  }
  rep.minimal_A = hi;
  rep.witness = worst_at(hi).second;
  return rep;
}

template <class V>
MontgomeryReport montgomery_smith_min_A(const BasicRademacherSum<V>& ta, std::span<const double> t_grid,
                                        double search_cap = 100.0) {
  Sequence a;
  if constexpr (std::is_same_v<V, double>)
    a = ta.coeffs;
  else
    a = to_double(ta.coeffs);
  return montgomery_smith_min_A(a, ta.law, t_grid, search_cap);
}

}  // namespace radint
