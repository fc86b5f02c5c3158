#pragma once

// Finite sequences, step functions on (0,1] and (0,inf), nonincreasing
// rearrangements and the averaging/dilation operators built on them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "radint/dyadic.hpp"

namespace radint {

enum class Domain { unit_interval, half_line };

inline const char* to_string(Domain d) {
  return d == Domain::unit_interval ? "unit_interval" : "half_line";
}

// ---------------------------------------------------------------------------
// Sequence

/// Finite coefficient list a = (a_1, ..., a_n).
template <class V>
class BasicSequence {
 public:
  using value_type = V;

  BasicSequence() = default;
  explicit BasicSequence(std::vector<V> coeffs) : coeffs_(std::move(coeffs)) {
    for (const auto& c : coeffs_)
      if (!is_finite_value(c)) throw std::invalid_argument("Sequence: non-finite coefficient");
  }
  BasicSequence(std::initializer_list<V> coeffs) : BasicSequence(std::vector<V>(coeffs)) {}

  std::size_t size() const { return coeffs_.size(); }
  bool empty() const { return coeffs_.empty(); }
  const V& operator[](std::size_t i) const { return coeffs_[i]; }
  auto begin() const { return coeffs_.begin(); }
  auto end() const { return coeffs_.end(); }
  const std::vector<V>& coeffs() const { return coeffs_; }

  friend bool operator==(const BasicSequence&, const BasicSequence&) = default;

 private:
  std::vector<V> coeffs_;
};

using Sequence = BasicSequence<double>;
using DyadicSequence = BasicSequence<Dyadic>;

inline Sequence to_double(const DyadicSequence& a) {
  std::vector<double> out;
  out.reserve(a.size());
  for (const auto& c : a) out.push_back(c.to_double());
  return Sequence(std::move(out));
}

inline DyadicSequence to_dyadic(const Sequence& a) {
  std::vector<Dyadic> out;
  out.reserve(a.size());
  for (double c : a) out.push_back(Dyadic::from_double(c));
  return DyadicSequence(std::move(out));
}

/// (a_k*): absolute values sorted nonincreasing.
template <class V>
BasicSequence<V> rearrange_sequence(const BasicSequence<V>& a) {
  std::vector<V> out;
  out.reserve(a.size());
  for (const auto& c : a) out.push_back(abs_value(c));
  std::sort(out.begin(), out.end(), [](const V& x, const V& y) { return y < x; });
  return BasicSequence<V>(std::move(out));
}

/// sigma_n: every entry repeated n times.
template <class V>
BasicSequence<V> seq_dilation(const BasicSequence<V>& a, int n) {
  if (n < 1) throw std::invalid_argument("seq_dilation: n must be >= 1");
  std::vector<V> out;
  out.reserve(a.size() * static_cast<std::size_t>(n));
  for (const auto& c : a)
    for (int i = 0; i < n; ++i) out.push_back(c);
  return BasicSequence<V>(std::move(out));
}

inline double seq_l1(const Sequence& a) {
  double s = 0.0;
  for (double c : a) s += std::fabs(c);
  return s;
}

inline double seq_l2(const Sequence& a) {
  double s = 0.0;
  for (double c : a) s += c * c;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// StepFunction

/// Canonical piecewise-constant function.
///
/// Piece i is the half-open interval (breaks[i], breaks[i+1]] carrying
/// values[i]. Adjacent pieces never share a value. On the unit interval the
/// last breakpoint is 1; on the half line the function vanishes past the last
/// breakpoint and trailing zero pieces are dropped.
template <class V>
class BasicStepFunction {
 public:
  using value_type = V;

  BasicStepFunction() : BasicStepFunction(Domain::half_line, {0.0}, {}) {}

  BasicStepFunction(Domain domain, std::vector<double> breaks, std::vector<V> values)
      : domain_(domain), breaks_(std::move(breaks)), values_(std::move(values)) {
    validate();
    canonicalize();
  }

  /// Pieces given as consecutive (length, value) pairs starting at 0.
  static BasicStepFunction from_pieces(Domain domain,
                                       const std::vector<std::pair<double, V>>& pieces) {
    std::vector<double> breaks{0.0};
    std::vector<V> values;
    for (const auto& [len, v] : pieces) {
      breaks.push_back(breaks.back() + len);
      values.push_back(v);
    }
    if (domain == Domain::unit_interval && !breaks.empty()) snap_to_one(breaks);
    return BasicStepFunction(domain, std::move(breaks), std::move(values));
  }

  static BasicStepFunction constant(V c) {
    return BasicStepFunction(Domain::unit_interval, {0.0, 1.0}, {c});
  }

  /// c * indicator of (0, u].
  static BasicStepFunction indicator(Domain domain, double u, V c = V(1)) {
    if (domain == Domain::unit_interval && u < 1.0)
      return BasicStepFunction(domain, {0.0, u, 1.0}, {c, V(0)});
    if (domain == Domain::unit_interval) return constant(c);
    return BasicStepFunction(domain, {0.0, u}, {c});
  }

  Domain domain() const { return domain_; }
  std::size_t pieces() const { return values_.size(); }
  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<V>& values() const { return values_; }
  double left(std::size_t i) const { return breaks_[i]; }
  double right(std::size_t i) const { return breaks_[i + 1]; }
  double length(std::size_t i) const { return breaks_[i + 1] - breaks_[i]; }
  const V& value(std::size_t i) const { return values_[i]; }

  /// Right end of the represented support (1 on the unit interval).
  double extent() const { return breaks_.back(); }

  /// Value on the piece (a, b] containing s; zero outside the support.
  V value_at(double s) const {
    if (s <= 0.0 || s > extent()) return V(0);
    const auto it = std::lower_bound(breaks_.begin() + 1, breaks_.end(), s);
    return values_[static_cast<std::size_t>(it - breaks_.begin()) - 1];
  }

  bool is_nonincreasing() const {
    for (std::size_t i = 1; i < values_.size(); ++i)
      if (values_[i - 1] < values_[i]) return false;
    return true;
  }

  friend bool operator==(const BasicStepFunction&, const BasicStepFunction&) = default;

 private:
  static void snap_to_one(std::vector<double>& breaks) {
    if (std::fabs(breaks.back() - 1.0) <= 1e-12) breaks.back() = 1.0;
  }

  void validate() {
    if (breaks_.empty() || breaks_.front() != 0.0)
      throw std::invalid_argument("StepFunction: breakpoints must start at 0");
    if (breaks_.size() != values_.size() + 1)
      throw std::invalid_argument("StepFunction: need one more breakpoint than values");
    for (std::size_t i = 1; i < breaks_.size(); ++i) {
      if (!std::isfinite(breaks_[i]) || !(breaks_[i] > breaks_[i - 1]))
        throw std::invalid_argument("StepFunction: breakpoints must be finite and strictly increasing");
    }
    for (const auto& v : values_)
      if (!is_finite_value(v)) throw std::invalid_argument("StepFunction: non-finite value");
    if (domain_ == Domain::unit_interval) {
      snap_to_one(breaks_);
      if (breaks_.back() != 1.0)
        throw std::invalid_argument("StepFunction: unit-interval function must end at 1");
    }
  }

  void canonicalize() {
    std::vector<double> b{0.0};
    std::vector<V> v;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!v.empty() && v.back() == values_[i]) {
        b.back() = breaks_[i + 1];
      } else {
        v.push_back(values_[i]);
        b.push_back(breaks_[i + 1]);
      }
    }
    if (domain_ == Domain::half_line) {
      while (!v.empty() && v.back() == V(0)) {
        v.pop_back();
        b.pop_back();
      }
    }
    breaks_ = std::move(b);
    values_ = std::move(v);
  }

  Domain domain_;
  std::vector<double> breaks_;
  std::vector<V> values_;
};

using StepFunction = BasicStepFunction<double>;
using DyadicStepFunction = BasicStepFunction<Dyadic>;

inline StepFunction to_double(const DyadicStepFunction& x) {
  std::vector<double> v;
  v.reserve(x.pieces());
  for (const auto& c : x.values()) v.push_back(c.to_double());
  return StepFunction(x.domain(), x.breaks(), std::move(v));
}

/// x*: the nonincreasing rearrangement of |x|, on the same domain.
template <class V>
BasicStepFunction<V> rearrange_step(const BasicStepFunction<V>& x) {
  std::vector<std::pair<double, V>> pieces;
  pieces.reserve(x.pieces());
  for (std::size_t i = 0; i < x.pieces(); ++i) pieces.emplace_back(x.length(i), abs_value(x.value(i)));
  std::stable_sort(pieces.begin(), pieces.end(),
                   [](const auto& p, const auto& q) { return q.second < p.second; });
  // Coalesce equal values before summing lengths so that breakpoints
  // accumulate once per distinct value.
  std::vector<std::pair<double, V>> merged;
  for (const auto& p : pieces) {
    if (!merged.empty() && merged.back().second == p.second)
      merged.back().first += p.first;
    else
      merged.push_back(p);
  }
  return BasicStepFunction<V>::from_pieces(x.domain(), merged);
}

/// Signed integral of x over (0, u]; x is taken as zero past its extent.
inline double integral_to(const StepFunction& x, double u) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.pieces() && x.left(i) < u; ++i)
    s += x.value(i) * (std::min(u, x.right(i)) - x.left(i));
  return s;
}

/// Integral of v^p over (0, u] for a nonnegative step function.
inline double power_integral_to(const StepFunction& x, double u, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.pieces() && x.left(i) < u; ++i)
    s += std::pow(std::fabs(x.value(i)), p) * (std::min(u, x.right(i)) - x.left(i));
  return s;
}

/// int_0^u x*(s) ds for a nonincreasing x*. Saturates past the support.
inline double head_integral(const StepFunction& x_star, double u) {
  if (!(u > 0.0)) throw std::invalid_argument("head_integral: u must be positive");
  return integral_to(x_star, u);
}

/// U1: on (2^-k, 2^-k+1] the value 2^k int_0^{2^-k} y.
///
/// Levels run down to max(min_depth, level of the first breakpoint of y), so
/// the remaining head (0, 2^-depth] sits inside the first piece of y and its
/// exact average is that piece's value.
inline StepFunction dyadic_average(const StepFunction& y, int min_depth = 20) {
  if (y.domain() != Domain::unit_interval)
    throw std::invalid_argument("dyadic_average: y must live on the unit interval");
  const double first = y.right(0);
  const int level = static_cast<int>(std::ceil(-std::log2(first)));
  const int depth = std::max(min_depth, level);
  if (depth > 1000) throw std::invalid_argument("dyadic_average: first piece too short");

  std::vector<double> breaks{0.0};
  std::vector<double> values;
  const double head = std::ldexp(1.0, -depth);
  breaks.push_back(head);
  values.push_back(integral_to(y, head) / head);
  for (int k = depth; k >= 1; --k) {
    const double lo = std::ldexp(1.0, -k);
    breaks.push_back(2.0 * lo);
    values.push_back(integral_to(y, lo) / lo);
  }
  return StepFunction(Domain::unit_interval, std::move(breaks), std::move(values));
}

/// Q: (int_{k-1}^k x)_{k=1..K} with K the ceiling of the support.
inline Sequence unit_average(const StepFunction& x) {
  if (x.domain() != Domain::half_line)
    throw std::invalid_argument("unit_average: x must live on the half line");
  const auto count = static_cast<std::size_t>(std::ceil(x.extent()));
  std::vector<double> out(count, 0.0);
  for (std::size_t i = 0; i < x.pieces(); ++i) {
    double lo = x.left(i);
    const double hi = x.right(i);
    while (lo < hi) {
      const double cell = std::floor(lo);
      const double end = std::min(hi, cell + 1.0);
      out[static_cast<std::size_t>(cell)] += x.value(i) * (end - lo);
      lo = end;
    }
  }
  return Sequence(std::move(out));
}

/// The sequence a viewed as the step function sum a_k chi_(k-1,k].
inline StepFunction sequence_as_step(const Sequence& a) {
  std::vector<double> breaks{0.0};
  for (std::size_t k = 1; k <= a.size(); ++k) breaks.push_back(static_cast<double>(k));
  return StepFunction(Domain::half_line, std::move(breaks), a.coeffs());
}

// ---------------------------------------------------------------------------
// Distribution

template <class V>
struct Atom {
  V value;
  double measure;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finite law: atoms with strictly decreasing values and positive measures.
template <class V>
class BasicDistribution {
 public:
  BasicDistribution() = default;
  explicit BasicDistribution(std::vector<Atom<V>> atoms) : atoms_(std::move(atoms)) {
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (!(atoms_[i].measure > 0.0))
        throw std::invalid_argument("Distribution: atom measures must be positive");
      if (i > 0 && !(atoms_[i].value < atoms_[i - 1].value))
        throw std::invalid_argument("Distribution: values must be strictly decreasing");
    }
  }

  const std::vector<Atom<V>>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  double total_measure() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.measure;
    return s;
  }

  /// Largest |value|.
  V max_abs() const {
    if (atoms_.empty()) return V(0);
    const V hi = abs_value(atoms_.front().value);
    const V lo = abs_value(atoms_.back().value);
    return hi < lo ? lo : hi;
  }

  friend bool operator==(const BasicDistribution&, const BasicDistribution&) = default;

 private:
  std::vector<Atom<V>> atoms_;
};

using Distribution = BasicDistribution<double>;
using DyadicDistribution = BasicDistribution<Dyadic>;

/// |X|* on (0,1] for a law of total measure one.
template <class V>
BasicStepFunction<V> rearrangement_of_law(const BasicDistribution<V>& law) {
  std::vector<std::pair<double, V>> pieces;  // (measure, |value|)
  pieces.reserve(law.size());
  for (const auto& a : law.atoms()) pieces.emplace_back(a.measure, abs_value(a.value));
  std::stable_sort(pieces.begin(), pieces.end(),
                   [](const auto& p, const auto& q) { return q.second < p.second; });
  std::vector<std::pair<double, V>> merged;
  for (const auto& p : pieces) {
    if (!merged.empty() && merged.back().second == p.second)
      merged.back().first += p.first;
    else
      merged.push_back(p);
  }
  return BasicStepFunction<V>::from_pieces(Domain::unit_interval, merged);
}

// ---------------------------------------------------------------------------
// ConcaveFn

/// Parameter function phi of a Marcinkiewicz, Lorentz or generalized
/// Marcinkiewicz space.
struct ConcaveFn {
  std::function<double(double)> eval;
  Domain domain = Domain::unit_interval;
  bool claims_concave = true;
  bool claims_zero_at_origin = true;
  std::string name;

  double operator()(double t) const { return eval(t); }

  /// phi(0+): zero when claimed, otherwise phi evaluated at 1e-15.
  double at_origin() const { return claims_zero_at_origin ? 0.0 : eval(1e-15); }

  /// Largest t for which phi may be evaluated.
  double upper() const {
    return domain == Domain::unit_interval ? 1.0 : std::numeric_limits<double>::infinity();
  }
};

struct ShapeCheck {
  bool nonnegative = true;
  bool nondecreasing = true;
  bool midpoint_concave = true;
  double worst_concavity_gap = 0.0;

  bool ok() const { return nonnegative && nondecreasing && midpoint_concave; }
};

/// Checks the ConcaveFn invariants on the given sample points.
inline ShapeCheck check_shape(const ConcaveFn& f, std::span<const double> grid,
                              double tol = 1e-12) {
  ShapeCheck out;
  std::vector<double> pts(grid.begin(), grid.end());
  std::sort(pts.begin(), pts.end());
  double prev = -std::numeric_limits<double>::infinity();
  for (double t : pts) {
    const double v = f(t);
    if (v < -tol) out.nonnegative = false;
    if (v < prev - tol * std::max(1.0, std::fabs(prev))) out.nondecreasing = false;
    prev = v;
  }
  if (f.claims_concave) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); j += std::max<std::size_t>(1, pts.size() / 16)) {
        const double s = pts[i];
        const double t = pts[j];
        const double mid = f(0.5 * (s + t));
        const double chord = 0.5 * (f(s) + f(t));
        const double gap = chord - mid;
        if (gap > out.worst_concavity_gap) out.worst_concavity_gap = gap;
        if (gap > tol * std::max(1.0, std::fabs(chord))) out.midpoint_concave = false;
      }
    }
  }
  return out;
}

/// n points log-spaced in [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (n == 0 || !(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("log_grid: bad range");
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace radint
