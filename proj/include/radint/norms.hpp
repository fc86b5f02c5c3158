#pragma once

// Norms of rearrangement invariant function spaces on (0,1] and of the
// sequence spaces paired with them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "radint/core.hpp"
#include "radint/kfunc.hpp"

namespace radint {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Function norms

/// ||x||_{M(phi)} = sup_{0<t<=1} phi(t)^-1 int_0^t x*.
inline double marcinkiewicz_norm(const StepFunction& x, const ConcaveFn& phi, const SupOptions& opt = {}) {
  const double u_max = std::min(1.0, x.domain() == Domain::unit_interval ? 1.0 : phi.upper());
  return sup_head_ratio(rearrange_step(x), [&phi](double u) { return phi(u); }, u_max, opt);
}

/// ||x||_p, with p = infinity giving the largest |value|.
inline double lp_norm(const StepFunction& x, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : x.values()) m = std::max(m, std::fabs(v));
    return m;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.pieces(); ++i) s += std::pow(std::fabs(x.value(i)), p) * x.length(i);
  return std::pow(s, 1.0 / p);
}

/// N(t) = exp(t^2) - 1.
inline double exp_square_young(double t) { return std::expm1(t * t); }

/// Luxemburg norm inf{u > 0 : int S(|x|/u) <= 1}.
///
/// The modular I(u) = sum_i S(|v_i|/u) m_i is nonincreasing in u. Starting
/// from u = ||x||_inf the bracket is widened by doubling (or halving) until
/// I(lo) > 1 >= I(hi), then bisected to relative width tol. Both phases are
/// capped at 200 steps and failure to bracket throws.
template <class Young>
double orlicz_luxemburg_norm(const StepFunction& x, Young&& S, double tol = 1e-12) {
  const double sup = lp_norm(x, kInfinity);
  if (sup == 0.0) return 0.0;
  auto modular = [&](double u) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.pieces(); ++i) {
      const double v = std::fabs(x.value(i));
      if (v == 0.0) continue;
      s += S(v / u) * x.length(i);
    }
    return std::isnan(s) ? kInfinity : s;
  };
  double lo = sup;
  double hi = sup;
  int steps = 0;
  if (modular(hi) > 1.0) {
    while (modular(hi) > 1.0) {
      lo = hi;
      hi *= 2.0;
      if (++steps > 200) throw std::runtime_error("orlicz_luxemburg_norm: failed to bracket from above");
    }
  } else {
    while (!(modular(lo) > 1.0)) {
      hi = lo;
      lo *= 0.5;
      if (++steps > 200) throw std::runtime_error("orlicz_luxemburg_norm: failed to bracket from below");
    }
  }
  for (int it = 0; it < 200 && hi - lo > tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (modular(mid) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

/// ||x||_{L_N}, N(t) = exp(t^2) - 1.
inline double exp_square_norm(const StepFunction& x, double tol = 1e-12) {
  return orlicz_luxemburg_norm(x, exp_square_young, tol);
}

/// Lorentz norm (int_0^1 x*^p dphi)^{1/p} as an exact Stieltjes sum over the
/// pieces of x*.
inline double lorentz_norm(const StepFunction& x, const ConcaveFn& phi, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lorentz_norm: p must be >= 1");
  const StepFunction xs = rearrange_step(x);
  double s = 0.0;
  double prev = phi.at_origin();
  for (std::size_t i = 0; i < xs.pieces(); ++i) {
    const double cur = phi(xs.right(i));
    s += std::pow(xs.value(i), p) * (cur - prev);
    prev = cur;
  }
  return std::pow(s, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Sequence norms

inline double seq_lp_norm(const Sequence& a, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("seq_lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double c : a) m = std::max(m, std::fabs(c));
    return m;
  }
  double s = 0.0;
  for (double c : a) s += std::pow(std::fabs(c), p);
  return std::pow(s, 1.0 / p);
}

/// sup_k log2(2k)^-1 sum_{i<=k} a_i*. Partial sums are constant past n while
/// the weight keeps falling, so k <= n suffices.
inline double seq_l1log_norm(const Sequence& a) {
  const Sequence s = rearrange_sequence(a);
  double partial = 0.0;
  double best = 0.0;
  for (std::size_t k = 1; k <= s.size(); ++k) {
    partial += s[k - 1];
    best = std::max(best, partial / std::log2(2.0 * static_cast<double>(k)));
  }
  return best;
}

/// ||a||_{r,p} = (sum_k (a_k*)^p k^{p/r - 1})^{1/p}.
inline double seq_lorentz_rp_norm(const Sequence& a, double r, double p) {
  if (!(r >= 1.0) || !(p >= 1.0)) throw std::invalid_argument("seq_lorentz_rp_norm: r, p must be >= 1");
  const Sequence s = rearrange_sequence(a);
  double sum = 0.0;
  for (std::size_t k = 1; k <= s.size(); ++k)
    sum += std::pow(s[k - 1], p) * std::pow(static_cast<double>(k), p / r - 1.0);
  return std::pow(sum, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Lattices of two-sided sequences

/// Finite window (s_k)_{k_min <= k <= k_max} of a two-sided sequence.
struct TwoSidedWindow {
  int k_min = 0;
  std::vector<double> values;

  int k_max() const { return k_min + static_cast<int>(values.size()) - 1; }
  double at(int k) const { return values[static_cast<std::size_t>(k - k_min)]; }
};

/// Parameter E of the K-method: l_p(w_k) or l_inf(w_k) evaluated on
/// k_min..k_max.
struct LatticeParam {
  enum class Kind { weighted_lp, weighted_linf };
  Kind kind = Kind::weighted_linf;
  double p = 1.0;
  std::function<double(int)> weight;
  int k_min = -40;
  int k_max = 40;
  double tail_tol = 1e-6;
  std::string name;

  /// l_inf(u_k) with u_k = 1/(k+1) for k >= 0 and 1 for k < 0.
  static LatticeParam log_weighted_sup(int k_min = -40, int k_max = 40) {
    return {Kind::weighted_linf, kInfinity,
            [](int k) { return k >= 0 ? 1.0 / (k + 1.0) : 1.0; }, k_min, k_max, 1e-6, "linf(1/(k+1))"};
  }
  /// l_p(2^{-k theta}), the parameter of (X0, X1)_{theta,p}.
  /// The window defaults to |k| <= K with 2^{-K min(theta, 1-theta)} about 1e-9.
  static LatticeParam theta_p(double theta, double p) {
    const double m = std::min(theta, 1.0 - theta);
    const int K = m > 0.0 ? static_cast<int>(std::clamp(std::ceil(30.0 / m), 40.0, 4000.0)) : 40;
    return theta_p(theta, p, -K, K);
  }
  static LatticeParam theta_p(double theta, double p, int k_min, int k_max) {
    return {Kind::weighted_lp, p, [theta](int k) { return std::exp2(-theta * k); }, k_min, k_max, 1e-6,
            "lp(2^{-k theta})"};
  }
  /// l_inf(min(1, 2^-k)); its K-method norm is K(1, x), the norm of X0 + X1.
  static LatticeParam sum_space_sup(int k_min = -40, int k_max = 40) {
    return {Kind::weighted_linf, kInfinity, [](int k) { return k <= 0 ? 1.0 : std::exp2(-k); }, k_min,
            k_max, 1e-6, "linf(min(1,2^-k))"};
  }
};

/// Bounds on a sequence outside the window: |s_k| <= high for k > k_max and
/// |s_k| <= low * 2^k for k < k_min.
struct TailEnvelope {
  double high = 0.0;
  double low = 0.0;
};

struct LatticeNorm {
  double value = 0.0;       ///< norm of the window
  double tail_bound = 0.0;  ///< true norm lies in [value, value + tail_bound]
  bool admissible = true;
};

namespace detail {

inline constexpr int kTailTerms = 4096;

/// Norm of the out-of-window part of a sequence bounded by `env`, or +inf
/// when the weighted envelope does not decay.
inline double lattice_tail(const LatticeParam& E, const TailEnvelope& env) {
  const bool sup = E.kind == LatticeParam::Kind::weighted_linf;
  double acc = 0.0;
  double last_hi = 0.0;
  double last_lo = 0.0;
  int j = 1;
  for (; j <= kTailTerms; ++j) {
    const double hi = E.weight(E.k_max + j) * env.high;
    const double lo = E.weight(E.k_min - j) * env.low * std::exp2(E.k_min - j);
    if (!std::isfinite(hi) || !std::isfinite(lo)) return kInfinity;
    if (sup)
      acc = std::max({acc, hi, lo});
    else
      acc += std::pow(hi, E.p) + std::pow(lo, E.p);
    const bool negligible = j >= 64 && hi <= 1e-40 * std::max(acc, 1e-300) && lo <= 1e-40 * std::max(acc, 1e-300) &&
                            hi <= last_hi && lo <= last_lo;
    last_hi = hi;
    last_lo = lo;
    if (negligible) break;
  }
  j = std::min(j, kTailTerms);
  // The far terms must be decaying for the truncation to be meaningful.
  const double hi_next = E.weight(E.k_max + j + 1) * env.high;
  const double lo_next = E.weight(E.k_min - j - 1) * env.low * std::exp2(E.k_min - j - 1);
  if (sup) {
    if (hi_next > last_hi * (1.0 + 1e-12) || lo_next > last_lo * (1.0 + 1e-12)) return kInfinity;
    return acc;
  }
  const double r_hi = last_hi > 0.0 ? hi_next / last_hi : 0.0;
  const double r_lo = last_lo > 0.0 ? lo_next / last_lo : 0.0;
  // sum of a slowly decaying tail (ratio -> 1) is treated as divergent
  if (r_hi > 1.0 - 1e-3 || r_lo > 1.0 - 1e-3) return kInfinity;
  acc += std::pow(hi_next, E.p) / (1.0 - std::pow(r_hi, E.p)) + std::pow(lo_next, E.p) / (1.0 - std::pow(r_lo, E.p));
  return std::pow(acc, 1.0 / E.p);
}

inline double window_norm(const LatticeParam& E, const std::function<double(int)>& s) {
  double acc = 0.0;
  for (int k = E.k_min; k <= E.k_max; ++k) {
    const double term = E.weight(k) * std::fabs(s(k));
    if (E.kind == LatticeParam::Kind::weighted_linf)
      acc = std::max(acc, term);
    else
      acc += std::pow(term, E.p);
  }
  return E.kind == LatticeParam::Kind::weighted_linf ? acc : std::pow(acc, 1.0 / E.p);
}

}  // namespace detail

struct Admissibility {
  bool ok = true;
  std::string reason;
};

/// E must have positive finite weights on its window and contain
/// (min(1, 2^k))_k with a tail below tail_tol relative to the window norm.
inline Admissibility check_admissible(const LatticeParam& E) {
  if (!E.weight) return {false, "missing weight"};
  if (E.k_min > E.k_max) return {false, "empty truncation window"};
  if (E.kind == LatticeParam::Kind::weighted_lp && !(E.p >= 1.0 && std::isfinite(E.p)))
    return {false, "p must lie in [1, inf)"};
  for (int k = E.k_min; k <= E.k_max; ++k) {
    const double w = E.weight(k);
    if (!(w > 0.0) || !std::isfinite(w)) return {false, "weight at k=" + std::to_string(k) + " is not positive"};
  }
  const double inside = detail::window_norm(E, [](int k) { return std::min(1.0, std::exp2(k)); });
  // (min(1,2^k)) is flat to the right and 2^k to the left.
  const double tail = detail::lattice_tail(E, {1.0, 1.0});
  if (!std::isfinite(tail)) return {false, "(min(1,2^k)) is not in E: weighted tail does not decay"};
  const double excess = E.kind == LatticeParam::Kind::weighted_linf ? std::max(0.0, tail - inside) : tail;
  if (excess > E.tail_tol * std::max(1.0, inside))
    return {false, "tail of (min(1,2^k)) beyond the window exceeds tail_tol"};
  return {};
}

/// Weighted l_p or l_inf norm of the window with a bound on what lies
/// outside it. Without an envelope the sequence is assumed flat beyond
/// k_max and proportional to 2^k below k_min, the shape of a K-sequence once
/// the window covers both saturation points.
inline LatticeNorm lattice_norm(const TwoSidedWindow& s, const LatticeParam& E,
                                std::optional<TailEnvelope> envelope = std::nullopt) {
  if (const auto adm = check_admissible(E); !adm.ok)
    throw std::invalid_argument("lattice_norm: inadmissible lattice: " + adm.reason);
  if (s.values.empty() || s.k_min > E.k_min || s.k_max() < E.k_max)
    throw std::invalid_argument("lattice_norm: window does not cover the truncation range");
  LatticeNorm out;
  out.value = detail::window_norm(E, [&s](int k) { return s.at(k); });
  const TailEnvelope env = envelope.value_or(
      TailEnvelope{std::fabs(s.at(E.k_max)), std::fabs(s.at(E.k_min)) * std::exp2(-E.k_min)});
  const double tail = detail::lattice_tail(E, env);
  out.tail_bound = E.kind == LatticeParam::Kind::weighted_linf ? std::max(0.0, tail - out.value) : tail;
  return out;
}

}  // namespace radint
