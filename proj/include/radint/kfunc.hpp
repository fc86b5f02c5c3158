#pragma once

// Peetre K-functionals for the couples used in the Rademacher analysis:
// (l1,l2) and (L1,L2) exactly by soft thresholding, (L1,Linf) by head
// integrals, Marcinkiewicz couples and (Linf,G) by sup formulas, the
// head/tail surrogates for (L1,L2) and (Linf,Lq), and a brute-force
// decomposition oracle.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "radint/core.hpp"

namespace radint {

namespace detail {

/// min over lambda >= 0 of
///   sum_i m_i (v_i - lambda)_+ + t (sum_i m_i min(v_i, lambda)^2)^(1/2)
/// for v sorted nonincreasing and nonnegative. On the bracket where exactly
/// the first j values exceed lambda the objective is convex with a closed
/// form stationary point, so the minimum over each bracket is exact.
struct SoftThreshold {
  double value;
  double lambda;
};

inline SoftThreshold soft_threshold_k(std::span<const double> v, std::span<const double> m,
                                      double t) {
  const std::size_t n = v.size();
  if (n == 0) return {0.0, 0.0};
  std::vector<double> tail_sq(n + 1, 0.0);  // tail_sq[j] = sum_{i>=j} m_i v_i^2
  for (std::size_t i = n; i-- > 0;) tail_sq[i] = tail_sq[i + 1] + m[i] * v[i] * v[i];

  SoftThreshold best{t * std::sqrt(tail_sq[0]), v[0]};
  double mass = 0.0;
  double head = 0.0;
  const double t2 = t * t;
  for (std::size_t j = 1; j <= n; ++j) {
    mass += m[j - 1];
    head += m[j - 1] * v[j - 1];
    const double q = tail_sq[j];
    const double hi = v[j - 1];
    const double lo = j < n ? v[j] : 0.0;
    auto eval = [&](double lam) {
      return head - mass * lam + t * std::sqrt(mass * lam * lam + q);
    };
    auto consider = [&](double lam) {
      const double f = eval(lam);
      if (f < best.value) best = {f, lam};
    };
    consider(lo);
    consider(hi);
    if (t2 > mass && q > 0.0) {
      const double lam = std::sqrt(q / (t2 - mass));
      if (lam > lo && lam < hi) consider(lam);
    }
  }
  if (best.value < 0.0) best.value = 0.0;
  return best;
}

/// Nonincreasing |values| with their multiplicities.
inline void grouped_magnitudes(const Sequence& a, std::vector<double>& v, std::vector<double>& m) {
  const Sequence s = rearrange_sequence(a);
  v.clear();
  m.clear();
  for (double c : s) {
    if (c == 0.0) break;
    if (!v.empty() && v.back() == c)
      m.back() += 1.0;
    else {
      v.push_back(c);
      m.push_back(1.0);
    }
  }
}

inline void require_positive_t(double t, const char* who) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw std::invalid_argument(std::string(who) + ": t must be positive and finite");
}

/// Running head integral over the pieces of a nonincreasing step function.
template <class F>
void for_each_piece_with_head(const StepFunction& x_star, F&& f) {
  double head = 0.0;
  for (std::size_t i = 0; i < x_star.pieces(); ++i) {
    f(x_star.left(i), x_star.right(i), x_star.value(i), head);
    head += x_star.value(i) * x_star.length(i);
  }
}

}  // namespace detail

/// K(t, a; l1, l2) with the optimal threshold lambda of the decomposition
/// a = (|a|-lambda)_+ sgn a + min(|a|, lambda) sgn a.
struct L1L2Decomposition {
  double value;
  double lambda;
};

inline L1L2Decomposition k_l1_l2_seq_decomposition(const Sequence& a, double t) {
  detail::require_positive_t(t, "k_l1_l2_seq");
  std::vector<double> v;
  std::vector<double> m;
  detail::grouped_magnitudes(a, v, m);
  const auto r = detail::soft_threshold_k(v, m, t);
  return {r.value, r.lambda};
}

/// Exact K(t, a; l1, l2).
inline double k_l1_l2_seq(const Sequence& a, double t) {
  return k_l1_l2_seq_decomposition(a, t).value;
}

/// Exact K(u, x; L1, Linf) = int_0^u x*.
inline double k_l1_linf_fun(const StepFunction& x, double u) {
  detail::require_positive_t(u, "k_l1_linf_fun");
  return head_integral(rearrange_step(x), u);
}

/// Options for the per-piece maximization used by the sup formulas.
struct SupOptions {
  int samples_per_piece = 9;
  int max_iterations = 64;
  double rel_tol = 1e-8;
};

/// sup over 0 < u <= u_max of (int_0^u x*) / denom(u), for x* nonincreasing
/// and denom positive and nondecreasing.
///
/// Every piece end is evaluated; inside a piece the ratio is sampled on a
/// log grid and the best sample is refined by golden-section search in log u.
/// Pieces whose bound H(right)/denom(left) cannot beat the incumbent are
/// skipped.
inline double sup_head_ratio(const StepFunction& x_star, const std::function<double(double)>& denom,
                             double u_max, const SupOptions& opt = {}) {
  struct Span {
    double lo, hi, value, head;
  };
  std::vector<Span> spans;
  detail::for_each_piece_with_head(x_star, [&](double lo, double hi, double v, double head) {
    if (lo < u_max) spans.push_back({lo, std::min(hi, u_max), v, head});
  });
  const double covered = spans.empty() ? 0.0 : spans.back().hi;
  if (covered < u_max) {
    const double total = spans.empty() ? 0.0 : spans.back().head + spans.back().value * (covered - spans.back().lo);
    spans.push_back({covered, u_max, 0.0, total});
  }

  double best = 0.0;
  auto ratio = [&](const Span& s, double u) {
    const double h = s.head + s.value * (u - s.lo);
    return h / denom(u);
  };
  for (const auto& s : spans) best = std::max(best, ratio(s, s.hi));

  for (const auto& s : spans) {
    const double lo = s.lo > 0.0 ? s.lo : s.hi * std::ldexp(1.0, -50);
    const double bound = (s.head + s.value * (s.hi - s.lo)) / denom(lo);
    if (!(bound > best * (1.0 + 1e-12))) continue;

    const double a = std::log(lo);
    const double b = std::log(s.hi);
    const int n = std::max(3, opt.samples_per_piece);
    int best_i = 0;
    double best_here = -1.0;
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      xs[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
      const double r = ratio(s, std::exp(xs[static_cast<std::size_t>(i)]));
      if (r > best_here) {
        best_here = r;
        best_i = i;
      }
    }
    best = std::max(best, best_here);
    double lo_s = xs[static_cast<std::size_t>(std::max(0, best_i - 1))];
    double hi_s = xs[static_cast<std::size_t>(std::min(n - 1, best_i + 1))];
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi_s - g * (hi_s - lo_s);
    double d = lo_s + g * (hi_s - lo_s);
    double fc = ratio(s, std::exp(c));
    double fd = ratio(s, std::exp(d));
    for (int it = 0; it < opt.max_iterations; ++it) {
      if (std::fabs(fc - fd) <= opt.rel_tol * 1e-2 * std::max(fc, fd) && hi_s - lo_s < 1e-10) break;
      if (fc > fd) {
        hi_s = d;
        d = c;
        fd = fc;
        c = hi_s - g * (hi_s - lo_s);
        fc = ratio(s, std::exp(c));
      } else {
        lo_s = c;
        c = d;
        fc = fd;
        d = lo_s + g * (hi_s - lo_s);
        fd = ratio(s, std::exp(d));
      }
    }
    best = std::max({best, fc, fd});
  }
  return best;
}

/// K(t, x; Linf, G) through the (M(u), M(u log^{1/2}(2/u))) sup formula.
///
/// On each piece of x* the product of the running average and the weight is
/// log-convex in ln(1/u) wherever the weight is below 1, so the sup is
/// attained at a breakpoint or at the kink u = 2^{1-t^2}.
inline double k_linf_G(const StepFunction& x, double t) {
  detail::require_positive_t(t, "k_linf_G");
  if (x.domain() != Domain::unit_interval)
    throw std::invalid_argument("k_linf_G: x must live on the unit interval");
  const StepFunction xs = rearrange_step(x);
  auto weight = [t](double u) { return std::min(1.0, t / std::sqrt(std::log2(2.0 / u))); };
  const double kink = t * t >= 1.0 ? std::exp2(1.0 - t * t) : 2.0;

  double best = 0.0;
  detail::for_each_piece_with_head(xs, [&](double lo, double hi, double v, double head) {
    // Written so that the first piece averages to v exactly.
    auto average = [&](double u) { return v + (head - v * lo) / u; };
    best = std::max(best, average(hi) * weight(hi));
    if (kink > lo && kink < hi) best = std::max(best, average(kink) * weight(kink));
  });
  return best;
}

/// K(t, x; M(phi0), M(phi1)) = sup_u int_0^u x* / max(phi0(u), phi1(u)/t).
inline double k_marcinkiewicz_pair(const StepFunction& x, double t, const ConcaveFn& phi0,
                                   const ConcaveFn& phi1, const SupOptions& opt = {}) {
  detail::require_positive_t(t, "k_marcinkiewicz_pair");
  if (x.domain() != Domain::unit_interval)
    throw std::invalid_argument("k_marcinkiewicz_pair: x must live on the unit interval");
  const auto denom = [&](double u) { return std::max(phi0(u), phi1(u) / t); };
  return sup_head_ratio(rearrange_step(x), denom, 1.0, opt);
}

/// phi0(u) = u, phi1(u) = u log2^{1/2}(2/u): the couple (Linf, L_N).
inline ConcaveFn phi_linf() {
  return {[](double u) { return u; }, Domain::unit_interval, true, true, "u"};
}
inline ConcaveFn phi_exp_square() {
  return {[](double u) { return u * std::sqrt(std::log2(2.0 / u)); }, Domain::unit_interval, true, true,
          "u*log2(2/u)^(1/2)"};
}

/// Head/tail surrogate for K(t, x; L1, L2) on the half line:
/// max{int_0^{t^2} x*, t (int_{t^2}^inf x*^2)^{1/2}}.
inline double k_l1_l2_fun(const StepFunction& x, double t) {
  detail::require_positive_t(t, "k_l1_l2_fun");
  const StepFunction xs = rearrange_step(x);
  const double s0 = t * t;
  double head = 0.0;
  double tail = 0.0;
  for (std::size_t i = 0; i < xs.pieces(); ++i) {
    const double lo = xs.left(i);
    const double hi = xs.right(i);
    const double v = xs.value(i);
    if (s0 > lo) head += v * (std::min(hi, s0) - lo);
    if (hi > s0) tail += v * v * (hi - std::max(lo, s0));
  }
  return std::max(head, t * std::sqrt(tail));
}

/// Exact K(t, x; L1, L2) by soft thresholding over the pieces of x.
inline double k_l1_l2_fun_exact(const StepFunction& x, double t) {
  detail::require_positive_t(t, "k_l1_l2_fun_exact");
  const StepFunction xs = rearrange_step(x);
  std::vector<double> v;
  std::vector<double> m;
  for (std::size_t i = 0; i < xs.pieces(); ++i) {
    if (xs.value(i) == 0.0) continue;
    v.push_back(xs.value(i));
    m.push_back(xs.length(i));
  }
  return detail::soft_threshold_k(v, m, t).value;
}

/// Head surrogate for K(t, x; Linf, Lq): t (int_0^{min(1, t^-q)} x*^q)^{1/q}.
inline double k_linf_lq(const StepFunction& x, double t, double q) {
  detail::require_positive_t(t, "k_linf_lq");
  if (!(q >= 1.0) || !std::isfinite(q)) throw std::invalid_argument("k_linf_lq: q must lie in [1, inf)");
  const StepFunction xs = rearrange_step(x);
  const double s0 = std::min(1.0, std::pow(t, -q));
  // t^-q underflows only far inside the first piece, where the value is x*(0+)
  if (s0 <= 0.0) return xs.pieces() == 0 ? 0.0 : xs.value(0);
  return t * std::pow(power_integral_to(xs, s0, q), 1.0 / q);
}

// ---------------------------------------------------------------------------
// Brute-force oracle

enum class OracleCouple { l1_l2_seq, l1_l2_fun };

/// Reference K value by direct search over decompositions x1 = f * x with a
/// per-coordinate (per-piece) fraction f in [0, 1]: coordinate descent on a
/// 50-point grid followed by golden-section polishing, restarted from
/// f = 0, f = 1/2 and f = 1.
inline double k_oracle_atoms(std::span<const double> values, std::span<const double> weights, double t) {
  const std::size_t n = values.size();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::fabs(values[i]);
  auto objective = [&](const std::vector<double>& f) {
    double x0 = 0.0;
    double x1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x0 += weights[i] * v[i] * std::fabs(1.0 - f[i]);
      x1 += weights[i] * (f[i] * v[i]) * (f[i] * v[i]);
    }
    return x0 + t * std::sqrt(x1);
  };

  constexpr int kGrid = 50;
  double best = std::numeric_limits<double>::infinity();
  for (double start : {0.0, 0.5, 1.0}) {
    std::vector<double> f(n, start);
    double cur = objective(f);
    for (int sweep = 0; sweep < 500; ++sweep) {
      const double before = cur;
      for (std::size_t i = 0; i < n; ++i) {
        const double keep = f[i];
        double arg = keep;
        for (int g = 0; g < kGrid; ++g) {
          f[i] = static_cast<double>(g) / (kGrid - 1);
          const double val = objective(f);
          if (val < cur) {
            cur = val;
            arg = f[i];
          }
        }
        // polish inside the neighbouring grid cells
        double lo = std::max(0.0, arg - 1.0 / (kGrid - 1));
        double hi = std::min(1.0, arg + 1.0 / (kGrid - 1));
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        for (int it = 0; it < 80; ++it) {
          const double c = hi - gr * (hi - lo);
          const double d = lo + gr * (hi - lo);
          f[i] = c;
          const double fc = objective(f);
          f[i] = d;
          const double fd = objective(f);
          if (fc < fd)
            hi = d;
          else
            lo = c;
        }
        f[i] = 0.5 * (lo + hi);
        const double val = objective(f);
        if (val < cur) {
          cur = val;
        } else {
          f[i] = arg;
        }
      }
      if (before - cur <= 1e-15 * std::max(1.0, cur)) break;
    }
    best = std::min(best, cur);
  }
  return best;
}

inline constexpr std::size_t kOracleCap = 8;

inline double k_oracle(const Sequence& a, double t) {
  detail::require_positive_t(t, "k_oracle");
  if (a.size() > kOracleCap) throw std::length_error("k_oracle: instance exceeds 8 entries");
  const std::vector<double> w(a.size(), 1.0);
  return k_oracle_atoms(a.coeffs(), w, t);
}

/// Oracle for K(t, x; L1, L2) with x on the half line.
inline double k_oracle(const StepFunction& x, double t) {
  detail::require_positive_t(t, "k_oracle");
  if (x.pieces() > kOracleCap) throw std::length_error("k_oracle: instance exceeds 8 pieces");
  std::vector<double> w(x.pieces());
  for (std::size_t i = 0; i < x.pieces(); ++i) w[i] = x.length(i);
  return k_oracle_atoms(x.values(), w, t);
}

// ---------------------------------------------------------------------------
// KCurve

struct KCurve {
  std::vector<double> t_grid;
  std::vector<double> values;
  std::string couple_tag;
};

template <class Engine>
KCurve sample_curve(Engine&& engine, std::span<const double> t_grid, std::string tag) {
  KCurve c{{t_grid.begin(), t_grid.end()}, {}, std::move(tag)};
  c.values.reserve(t_grid.size());
  for (double t : t_grid) c.values.push_back(engine(t));
  return c;
}

struct KCurveCheck {
  bool nondecreasing = true;
  bool concave = true;
  bool ratio_nonincreasing = true;
  double worst_relative_violation = 0.0;
  std::size_t worst_index = 0;

  bool ok() const { return nondecreasing && concave && ratio_nonincreasing; }
};

/// Checks monotonicity, concavity (chord test on consecutive triples) and
/// monotonicity of K(t)/t, each to a tolerance relative to the local value.
inline KCurveCheck check_kcurve(const KCurve& c, double rel_tol = 1e-9) {
  KCurveCheck out;
  const auto& t = c.t_grid;
  const auto& k = c.values;
  auto note = [&](double excess, double scale, std::size_t i, bool& flag) {
    const double rel = excess / std::max(scale, std::numeric_limits<double>::min());
    if (rel > rel_tol) flag = false;
    if (rel > out.worst_relative_violation) {
      out.worst_relative_violation = rel;
      out.worst_index = i;
    }
  };
  for (std::size_t i = 1; i < k.size(); ++i) {
    note(k[i - 1] - k[i], std::fabs(k[i - 1]), i, out.nondecreasing);
    note(k[i] / t[i] - k[i - 1] / t[i - 1], std::fabs(k[i - 1] / t[i - 1]), i, out.ratio_nonincreasing);
  }
  for (std::size_t i = 1; i + 1 < k.size(); ++i) {
    const double w = (t[i] - t[i - 1]) / (t[i + 1] - t[i - 1]);
    const double chord = (1.0 - w) * k[i - 1] + w * k[i + 1];
    note(chord - k[i], std::fabs(chord), i, out.concave);
  }
  return out;
}

}  // namespace radint
