#pragma once

// Real K-method norms, generalized Marcinkiewicz spaces, dilation functions
// and indices, and construction of l1+l2 elements with a prescribed
// K-functional.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "radint/core.hpp"
#include "radint/kfunc.hpp"
#include "radint/norms.hpp"

namespace radint {

enum class CoupleTag { l1_l2, linf_G, l1_linf, l1_l2_fun, linf_lq };

struct Couple {
  CoupleTag tag = CoupleTag::l1_l2;
  double q = 2.0;  ///< exponent for linf_lq

  static Couple l1_l2() { return {CoupleTag::l1_l2}; }
  static Couple linf_G() { return {CoupleTag::linf_G}; }
  static Couple l1_linf() { return {CoupleTag::l1_linf}; }
  static Couple l1_l2_fun() { return {CoupleTag::l1_l2_fun}; }
  static Couple linf_lq(double q) { return {CoupleTag::linf_lq, q}; }
};

inline std::string to_string(const Couple& c) {
  switch (c.tag) {
    case CoupleTag::l1_l2: return "(l1,l2)";
    case CoupleTag::linf_G: return "(Linf,G)";
    case CoupleTag::l1_linf: return "(L1,Linf)";
    case CoupleTag::l1_l2_fun: return "(L1,L2)~";
    case CoupleTag::linf_lq: return "(Linf,L" + std::to_string(c.q) + ")";
  }
  return "?";
}

using Subject = std::variant<Sequence, StepFunction>;

namespace detail {

inline const Sequence& as_sequence(const Subject& s, const Couple& c) {
  if (const auto* a = std::get_if<Sequence>(&s)) return *a;
  throw std::invalid_argument("couple " + to_string(c) + " takes a sequence");
}
inline const StepFunction& as_function(const Subject& s, const Couple& c) {
  if (const auto* x = std::get_if<StepFunction>(&s)) return *x;
  throw std::invalid_argument("couple " + to_string(c) + " takes a step function");
}

}  // namespace detail

/// K(t, subject) for the given couple.
inline double k_value(const Subject& s, const Couple& c, double t) {
  switch (c.tag) {
    case CoupleTag::l1_l2: return k_l1_l2_seq(detail::as_sequence(s, c), t);
    case CoupleTag::linf_G: return k_linf_G(detail::as_function(s, c), t);
    case CoupleTag::l1_linf: return k_l1_linf_fun(detail::as_function(s, c), t);
    case CoupleTag::l1_l2_fun: return k_l1_l2_fun(detail::as_function(s, c), t);
    case CoupleTag::linf_lq: return k_linf_lq(detail::as_function(s, c), t, c.q);
  }
  throw std::invalid_argument("k_value: unknown couple");
}

/// Bounds |K(t)| <= high for all t and |K(t)| <= low * t for all t, from the
/// norms of the subject in X0 and X1.
inline TailEnvelope k_envelope(const Subject& s, const Couple& c) {
  switch (c.tag) {
    case CoupleTag::l1_l2: {
      const auto& a = detail::as_sequence(s, c);
      return {seq_l1(a), seq_l2(a)};
    }
    case CoupleTag::linf_G: {
      const auto& x = detail::as_function(s, c);
      return {lp_norm(x, kInfinity), marcinkiewicz_norm(x, phi_exp_square())};
    }
    case CoupleTag::l1_linf: {
      const auto& x = detail::as_function(s, c);
      return {lp_norm(x, 1.0), lp_norm(x, kInfinity)};
    }
    case CoupleTag::l1_l2_fun: {
      const auto& x = detail::as_function(s, c);
      return {std::max(lp_norm(x, 1.0), std::sqrt(x.extent()) * lp_norm(x, 2.0)),
              std::max(lp_norm(x, kInfinity), lp_norm(x, 2.0))};
    }
    case CoupleTag::linf_lq: {
      const auto& x = detail::as_function(s, c);
      return {lp_norm(x, kInfinity), lp_norm(x, c.q)};
    }
  }
  throw std::invalid_argument("k_envelope: unknown couple");
}

struct KMethodNorm {
  double value = 0.0;
  double tail_bound = 0.0;
  TwoSidedWindow k_sequence;
};

/// ||(K(2^k, x))_k||_E over E's truncation window.
inline KMethodNorm kmethod_norm(const Subject& s, const Couple& c, const LatticeParam& E) {
  if (const auto adm = check_admissible(E); !adm.ok)
    throw std::invalid_argument("kmethod_norm: inadmissible lattice: " + adm.reason);
  TwoSidedWindow w{E.k_min, {}};
  w.values.reserve(static_cast<std::size_t>(E.k_max - E.k_min + 1));
  for (int k = E.k_min; k <= E.k_max; ++k) w.values.push_back(k_value(s, c, std::exp2(k)));
  const auto ln = lattice_norm(w, E, k_envelope(s, c));
  return {ln.value, ln.tail_bound, std::move(w)};
}

/// sup_t K(t, x)/phi(t) over a log grid, refined around the best grid point
/// by golden-section search in log t.
struct GridSpec {
  double lo = std::ldexp(1.0, -40);
  double hi = std::ldexp(1.0, 40);
  std::size_t points = 161;
};

inline double gen_marcinkiewicz_norm(const Subject& s, const Couple& c, const ConcaveFn& phi,
                                     const GridSpec& grid = {}) {
  const auto ts = log_grid(grid.lo, grid.hi, grid.points);
  auto ratio = [&](double t) { return k_value(s, c, t) / phi(t); };
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double r = ratio(ts[i]);
    if (r > best) {
      best = r;
      arg = i;
    }
  }
  double lo = std::log(ts[arg == 0 ? 0 : arg - 1]);
  double hi = std::log(ts[std::min(ts.size() - 1, arg + 1)]);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 64 && hi - lo > 1e-12; ++it) {
    const double a = hi - g * (hi - lo);
    const double b = lo + g * (hi - lo);
    const double fa = ratio(std::exp(a));
    const double fb = ratio(std::exp(b));
    best = std::max({best, fa, fb});
    if (fa > fb)
      hi = b;
    else
      lo = a;
  }
  return std::max(best, 0.0);
}

/// phi_rho(t) = phi0(t) rho(phi1(t)/phi0(t)).
inline ConcaveFn phi_rho(const ConcaveFn& phi0, const ConcaveFn& phi1, const ConcaveFn& rho) {
  ConcaveFn out;
  out.eval = [phi0, phi1, rho](double t) {
    const double base = phi0(t);
    if (!(base > 0.0)) throw std::domain_error("phi_rho: phi0 must be positive");
    return base * rho(phi1(t) / base);
  };
  out.domain = phi0.domain;
  out.claims_concave = phi0.claims_concave && phi1.claims_concave && rho.claims_concave;
  out.claims_zero_at_origin = phi0.claims_zero_at_origin;
  out.name = phi0.name + "*rho(" + phi1.name + "/" + phi0.name + ")";
  return out;
}

// ---------------------------------------------------------------------------
// Dilation function and indices

struct DilationOptions {
  std::size_t s_grid_size = 64;
  double rel_change = 1e-4;
  std::size_t max_grid = std::size_t{1} << 16;
  /// Extend a unit-interval f by f(1) t past 1 when estimating delta.
  bool extend_linearly = false;
};

namespace detail {

inline double dilation_sup_on_grid(const ConcaveFn& f, double t, std::size_t n, bool extend) {
  const bool unit = f.domain == Domain::unit_interval && !extend;
  auto eval = [&](double u) {
    if (f.domain == Domain::unit_interval && u > 1.0) return f(1.0) * u;
    return f(u);
  };
  const double floor = std::ldexp(1.0, -80);
  const double s_lo = floor / std::min(1.0, t);
  const double s_hi = unit ? std::min(1.0, 1.0 / t) : std::ldexp(1.0, 80) / std::max(1.0, t);
  if (!(s_hi > s_lo)) throw std::invalid_argument("dilation_function: empty s range");
  double best = 0.0;
  for (double s : log_grid(s_lo, s_hi, n)) best = std::max(best, eval(s * t) / eval(s));
  return best;
}

}  // namespace detail

/// M_f(t) = sup{f(st)/f(s) : s, st in the domain}, refined by doubling the
/// s grid until the relative change drops below opt.rel_change.
inline double dilation_function(const ConcaveFn& f, double t, const DilationOptions& opt = {}) {
  if (!(t > 0.0)) throw std::invalid_argument("dilation_function: t must be positive");
  std::size_t n = std::max<std::size_t>(opt.s_grid_size, 2);
  double prev = detail::dilation_sup_on_grid(f, t, n, opt.extend_linearly);
  while (n < opt.max_grid) {
    n *= 2;
    const double cur = detail::dilation_sup_on_grid(f, t, n, opt.extend_linearly);
    const bool settled = std::fabs(cur - prev) <= opt.rel_change * std::fabs(cur);
    prev = cur;
    if (settled) break;
  }
  return prev;
}

struct DilationIndices {
  double gamma = 0.0;
  double delta = 0.0;
  double gamma_spread = 0.0;
  double delta_spread = 0.0;
  bool converged = true;
  std::string grid_meta;
};

namespace detail {

/// Fits g(j) = c0 + (c1 + c2 ln j)/j by least squares and returns c0.
inline double extrapolate_index(const std::vector<double>& js, const std::vector<double>& gs) {
  std::array<std::array<double, 3>, 3> ata{};
  std::array<double, 3> atb{};
  for (std::size_t i = 0; i < js.size(); ++i) {
    const std::array<double, 3> row{1.0, 1.0 / js[i], std::log(js[i]) / js[i]};
    for (int r = 0; r < 3; ++r) {
      atb[r] += row[r] * gs[i];
      for (int c = 0; c < 3; ++c) ata[r][c] += row[r] * row[c];
    }
  }
  // Gaussian elimination with partial pivoting on the 3x3 normal equations.
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::fabs(ata[r][col]) > std::fabs(ata[piv][col])) piv = r;
    std::swap(ata[col], ata[piv]);
    std::swap(atb[col], atb[piv]);
    for (int r = col + 1; r < 3; ++r) {
      const double m = ata[r][col] / ata[col][col];
      for (int c = col; c < 3; ++c) ata[r][c] -= m * ata[col][c];
      atb[r] -= m * atb[col];
    }
  }
  std::array<double, 3> x{};
  for (int r = 2; r >= 0; --r) {
    double s = atb[r];
    for (int c = r + 1; c < 3; ++c) s -= ata[r][c] * x[c];
    x[r] = s / ata[r][r];
  }
  return x[0];
}

struct IndexEstimate {
  double value;
  double spread;
};

/// ln M_f(t)/ln t at t = 2^{sign*j}, j = 10..30, extrapolated from the last
/// five points; the spread compares three neighbouring five-point windows.
inline IndexEstimate estimate_index(const ConcaveFn& f, int sign, const DilationOptions& opt) {
  std::vector<double> js;
  std::vector<double> gs;
  for (int j = 10; j <= 30; ++j) {
    const double t = std::exp2(sign * j);
    js.push_back(j);
    gs.push_back(std::log(dilation_function(f, t, opt)) / std::log(t));
  }
  std::vector<double> est;
  for (std::size_t end = js.size() - 2; end <= js.size(); ++end) {
    const std::vector<double> jw(js.begin() + static_cast<std::ptrdiff_t>(end - 5), js.begin() + static_cast<std::ptrdiff_t>(end));
    const std::vector<double> gw(gs.begin() + static_cast<std::ptrdiff_t>(end - 5), gs.begin() + static_cast<std::ptrdiff_t>(end));
    est.push_back(extrapolate_index(jw, gw));
  }
  const auto [mn, mx] = std::minmax_element(est.begin(), est.end());
  return {est.back(), *mx - *mn};
}

}  // namespace detail

/// Lower and upper dilation indices of f.
///
/// For a unit-interval f the upper index uses t > 1 with st <= 1 unless
/// extend_linearly is set.
inline DilationIndices dilation_indices(const ConcaveFn& f, const DilationOptions& opt = {}) {
  DilationIndices out;
  const auto g = detail::estimate_index(f, -1, opt);
  const auto d = detail::estimate_index(f, +1, opt);
  out.gamma = g.value;
  out.gamma_spread = g.spread;
  out.delta = d.value;
  out.delta_spread = d.spread;
  out.converged = g.spread <= 0.1 && d.spread <= 0.1;
  out.grid_meta = "t = 2^-j (gamma), 2^j (delta), j = 10..30; s grid from " +
                  std::to_string(opt.s_grid_size) + " points, doubled to rel change " +
                  std::to_string(opt.rel_change) + (f.domain == Domain::unit_interval && !opt.extend_linearly
                                                        ? "; delta restricted to st <= 1"
                                                        : "") +
                  (out.converged ? "" : "; NOT CONVERGED (spread > 0.1)");
  return out;
}

// ---------------------------------------------------------------------------
// Realizing a prescribed K-functional

struct ClassFCheck {
  bool ok = true;
  std::string reason;
  /// f(T)/(f(1) T) at the grid edge T; should be small for sublinear growth.
  double edge_decay = 0.0;
};

/// Checks that f is linear on (0,1], nonnegative, nondecreasing and concave
/// on a grid up to t_max. f(t)/t -> 0 can only be observed up to the grid
/// edge T; f is rejected when f(T)/(f(1) T) still exceeds 1/2.
inline ClassFCheck validate_class_F(const ConcaveFn& f, double t_max) {
  ClassFCheck out;
  const double f1 = f(1.0);
  if (!(f1 > 0.0)) return {false, "f(1) must be positive", 0.0};
  for (double t : log_grid(std::ldexp(1.0, -30), 1.0, 64)) {
    if (std::fabs(f(t) - f1 * t) > 1e-12 * std::max(1.0, std::fabs(f1 * t)))
      return {false, "f is not linear on (0,1] at t=" + std::to_string(t), 0.0};
  }
  const auto grid = log_grid(std::ldexp(1.0, -10), std::max(t_max, 2.0), 128);
  const auto shape = check_shape(f, grid, 1e-10);
  if (!shape.nonnegative) return {false, "f takes negative values", 0.0};
  if (!shape.nondecreasing) return {false, "f is not nondecreasing", 0.0};
  if (!shape.midpoint_concave) return {false, "f fails midpoint concavity", 0.0};
  out.edge_decay = f(grid.back()) / (f1 * grid.back());
  if (out.edge_decay > 0.5) {
    out.ok = false;
    out.reason = "f(t)/t shows no decay up to t=" + std::to_string(grid.back());
  }
  return out;
}

/// a_k = g(k) - g(k-1) with g(t) = f(sqrt t), k = 1..n: the unit averages of
/// x = g'. Rounding is cleaned up so that a is nonnegative and nonincreasing.
inline Sequence realize_kfunctional(const ConcaveFn& f, std::size_t n) {
  if (n < 8) throw std::invalid_argument("realize_kfunctional: n must be >= 8");
  if (const auto chk = validate_class_F(f, std::sqrt(static_cast<double>(n)) * 4.0); !chk.ok)
    throw std::invalid_argument("realize_kfunctional: f is not in class F: " + chk.reason);
  std::vector<double> a(n);
  double prev = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double cur = f(std::sqrt(static_cast<double>(k)));
    double step = std::max(0.0, cur - prev);
    if (k > 1) step = std::min(step, a[k - 2]);
    a[k - 1] = step;
    prev = cur;
  }
  return Sequence(std::move(a));
}

}  // namespace radint
