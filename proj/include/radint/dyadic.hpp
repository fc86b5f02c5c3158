#pragma once

// Exact dyadic rationals m * 2^e with a 128-bit mantissa.
//
// Every finite double is a dyadic rational, so sums of Rademacher
// coefficients given as doubles can be carried without rounding as long as
// the exponent spread of the inputs leaves room in the mantissa.

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace radint {

class Dyadic {
 public:
  __extension__ typedef __int128 Mantissa;
  __extension__ typedef unsigned __int128 UMantissa;

  constexpr Dyadic() = default;
  Dyadic(std::int64_t integer) : mant_(integer), exp_(0) { normalize(); }  // NOLINT

  /// m * 2^(-shift)
  static Dyadic ratio(std::int64_t m, int shift) {
    Dyadic d;
    d.mant_ = m;
    d.exp_ = -shift;
    d.normalize();
    return d;
  }

  static Dyadic from_mantissa(Mantissa m, int exponent) {
    Dyadic d;
    d.mant_ = m;
    d.exp_ = exponent;
    d.normalize();
    return d;
  }

  /// Exact conversion; throws on NaN or infinity.
  static Dyadic from_double(double x) {
    if (!std::isfinite(x)) throw std::domain_error("Dyadic: non-finite double");
    if (x == 0.0) return Dyadic{};
    int e = 0;
    const double frac = std::frexp(x, &e);  // x = frac * 2^e, |frac| in [0.5, 1)
    const auto m = static_cast<std::int64_t>(std::ldexp(frac, 53));
    return from_mantissa(m, e - 53);
  }

  Mantissa mantissa() const { return mant_; }
  int exponent() const { return exp_; }
  bool is_zero() const { return mant_ == 0; }
  int sign() const { return (mant_ > 0) - (mant_ < 0); }

  /// Correctly rounded (round-to-nearest) conversion.
  double to_double() const { return std::ldexp(static_cast<double>(mant_), exp_); }

  Dyadic operator-() const {
    Dyadic d = *this;
    d.mant_ = -d.mant_;
    return d;
  }

  friend Dyadic operator+(const Dyadic& a, const Dyadic& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const int e = a.exp_ < b.exp_ ? a.exp_ : b.exp_;
    return from_mantissa(shifted(a.mant_, a.exp_ - e) + shifted(b.mant_, b.exp_ - e), e);
  }
  friend Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }

  friend Dyadic operator*(const Dyadic& a, const Dyadic& b) {
    if (a.is_zero() || b.is_zero()) return Dyadic{};
    if (bit_length(a.mant_) + bit_length(b.mant_) > kMantissaBits)
      throw std::overflow_error("Dyadic: product exceeds 126-bit mantissa");
    return from_mantissa(a.mant_ * b.mant_, a.exp_ + b.exp_);
  }

  Dyadic& operator+=(const Dyadic& o) { return *this = *this + o; }
  Dyadic& operator-=(const Dyadic& o) { return *this = *this - o; }

  friend bool operator==(const Dyadic& a, const Dyadic& b) {
    return a.mant_ == b.mant_ && a.exp_ == b.exp_;
  }
  friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
    const int s = (a - b).sign();
    return s < 0 ? std::strong_ordering::less
                 : (s > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  /// Bits needed for |m| (0 for m = 0).
  static int bit_length(Mantissa m) {
    auto u = static_cast<UMantissa>(m < 0 ? -m : m);
    int bits = 0;
    while (u != 0) {
      u >>= 1;
      ++bits;
    }
    return bits;
  }

  static constexpr int kMantissaBits = 126;

  std::string to_string() const {
    std::string digits;
    auto u = static_cast<UMantissa>(mant_ < 0 ? -mant_ : mant_);
    do {
      digits.insert(digits.begin(), static_cast<char>('0' + static_cast<int>(u % 10)));
      u /= 10;
    } while (u != 0);
    if (mant_ < 0) digits.insert(digits.begin(), '-');
    return digits + "*2^" + std::to_string(exp_);
  }

 private:
  static Mantissa shifted(Mantissa m, int by) {
    if (by == 0) return m;
    if (by > kMantissaBits || bit_length(m) + by > kMantissaBits)
      throw std::overflow_error("Dyadic: exponent spread exceeds 126-bit mantissa");
    return m * (static_cast<Mantissa>(1) << by);
  }

  void normalize() {
    if (mant_ == 0) {
      exp_ = 0;
      return;
    }
    while ((mant_ & 1) == 0) {
      mant_ /= 2;
      ++exp_;
    }
  }

  Mantissa mant_ = 0;
  int exp_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const Dyadic& d) {
  return os << d.to_double() << " (" << d.to_string() << ")";
}

inline double to_double(double x) { return x; }
inline double to_double(const Dyadic& x) { return x.to_double(); }

inline double abs_value(double x) { return std::fabs(x); }
inline Dyadic abs_value(const Dyadic& x) { return x.sign() < 0 ? -x : x; }

inline bool is_finite_value(double x) { return std::isfinite(x); }
inline bool is_finite_value(const Dyadic&) { return true; }

}  // namespace radint
