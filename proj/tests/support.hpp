#pragma once

// Seeded generators for property tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "radint/core.hpp"

namespace radint::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::size_t size(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

  Sequence sequence(std::size_t n_lo, std::size_t n_hi) {
    std::vector<double> a(size(n_lo, n_hi));
    for (auto& c : a) c = normal();
    return Sequence(std::move(a));
  }

  /// m/2^j with |m| <= 64, j <= 6; at least one entry nonzero.
  Sequence dyadic_sequence(std::size_t n_lo, std::size_t n_hi) {
    std::vector<double> a(size(n_lo, n_hi));
    for (auto& c : a) c = std::ldexp(static_cast<double>(static_cast<int>(size(0, 128)) - 64), -static_cast<int>(size(0, 6)));
    if (!a.empty()) a[0] = a[0] == 0.0 ? 1.0 : a[0];
    return Sequence(std::move(a));
  }

  StepFunction unit_function(std::size_t max_pieces = 8) {
    std::vector<std::pair<double, double>> p(size(1, max_pieces));
    double total = 0.0;
    for (auto& [len, v] : p) {
      len = uniform(0.01, 1.0);
      v = normal();
      total += len;
    }
    for (auto& [len, v] : p) len /= total;
    return StepFunction::from_pieces(Domain::unit_interval, p);
  }

  StepFunction half_line_function(std::size_t max_pieces = 8, double max_len = 3.0) {
    std::vector<std::pair<double, double>> p(size(1, max_pieces));
    for (auto& [len, v] : p) {
      len = uniform(0.05, max_len);
      v = normal();
    }
    return StepFunction::from_pieces(Domain::half_line, p);
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace radint::testing
