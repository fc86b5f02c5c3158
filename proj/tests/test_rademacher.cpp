#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <stdexcept>

#include "radint/kfunc.hpp"
#include "radint/rademacher.hpp"
#include "support.hpp"

using namespace radint;
using radint::testing::Gen;

namespace {

/// Law of Ta by enumerating all 2^n sign patterns.
std::map<double, double> brute_force_law(const Sequence& a) {
  std::map<double, double> law;
  const std::size_t n = a.size();
  const double w = std::ldexp(1.0, -static_cast<int>(n));
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += ((mask >> k) & 1U) ? a[k] : -a[k];
    law[s] += w;
  }
  return law;
}

}  // namespace

TEST(SynthesizeExact, TwoOnes) {
  const auto ta = synthesize_exact(Sequence{1, 1});
  EXPECT_EQ(ta.law, Distribution({{2.0, 0.25}, {0.0, 0.5}, {-2.0, 0.25}}));
  EXPECT_EQ(ta.as_step, StepFunction::indicator(Domain::unit_interval, 0.5, 2.0));
  EXPECT_EQ(ta.law.max_abs(), 2.0);
}

TEST(SynthesizeExact, SingleCoefficient) {
  EXPECT_EQ(synthesize_exact(Sequence{0.75}).law, Distribution({{0.75, 0.5}, {-0.75, 0.5}}));
}

TEST(SynthesizeExact, EmptyAndZeroSequences) {
  EXPECT_EQ(synthesize_exact(Sequence{}).law, Distribution({{0.0, 1.0}}));
  EXPECT_EQ(synthesize_exact(Sequence{0, 0, 0}).law, Distribution({{0.0, 1.0}}));
}

TEST(SynthesizeExact, CapCountsNonzeroCoefficients) {
  std::vector<double> a(60, 0.0);
  for (std::size_t k = 0; k < 24; ++k) a[2 * k] = 1.0;
  EXPECT_NO_THROW((void)synthesize_exact(Sequence(a)));
  a[1] = 1.0;
  EXPECT_THROW((void)synthesize_exact(Sequence(a)), std::length_error);
}

TEST(SynthesizeExact, MatchesEnumeration) {
  Gen g(5);
  for (int i = 0; i < 200; ++i) {
    const auto a = g.dyadic_sequence(1, 10);
    const auto law = synthesize_exact(a).law;
    const auto ref = brute_force_law(a);
    ASSERT_EQ(law.size(), ref.size());
    auto it = ref.rbegin();
    for (const auto& atom : law.atoms()) {
      EXPECT_EQ(atom.value, it->first);
      EXPECT_EQ(atom.measure, it->second);
      ++it;
    }
  }
}

TEST(SynthesizeExact, SupIdentitySymmetryAndParseval) {
  Gen g(6);
  for (int i = 0; i < 300; ++i) {
    const auto a = g.dyadic_sequence(1, 14);
    const auto d = to_dyadic(a);
    const auto exact = synthesize_exact(d);
    Dyadic l1;
    for (const auto& c : d) l1 += abs_value(c);
    EXPECT_EQ(exact.law.max_abs(), l1);
    const auto& atoms = exact.law.atoms();
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      EXPECT_EQ(atoms[k].value, -atoms[atoms.size() - 1 - k].value);
      EXPECT_EQ(atoms[k].measure, atoms[atoms.size() - 1 - k].measure);
    }
    const auto ta = synthesize_exact(a);
    EXPECT_NEAR(ta.law.total_measure(), 1.0, 1e-12);
    const double l2 = seq_l2(a);
    EXPECT_NEAR(power_integral_to(ta.as_step, 1.0, 2.0), l2 * l2, 1e-12 * l2 * l2);
  }
}

TEST(SynthesizeLattice, AgreesWithExactWithinBound) {
  Gen g(7);
  for (int i = 0; i < 50; ++i) {
    const auto a = g.sequence(1, 12);
    const auto lat = synthesize_lattice(a, 16);
    const auto ex = synthesize_exact(a);
    EXPECT_LE(std::fabs(lat.sum.as_step.value(0) - seq_l1(a)), lat.value_error_bound + 1e-12);
    for (double t : {0.25, 1.0, 2.0}) {
      EXPECT_LE(std::fabs(k_linf_G(lat.sum.as_step, t) - k_linf_G(ex.as_step, t)), lat.value_error_bound + 1e-9);
    }
  }
}

TEST(Synthesize, DegradesPastTheCap) {
  std::vector<double> a(40);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = 1.0 / static_cast<double>(k + 1);
  const auto r = synthesize(Sequence(a));
  EXPECT_FALSE(r.exact);
  EXPECT_GT(r.value_error_bound, 0.0);
  EXPECT_NEAR(r.sum.law.total_measure(), 1.0, 1e-9);
  const auto small = synthesize(Sequence{1, 2});
  EXPECT_TRUE(small.exact);
  EXPECT_EQ(small.value_error_bound, 0.0);
}

TEST(MonteCarlo, SupportAndEmptySum) {
  const auto d = sample_monte_carlo(Sequence{1}, 4, 99);
  for (const auto& atom : d.atoms()) EXPECT_TRUE(atom.value == 1.0 || atom.value == -1.0);
  EXPECT_EQ(sample_monte_carlo(Sequence{}, 10, 1), Distribution({{0.0, 1.0}}));
}

TEST(MonteCarlo, MatchesExactLaw) {
  const auto d = sample_monte_carlo(Sequence{1, 1}, 100000, 2024);
  EXPECT_NEAR(tail_probability(d, 1.0), 0.5, 0.01);
  for (std::uint64_t seed : {1U, 2U, 3U}) {
    const Sequence a{0.5, 1.0, -0.25, 2.0, 0.125};
    const std::size_t n = 20000;
    const auto mc = sample_monte_carlo(a, n, seed);
    EXPECT_LE(kolmogorov_distance(mc, synthesize_exact(a).law), 2.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST(MonteCarlo, Deterministic) {
  const Sequence a{0.3, -1.2, 0.7};
  EXPECT_EQ(sample_monte_carlo(a, 5000, 17), sample_monte_carlo(a, 5000, 17));
}

TEST(TailProbability, Examples) {
  const auto law = synthesize_exact(Sequence{1, 1}).law;
  EXPECT_DOUBLE_EQ(tail_probability(law, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(tail_probability(law, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(tail_probability(law, 5.0), 0.0);
  EXPECT_DOUBLE_EQ(tail_probability(law, -0.1), 1.0);
  EXPECT_DOUBLE_EQ(upper_tail_probability(law, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(upper_tail_probability(law, -3.0), 1.0);
}

TEST(HolmstedtPhi, Examples) {
  EXPECT_NEAR(holmstedt_phi(Sequence{1, 1, 1, 1}, std::sqrt(2.0)), 4.0, 1e-12);
  const Sequence a{3, -1, 0.5};
  EXPECT_DOUBLE_EQ(holmstedt_phi(a, 2.0), seq_l1(a));
  EXPECT_DOUBLE_EQ(holmstedt_phi(a, 0.5), 0.5 * seq_l2(a));
  EXPECT_THROW((void)holmstedt_phi(a, 0.0), std::invalid_argument);
}

TEST(HolmstedtPhi, HeadCountSnapsIntegers) {
  EXPECT_EQ(holmstedt_head_count(std::sqrt(2.0)), 2U);
  EXPECT_EQ(holmstedt_head_count(std::sqrt(3.0)), 3U);
  EXPECT_EQ(holmstedt_head_count(0.99), 0U);
}

TEST(MontgomerySmith, SingleCoefficient) {
  const auto grid = log_grid(0.1, 3.0, 30);
  const auto rep = montgomery_smith_min_A(Sequence{1}, synthesize_exact(Sequence{1}).law, grid);
  EXPECT_TRUE(std::isfinite(rep.minimal_A));
  EXPECT_LE(rep.minimal_A, 2.0);
}

TEST(MontgomerySmith, InequalityHoldsAtResult) {
  Gen g(8);
  const auto grid = log_grid(0.25, 4.0, 25);
  for (int i = 0; i < 40; ++i) {
    const auto a = i == 0 ? Sequence{0.5, 0.5, 0.5, 0.5} : g.dyadic_sequence(1, 10);
    const auto law = synthesize_exact(a).law;
    const auto rep = montgomery_smith_min_A(a, law, grid);
    ASSERT_TRUE(std::isfinite(rep.minimal_A));
    const double A = rep.minimal_A;
    for (double t : grid) {
      EXPECT_GE(upper_tail_probability(law, k_l1_l2_seq(a, t) / A), std::exp(-A * t * t) / A);
    }
  }
}

TEST(MontgomerySmith, CapExceededIsInfinite) {
  const auto grid = log_grid(0.1, 3.0, 10);
  const auto rep = montgomery_smith_min_A(Sequence{1}, synthesize_exact(Sequence{1}).law, grid, 1.0);
  EXPECT_TRUE(std::isinf(rep.minimal_A));
}
