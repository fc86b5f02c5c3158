#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "radint/norms.hpp"
#include "radint/rademacher.hpp"
#include "support.hpp"

using namespace radint;
using radint::testing::Gen;

namespace {

const ConcaveFn kIdentity{[](double t) { return t; }, Domain::unit_interval, true, true, "t"};
const ConcaveFn kLogLog{[](double t) { return t * std::log2(std::log2(16.0 / t)); }, Domain::unit_interval, true, true,
                        "t log2 log2(16/t)"};

StepFunction scaled(const StepFunction& x, double c) {
  std::vector<double> v = x.values();
  for (auto& e : v) e *= c;
  return StepFunction(x.domain(), x.breaks(), v);
}

/// x + y on the unit interval, on the union of breakpoints.
StepFunction sum(const StepFunction& x, const StepFunction& y) {
  std::vector<double> b = x.breaks();
  b.insert(b.end(), y.breaks().begin(), y.breaks().end());
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  std::vector<std::pair<double, double>> p;
  for (std::size_t i = 1; i < b.size(); ++i) p.emplace_back(b[i] - b[i - 1], x.value_at(b[i]) + y.value_at(b[i]));
  return StepFunction::from_pieces(Domain::unit_interval, p);
}

}  // namespace

TEST(MarcinkiewiczNorm, Examples) {
  const auto x = StepFunction::indicator(Domain::unit_interval, 0.5, 2.0);
  EXPECT_NEAR(marcinkiewicz_norm(x, kIdentity), 2.0, 1e-12);
  EXPECT_NEAR(marcinkiewicz_norm(StepFunction::constant(1.0), kLogLog), 0.5, 1e-9);
  EXPECT_EQ(marcinkiewicz_norm(StepFunction::constant(0.0), kLogLog), 0.0);
}

TEST(OrliczNorm, Examples) {
  EXPECT_NEAR(exp_square_norm(StepFunction::constant(1.0)), 1.0 / std::sqrt(std::log(2.0)), 1e-10);
  Gen g(41);
  for (int i = 0; i < 50; ++i) {
    const auto x = g.unit_function();
    for (double p : {1.0, 2.0, 3.5}) {
      const double lp = lp_norm(x, p);
      EXPECT_NEAR(orlicz_luxemburg_norm(x, [p](double t) { return std::pow(t, p); }), lp, 1e-10 * lp);
    }
    const double c = g.uniform(-5.0, 5.0);
    EXPECT_NEAR(exp_square_norm(scaled(x, c)), std::fabs(c) * exp_square_norm(x), 1e-10 * std::fabs(c) * exp_square_norm(x));
  }
}

TEST(OrliczNorm, ZeroAndBracketFailure) {
  EXPECT_EQ(exp_square_norm(StepFunction::constant(0.0)), 0.0);
  EXPECT_THROW((void)orlicz_luxemburg_norm(StepFunction::constant(1.0), [](double) { return 0.0; }), std::runtime_error);
}

TEST(LorentzNorm, Examples) {
  const ConcaveFn unit_phi{[](double s) { return s; }, Domain::unit_interval, true, true, "s"};
  EXPECT_NEAR(lorentz_norm(StepFunction::constant(3.0), unit_phi, 2.0), 3.0, 1e-14);
  Gen g(42);
  for (int i = 0; i < 50; ++i) {
    const auto x = g.unit_function();
    EXPECT_NEAR(lorentz_norm(x, unit_phi, 1.0), lp_norm(x, 1.0), 1e-12);
  }
  const ConcaveFn inv_log{[](double s) { return 1.0 / std::log2(2.0 / s); }, Domain::unit_interval, false, true,
                          "1/log2(2/s)"};
  EXPECT_NEAR(lorentz_norm(StepFunction::indicator(Domain::unit_interval, 0.5), inv_log, 2.0), 1.0 / std::sqrt(2.0),
              1e-14);
  EXPECT_THROW((void)lorentz_norm(StepFunction::constant(1.0), unit_phi, 0.5), std::invalid_argument);
}

TEST(LpNorm, RademacherExamples) {
  const auto ta = synthesize_exact(Sequence{1, 1}).as_step;
  EXPECT_DOUBLE_EQ(lp_norm(ta, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(lp_norm(ta, 2.0), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(lp_norm(ta, kInfinity), 2.0);
}

TEST(FunctionNorms, HomogeneityTriangleAndRearrangementInvariance) {
  Gen g(43);
  const ConcaveFn p2{[](double s) { return std::sqrt(s); }, Domain::unit_interval, true, true, "sqrt"};
  auto norms = [&](const StepFunction& x) {
    return std::array<double, 5>{marcinkiewicz_norm(x, kLogLog), exp_square_norm(x), lorentz_norm(x, p2, 2.0),
                                 lp_norm(x, 3.0), lp_norm(x, kInfinity)};
  };
  for (int i = 0; i < 60; ++i) {
    const auto x = g.unit_function();
    const auto y = g.unit_function();
    const double c = g.uniform(-4.0, 4.0);
    const auto nx = norms(x);
    const auto ny = norms(y);
    const auto ns = norms(sum(x, y));
    const auto nc = norms(scaled(x, c));
    const auto nr = norms(rearrange_step(x));
    for (std::size_t k = 0; k < nx.size(); ++k) {
      EXPECT_NEAR(nc[k], std::fabs(c) * nx[k], 1e-9 * std::fabs(c) * nx[k]) << k;
      EXPECT_NEAR(nr[k], nx[k], 1e-12 * nx[k]) << k;
      if (k != 2) {
        EXPECT_LE(ns[k], (nx[k] + ny[k]) * (1 + 1e-9)) << k;
      }
    }
  }
}

TEST(FunctionNorms, LatticeProperty) {
  Gen g(44);
  for (int i = 0; i < 100; ++i) {
    const auto y = rearrange_step(g.unit_function());
    std::vector<double> v = y.values();
    for (auto& e : v) e *= g.uniform(0.0, 1.0);
    const auto x = StepFunction(Domain::unit_interval, y.breaks(), v);
    EXPECT_LE(marcinkiewicz_norm(x, kLogLog), marcinkiewicz_norm(y, kLogLog) * (1 + 1e-12));
    EXPECT_LE(exp_square_norm(x), exp_square_norm(y) * (1 + 1e-10));
    EXPECT_LE(lp_norm(x, 2.0), lp_norm(y, 2.0) * (1 + 1e-12));
  }
}

TEST(FunctionNorms, ExpSquareBelowSup) {
  Gen g(45);
  for (int i = 0; i < 100; ++i) {
    const auto x = g.unit_function();
    EXPECT_LE(exp_square_norm(x), lp_norm(x, kInfinity) / std::sqrt(std::log(2.0)) * (1 + 1e-10));
    EXPECT_LE(marcinkiewicz_norm(x, phi_exp_square()), lp_norm(x, kInfinity) * (1 + 1e-12));
  }
}

TEST(SeqL1Log, Examples) {
  EXPECT_DOUBLE_EQ(seq_l1log_norm(Sequence{1}), 1.0);
  EXPECT_NEAR(seq_l1log_norm(Sequence{1, 1, 1, 1}), 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(seq_l1log_norm(seq_dilation(Sequence{1}, 4)) / seq_l1log_norm(Sequence{1}), 4.0 / 3.0, 1e-15);
}

TEST(SeqL1Log, MonotoneUnderDomination) {
  Gen g(46);
  for (int i = 0; i < 200; ++i) {
    const auto b = g.sequence(1, 40);
    std::vector<double> a(b.coeffs());
    for (auto& c : a) c *= g.uniform(0.0, 1.0);
    EXPECT_LE(seq_l1log_norm(Sequence(a)), seq_l1log_norm(b) * (1 + 1e-12));
  }
}

TEST(SeqL1Log, DilationOperatorNormAtMostN) {
  Gen g(47);
  for (int n : {2, 4, 8}) {
    for (int i = 0; i < 1000; ++i) {
      const auto a = g.sequence(1, 32);
      EXPECT_LE(seq_l1log_norm(seq_dilation(a, n)), n * seq_l1log_norm(a) * (1 + 1e-12));
    }
  }
}

TEST(SeqL1Log, DilationNormApproachesN) {
  // Constant blocks of growing length push the ratio towards n.
  for (int n : {2, 4, 8}) {
    double prev = 0.0;
    for (std::size_t m : {16U, 256U, 4096U, 65536U}) {
      const Sequence a(std::vector<double>(m, 1.0));
      const double r = seq_l1log_norm(seq_dilation(a, n)) / seq_l1log_norm(a);
      EXPECT_GT(r, prev);
      EXPECT_LE(r, n);
      prev = r;
    }
    EXPECT_GE(prev, 0.8 * n);
  }
}

TEST(SeqLpNorms, Examples) {
  const Sequence a{3, -4};
  EXPECT_DOUBLE_EQ(seq_lp_norm(a, 2.0), 5.0);
  EXPECT_DOUBLE_EQ(seq_lp_norm(a, kInfinity), 4.0);
  EXPECT_NEAR(seq_lorentz_rp_norm(a, 3.0, 3.0), seq_lp_norm(a, 3.0), 1e-14);
  EXPECT_DOUBLE_EQ(seq_lorentz_rp_norm(Sequence{1}, 4.0, 1.5), 1.0);
  EXPECT_NEAR(seq_lorentz_rp_norm(Sequence{1, 1}, 2.0, 1.0), 1.0 + 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_THROW((void)seq_lp_norm(a, 0.5), std::invalid_argument);
}

TEST(SequenceNorms, L2BelowL1) {
  Gen g(48);
  for (int i = 0; i < 500; ++i) {
    const auto a = g.sequence(1, 50);
    EXPECT_LE(seq_l2(a), seq_l1(a) * (1 + 1e-15));
  }
}

TEST(LatticeNorm, ExampleOneWeights) {
  const auto E = LatticeParam::log_weighted_sup();
  TwoSidedWindow w{E.k_min, {}};
  for (int k = E.k_min; k <= E.k_max; ++k) w.values.push_back(std::min(1.0, std::exp2(k)));
  const auto n = lattice_norm(w, E);
  EXPECT_DOUBLE_EQ(n.value, 1.0);
  EXPECT_LE(n.tail_bound, E.tail_tol);
}

TEST(LatticeNorm, ThetaLatticeFiniteOnCorner) {
  for (double theta : {0.25, 0.5, 0.75}) {
    const auto E = LatticeParam::theta_p(theta, 2.0);
    EXPECT_TRUE(check_admissible(E).ok);
    TwoSidedWindow w{E.k_min, {}};
    for (int k = E.k_min; k <= E.k_max; ++k) w.values.push_back(std::min(1.0, std::exp2(k)));
    const auto n = lattice_norm(w, E);
    EXPECT_TRUE(std::isfinite(n.value));
    EXPECT_LE(n.tail_bound, 1e-6);
  }
}

TEST(LatticeNorm, ZeroSequence) {
  const auto E = LatticeParam::theta_p(0.5, 1.0);
  const TwoSidedWindow w{E.k_min, std::vector<double>(static_cast<std::size_t>(E.k_max - E.k_min + 1), 0.0)};
  EXPECT_EQ(lattice_norm(w, E).value, 0.0);
}

TEST(LatticeNorm, InadmissibleAndShortWindowsThrow) {
  auto bad = LatticeParam::theta_p(0.5, 2.0);
  bad.weight = [](int k) { return std::exp2(k); };
  EXPECT_FALSE(check_admissible(bad).ok);
  auto theta0 = LatticeParam::theta_p(0.0, 2.0);
  EXPECT_FALSE(check_admissible(theta0).ok);
  const auto E = LatticeParam::theta_p(0.5, 2.0);
  const TwoSidedWindow shorter{E.k_min + 1, std::vector<double>(10, 1.0)};
  EXPECT_THROW((void)lattice_norm(shorter, E), std::invalid_argument);
  TwoSidedWindow ok{bad.k_min, std::vector<double>(81, 1.0)};
  EXPECT_THROW((void)lattice_norm(ok, bad), std::invalid_argument);
}
