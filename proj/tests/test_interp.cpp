#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "radint/interp.hpp"
#include "radint/rademacher.hpp"
#include "support.hpp"

using namespace radint;
using radint::testing::Gen;

namespace {

ConcaveFn power(double alpha) {
  return {[alpha](double t) { return std::pow(t, alpha); }, Domain::unit_interval, true, true, "t^alpha"};
}

}  // namespace

TEST(KMethodNorm, UnitVector) {
  const auto r = kmethod_norm(Sequence{1}, Couple::l1_l2(), LatticeParam::log_weighted_sup());
  EXPECT_DOUBLE_EQ(r.value, 1.0);
  EXPECT_LE(r.tail_bound, 1e-6);
  EXPECT_EQ(r.k_sequence.k_min, -40);
  EXPECT_EQ(r.k_sequence.values.size(), 81U);
}

TEST(KMethodNorm, ZeroSubject) {
  EXPECT_EQ(kmethod_norm(Sequence{0, 0}, Couple::l1_l2(), LatticeParam::theta_p(0.5, 2.0)).value, 0.0);
  EXPECT_EQ(kmethod_norm(StepFunction::constant(0.0), Couple::linf_G(), LatticeParam::theta_p(0.5, 2.0)).value, 0.0);
}

TEST(KMethodNorm, ExampleOneConstant) {
  Gen g(51);
  const auto E = LatticeParam::log_weighted_sup();
  for (int i = 0; i < 300; ++i) {
    const auto a = g.sequence(1, 200);
    const auto r = kmethod_norm(a, Couple::l1_l2(), E);
    EXPECT_LE(r.value, 14.0 * seq_l1log_norm(a));
    EXPECT_LE(r.tail_bound, E.tail_tol * std::max(1.0, r.value));
  }
}

TEST(KMethodNorm, SumSpaceGivesKAtOne) {
  Gen g(52);
  for (int i = 0; i < 100; ++i) {
    const auto a = g.sequence(1, 20);
    EXPECT_NEAR(kmethod_norm(a, Couple::l1_l2(), LatticeParam::sum_space_sup()).value, k_l1_l2_seq(a, 1.0),
                1e-12 * seq_l1(a));
  }
}

TEST(KMethodNorm, WrongSubjectKindThrows) {
  EXPECT_THROW((void)kmethod_norm(StepFunction::constant(1.0), Couple::l1_l2(), LatticeParam::log_weighted_sup()),
               std::invalid_argument);
  EXPECT_THROW((void)kmethod_norm(Sequence{1}, Couple::linf_G(), LatticeParam::log_weighted_sup()),
               std::invalid_argument);
}

TEST(GenMarcinkiewicz, Examples) {
  const ConcaveFn min1{[](double t) { return std::min(1.0, t); }, Domain::half_line, true, true, "min(1,t)"};
  const ConcaveFn id{[](double t) { return t; }, Domain::half_line, true, true, "t"};
  Gen g(53);
  for (int i = 0; i < 30; ++i) {
    const auto x = g.unit_function();
    const double sup = lp_norm(x, kInfinity);
    EXPECT_NEAR(gen_marcinkiewicz_norm(x, Couple::l1_linf(), min1), sup, 1e-6 * sup);
    EXPECT_NEAR(gen_marcinkiewicz_norm(x, Couple::l1_linf(), id), sup, 1e-6 * sup);
  }
  EXPECT_EQ(gen_marcinkiewicz_norm(StepFunction::constant(0.0), Couple::l1_linf(), id), 0.0);
}

TEST(PhiRho, Examples) {
  const ConcaveFn phi0{[](double t) { return std::min(1.0, t); }, Domain::half_line, true, true, "phi0"};
  const ConcaveFn phi1{[](double t) { return std::min(1.0, t * std::sqrt(std::log2(std::max(2.0, 2.0 / t)))); },
                       Domain::half_line, true, true, "phi1"};
  const ConcaveFn one{[](double) { return 1.0; }, Domain::half_line, true, false, "1"};
  const ConcaveFn rho{[](double t) { return std::log2(4.0 + t); }, Domain::half_line, true, false, "log2(4+t)"};
  for (double t : log_grid(1e-6, 100.0, 50)) {
    EXPECT_NEAR(phi_rho(phi0, phi1, one)(t), phi0(t), 1e-15);
    EXPECT_NEAR(phi_rho(phi0, phi0, rho)(t), rho(1.0) * phi0(t), 1e-14);
  }
  double lo = INFINITY, hi = 0.0;
  const auto pr = phi_rho(phi0, phi1, rho);
  for (double t : log_grid(std::ldexp(1.0, -20), 1.0, 200)) {
    const double r = pr(t) / (t * std::log2(std::log2(16.0 / t)));
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  EXPECT_LE(hi / lo, 4.0);
}

TEST(DilationFunction, Examples) {
  EXPECT_NEAR(dilation_function(power(0.5), 0.25), 0.5, 1e-12);
  const ConcaveFn loglog{[](double t) { return t * std::log2(std::log2(16.0 / t)); }, Domain::unit_interval, true, true,
                         "loglog"};
  const double t = std::ldexp(1.0, -10);
  const double m = dilation_function(loglog, t);
  EXPECT_GE(m, t);
  EXPECT_LE(m, 2.0 * t);
  for (double s : log_grid(1e-3, 1e3, 25)) {
    EXPECT_LE(dilation_function(power(0.3), s), std::max(1.0, s) * (1 + 1e-12));
    EXPECT_LE(dilation_function(phi_exp_square(), s), std::max(1.0, s) * (1 + 1e-12));
  }
}

TEST(DilationIndices, Examples) {
  const auto sq = dilation_indices(power(0.5));
  EXPECT_NEAR(sq.gamma, 0.5, 0.05);
  EXPECT_NEAR(sq.delta, 0.5, 0.05);
  EXPECT_NEAR(dilation_indices(phi_exp_square()).gamma, 1.0, 0.05);
  const auto id = dilation_indices(power(1.0));
  EXPECT_NEAR(id.gamma, 1.0, 1e-8);
  EXPECT_NEAR(id.delta, 1.0, 1e-8);
  for (double alpha : {0.2, 0.7}) {
    const auto r = dilation_indices(power(alpha));
    EXPECT_NEAR(r.gamma, alpha, 1e-6);
    EXPECT_NEAR(r.delta, alpha, 1e-6);
  }
}

TEST(ValidateClassF, AcceptsAndRejects) {
  const ConcaveFn good{[](double t) { return std::min(t, std::sqrt(t)); }, Domain::half_line, true, true, "good"};
  EXPECT_TRUE(validate_class_F(good, 1e4).ok);
  const ConcaveFn linear{[](double t) { return 2.0 * t; }, Domain::half_line, true, true, "linear"};
  EXPECT_FALSE(validate_class_F(linear, 1e4).ok);
  const ConcaveFn convex{[](double t) { return t * t; }, Domain::half_line, true, true, "convex"};
  EXPECT_FALSE(validate_class_F(convex, 1e4).ok);
}

TEST(RealizeKFunctional, ExampleCoefficients) {
  const ConcaveFn f{[](double t) { return std::min(t, std::sqrt(t)); }, Domain::half_line, true, true, "f"};
  const auto a = realize_kfunctional(f, 256);
  ASSERT_EQ(a.size(), 256U);
  EXPECT_NEAR(a[0], 1.0, 1e-12);
  for (std::size_t k = 2; k <= 256; ++k)
    EXPECT_NEAR(a[k - 1], std::pow(k, 0.25) - std::pow(k - 1.0, 0.25), 1e-12) << k;
  double lo = INFINITY, hi = 0.0;
  for (double t : log_grid(1.0, 16.0, 100)) {
    const double r = k_l1_l2_seq(a, t) / f(t);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  EXPECT_LE(hi / lo, 10.0);
}

TEST(RealizeKFunctional, SaturatedLinearCase) {
  const ConcaveFn f{[](double t) { return 3.0 * std::min(t, 1.0); }, Domain::half_line, true, true, "3min(t,1)"};
  const auto a = realize_kfunctional(f, 16);
  EXPECT_NEAR(a[0], 3.0, 1e-12);
  for (std::size_t k = 1; k < a.size(); ++k) EXPECT_NEAR(a[k], 0.0, 1e-12);
  for (double t : {0.25, 1.0, 4.0}) EXPECT_NEAR(k_l1_l2_seq(a, t), 3.0 * std::min(1.0, t), 1e-12);
}

TEST(RealizeKFunctional, Errors) {
  const ConcaveFn f{[](double t) { return std::min(t, std::sqrt(t)); }, Domain::half_line, true, true, "f"};
  EXPECT_THROW((void)realize_kfunctional(f, 4), std::invalid_argument);
  const ConcaveFn linear{[](double t) { return t; }, Domain::half_line, true, true, "t"};
  EXPECT_THROW((void)realize_kfunctional(linear, 64), std::invalid_argument);
}

TEST(Reiteration, QOfRearrangementTracksFunctionK) {
  Gen g(54);
  for (int i = 0; i < 100; ++i) {
    const auto x = g.half_line_function(6, 4.0);
    const auto q = unit_average(rearrange_step(x));
    double lo = INFINITY, hi = 0.0;
    for (double t : log_grid(1.0, 64.0, 33)) {
      const double r = k_l1_l2_seq(q, t) / k_l1_l2_fun(x, t);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    EXPECT_LE(hi / lo, 16.0);
  }
}
