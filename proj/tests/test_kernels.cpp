#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fockrb/kernels.hpp"
#include "fockrb/testing/oracles.hpp"

using namespace fockrb;
namespace oracle = fockrb::oracle;

namespace {

const MomentTable& lp2() {
  static const MomentTable t = build_moment_table(RadialWeight::log_power(2), 300, 1e-12);
  return t;
}

const MomentTable& p2() {
  static const MomentTable t = build_moment_table(RadialWeight::power(2), 700, 1e-12);
  return t;
}

}  // namespace

TEST(KernelEval, OriginGivesFirstMoment) {
  const auto v = kernel_eval(lp2(), Polar::origin(), Polar::from_radius(7.0, 1.0));
  EXPECT_DOUBLE_EQ(v.logmag(), -lp2()[0]);
  EXPECT_EQ(v.phase(), 0.0);
  EXPECT_DOUBLE_EQ(kernel_norm_sq(lp2(), 0.0), -lp2()[0]);
}

TEST(KernelEval, DiagonalIsTheNorm) {
  const Polar lam = Polar::from_radius(3.0, 2.0);
  const auto v = kernel_eval(lp2(), lam, lam);
  EXPECT_NEAR(v.phase(), 0.0, 1e-12);
  EXPECT_NEAR(v.logmag(), kernel_norm_sq(lp2(), 3.0), 1e-12);
}

TEST(KernelEval, MatchesHighPrecisionSum) {
  // Frozen from a 50-digit direct summation with the same moments.
  const Polar lam = Polar::from_radius(std::exp(2.0));
  const Polar z{2.0, std::numbers::pi / 3};
  const auto v = kernel_eval(lp2(), lam, z);
  EXPECT_NEAR(v.logmag(), 2.3078341473265755, 1e-8);
  EXPECT_NEAR(v.phase(), -3.1414073880085347, 1e-8);

  const auto& t = lp2();
  const auto ref = oracle::kernel_direct([&](std::size_t n) { return oracle::big(t[n]); }, lam, z,
                                         t.size());
  EXPECT_NEAR(v.logmag(), oracle::log_abs(ref), 1e-10);
  EXPECT_NEAR(v.phase(), oracle::arg_of(ref), 1e-10);
}

TEST(KernelNorm, GaussianClosedForm) {
  // sum (2r^2)^n / n! * 2/pi = (2/pi) e^{2 r^2}.
  EXPECT_NEAR(kernel_norm_sq(p2(), 2.0), 7.5484172947105446, 1e-10 * 7.55);
  EXPECT_NEAR(kernel_norm_sq(p2(), 2.0), 8.0 + std::log(2.0 / std::numbers::pi), 1e-10 * 7.55);
  const auto ref = oracle::kernel_direct(
      [](std::size_t n) { return oracle::power2_wn_exact(n); }, Polar::from_radius(2.0),
      Polar::from_radius(2.0), 200);
  EXPECT_NEAR(kernel_norm_sq(p2(), 2.0), oracle::log_abs(ref), 1e-10 * 7.55);
}

TEST(KernelNorm, LogPowerTwoBand) {
  // log ||k||^2 at r = e^t stays within O(1) of 2t^2 - 2t.
  for (double t : {3.0, 5.0, 8.0, 12.0}) {
    const double v = kernel_norm_sq_log(lp2(), t);
    EXPECT_NEAR(v, 2 * t * t - 2 * t, 2.0) << "t=" << t;
  }
}

TEST(KernelNorm, TruncationReportsRequiredSize) {
  const auto small = build_moment_table(RadialWeight::power(2), 60, 1e-12);
  try {
    kernel_norm_sq(small, 10.0);
    FAIL() << "expected truncation_error";
  } catch (const truncation_error& e) {
    EXPECT_GT(e.required_n_max(), 60u);
    // The suggested size is enough.
    const auto big = build_moment_table(RadialWeight::power(2), e.required_n_max(), 1e-12);
    EXPECT_NO_THROW(kernel_norm_sq(big, 10.0));
  }
}

TEST(KernelEval, HermitianSymmetry) {
  const Polar a = Polar::from_radius(5.0, 0.3), b = Polar::from_radius(20.0, -2.0);
  for (const auto* t : {&lp2(), &p2()}) {
    const auto ab = kernel_eval(*t, a, b), ba = kernel_eval(*t, b, a);
    EXPECT_NEAR(ab.logmag(), ba.logmag(), 1e-12 * std::max(1.0, std::abs(ab.logmag())));
    EXPECT_NEAR(wrap_phase(ab.phase() + ba.phase()), 0.0, 1e-12);
  }
}

TEST(KernelEval, RotationInvariance) {
  const Polar a = Polar::from_radius(40.0, 0.7), b = Polar::from_radius(90.0, 2.1);
  const auto base = kernel_eval(lp2(), a, b);
  for (double alpha : {0.4, -1.3, 3.0}) {
    const auto v = kernel_eval(lp2(), a.rotated(alpha), b.rotated(alpha));
    EXPECT_NEAR(v.logmag(), base.logmag(), 1e-12 * std::abs(base.logmag()));
  }
  EXPECT_EQ(kernel_norm_sq_log(lp2(), 4.0), kernel_eval(lp2(), Polar{4.0, 1.0}, Polar{4.0, 1.0}).logmag());
}

TEST(KernelEval, DiagonalIsPositive) {
  for (double s : {0.1, 2.0, 6.0, 15.0}) {
    const Polar p{s, 1.234};
    EXPECT_NEAR(kernel_eval(lp2(), p, p).phase(), 0.0, 1e-12);
  }
}

TEST(KernelAsymptotic, SinglePoint) {
  const auto st = verify_kernel_norm_asymptotic(RadialWeight::log_power(2), lp2(), {50.0});
  EXPECT_EQ(st.min(), st.max());
}

TEST(KernelAsymptotic, GaussianIsFlat) {
  const auto big = build_moment_table(RadialWeight::power(2), 700, 1e-12);
  const auto st = verify_kernel_norm_asymptotic(RadialWeight::power(2), big,
                                                geometric_grid(1e-3, 4, 10));
  EXPECT_LE(std::exp(st.width()), 10.0);
}

TEST(KernelAsymptotic, LogPowerTwoStable) {
  const auto st = verify_kernel_norm_asymptotic(RadialWeight::log_power(2), lp2(),
                                                geometric_grid(10, 4, 10));
  EXPECT_LE(st.width(), 1.0);
  EXPECT_LE(std::abs(st.drift()), 0.5);
}
