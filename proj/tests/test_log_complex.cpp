#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "fockrb/log_complex.hpp"
#include "fockrb/polar.hpp"

using namespace fockrb;

namespace {

std::complex<double> random_complex(std::mt19937_64& g) {
  std::uniform_real_distribution<double> mag(-30.0, 30.0), ph(-3.14, 3.14);
  return std::polar(std::exp(mag(g)), ph(g));
}

double rel(std::complex<double> a, std::complex<double> b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(WrapPhase, LandsInHalfOpenInterval) {
  EXPECT_DOUBLE_EQ(wrap_phase(std::numbers::pi), std::numbers::pi);
  EXPECT_DOUBLE_EQ(wrap_phase(-std::numbers::pi), std::numbers::pi);
  EXPECT_NEAR(wrap_phase(3 * std::numbers::pi), std::numbers::pi, 1e-15);
  EXPECT_NEAR(wrap_phase(0.5 + 40 * std::numbers::pi), 0.5, 1e-13);
}

TEST(LogAddExp, HandlesInfinities) {
  EXPECT_EQ(log_add_exp(neg_inf, neg_inf), neg_inf);
  EXPECT_DOUBLE_EQ(log_add_exp(neg_inf, 2.0), 2.0);
  EXPECT_NEAR(log_add_exp(1000.0, 1000.0), 1000.0 + std::log(2.0), 1e-12);
}

TEST(LogComplex, ZeroAndOne) {
  EXPECT_TRUE(LogComplex::zero().is_zero());
  EXPECT_EQ(LogComplex::one().to_complex(), std::complex<double>(1.0, 0.0));
  EXPECT_TRUE(LogComplex::from_complex({0.0, 0.0}).is_zero());
}

TEST(LogComplex, ArithmeticMatchesComplexOnRandomInputs) {
  std::mt19937_64 g(20240611);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_complex(g), b = random_complex(g);
    const auto la = LogComplex::from_complex(a), lb = LogComplex::from_complex(b);
    EXPECT_LT(rel((la * lb).to_complex(), a * b), 1e-12);
    EXPECT_LT(rel((la / lb).to_complex(), a / b), 1e-12);
    EXPECT_LT(rel(conj(la).to_complex(), std::conj(a)), 1e-12);
    LogSum s;
    s.add(la);
    s.add(lb);
    const auto sum = a + b;
    // Relative to the larger addend: cancellation cannot be undone.
    EXPECT_LT(std::abs(s.value().to_complex() - sum) / std::max(std::abs(a), std::abs(b)), 1e-12);
  }
}

TEST(LogSum, BeyondDoubleRange) {
  LogSum s;
  s.add(5000.0, 0.0);
  s.add(5000.0, std::numbers::pi / 2);
  const LogComplex v = s.value();
  EXPECT_NEAR(v.logmag(), 5000.0 + 0.5 * std::log(2.0), 1e-12);
  EXPECT_NEAR(v.phase(), std::numbers::pi / 4, 1e-12);
}

TEST(LogSum, ExactCancellationGivesZero) {
  LogSum s;
  s.add(3.0, 0.0);
  s.add(3.0, std::numbers::pi);
  EXPECT_TRUE(s.value().is_zero() || s.value().logmag() < 3.0 - 30.0);
}

TEST(Polar, DistanceMatchesComplex) {
  std::mt19937_64 g(7);
  for (int i = 0; i < 500; ++i) {
    const auto a = random_complex(g) * 1e-20, b = random_complex(g) * 1e-20;
    const Polar pa = Polar::from_complex(a), pb = Polar::from_complex(b);
    EXPECT_NEAR(polar_distance(pa, pb) / std::abs(a - b), 1.0, 1e-10);
  }
  EXPECT_EQ(polar_log_distance(Polar{1.0, 0.3}, Polar{1.0, 0.3}), neg_inf);
}
