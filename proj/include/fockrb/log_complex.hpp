#pragma once

// Complex numbers stored as (log-magnitude, phase). The values handled by this
// library (e^{phi(z)}, kernel norms, canonical products) routinely exceed the
// range of double, so everything that can overflow travels in this form and is
// only exponentiated after normalization.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>

namespace fockrb {

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// Reduce an angle to (-pi, pi].
inline double wrap_phase(double x) {
  if (!std::isfinite(x)) return x;
  double r = std::remainder(x, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  if (r > std::numbers::pi) r -= two_pi;
  return r;
}

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_sum_exp(std::span<const double> xs) {
  double m = neg_inf;
  for (double x : xs) m = std::max(m, x);
  if (m == neg_inf || !std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

class LogComplex {
 public:
  /// Zero.
  constexpr LogComplex() = default;

  LogComplex(double logmag, double phase)
      : logmag_(logmag), phase_(logmag == neg_inf ? 0.0 : wrap_phase(phase)) {}

  static LogComplex zero() { return {}; }
  static LogComplex one() { return {0.0, 0.0}; }

  static LogComplex from_complex(std::complex<double> z) {
    if (z == std::complex<double>{}) return {};
    return {std::log(std::abs(z)), std::arg(z)};
  }

  /// exp(w) for a complex logarithm w; the imaginary part may be unwrapped.
  static LogComplex from_log(std::complex<double> w) { return {w.real(), w.imag()}; }

  double logmag() const noexcept { return logmag_; }
  double phase() const noexcept { return phase_; }
  bool is_zero() const noexcept { return logmag_ == neg_inf; }

  /// Plain value; overflows to inf outside the double range.
  std::complex<double> to_complex() const { return scaled(0.0); }

  /// exp(logmag - shift) * e^{i phase}.
  std::complex<double> scaled(double shift) const {
    if (is_zero()) return {};
    return std::polar(std::exp(logmag_ - shift), phase_);
  }

  friend LogComplex operator*(const LogComplex& a, const LogComplex& b) {
    if (a.is_zero() || b.is_zero()) return {};
    return {a.logmag_ + b.logmag_, a.phase_ + b.phase_};
  }
  friend LogComplex operator/(const LogComplex& a, const LogComplex& b) {
    if (a.is_zero()) return {};
    return {a.logmag_ - b.logmag_, a.phase_ - b.phase_};
  }
  friend LogComplex operator+(const LogComplex& a, const LogComplex& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const double m = std::max(a.logmag_, b.logmag_);
    return from_scaled(a.scaled(m) + b.scaled(m), m);
  }
  friend LogComplex operator-(const LogComplex& a) {
    if (a.is_zero()) return a;
    return {a.logmag_, a.phase_ + std::numbers::pi};
  }
  friend LogComplex operator-(const LogComplex& a, const LogComplex& b) { return a + (-b); }
  friend LogComplex conj(const LogComplex& a) {
    if (a.is_zero()) return a;
    return {a.logmag_, -a.phase_};
  }

  LogComplex& operator*=(const LogComplex& o) { return *this = *this * o; }
  LogComplex& operator/=(const LogComplex& o) { return *this = *this / o; }
  LogComplex& operator+=(const LogComplex& o) { return *this = *this + o; }

  /// Rebuild from a value that was scaled down by exp(shift).
  static LogComplex from_scaled(std::complex<double> s, double shift) {
    if (s == std::complex<double>{}) return {};
    return {shift + std::log(std::abs(s)), std::arg(s)};
  }

 private:
  double logmag_ = neg_inf;
  double phase_ = 0.0;
};

/// Streaming sum of LogComplex terms. Terms are rescaled to the running maximum
/// and accumulated in separate positive/negative bins for the real and imaginary
/// parts, which keeps oscillatory sums from losing digits to early cancellation.
class LogSum {
 public:
  void add(const LogComplex& t) {
    if (t.is_zero()) return;
    if (t.logmag() > shift_) rescale(t.logmag());
    add_scaled(t.scaled(shift_));
  }

  /// Add exp(logmag) * e^{i phase} with logmag already known.
  void add(double logmag, double phase) { add(LogComplex{logmag, phase}); }

  LogComplex value() const {
    const std::complex<double> s{re_pos_ - re_neg_, im_pos_ - im_neg_};
    return LogComplex::from_scaled(s, shift_);
  }

 private:
  void rescale(double new_shift) {
    if (shift_ != neg_inf) {
      const double f = std::exp(shift_ - new_shift);
      re_pos_ *= f;
      re_neg_ *= f;
      im_pos_ *= f;
      im_neg_ *= f;
    }
    shift_ = new_shift;
  }
  void add_scaled(std::complex<double> v) {
    (v.real() >= 0 ? re_pos_ : re_neg_) += std::abs(v.real());
    (v.imag() >= 0 ? im_pos_ : im_neg_) += std::abs(v.imag());
  }

  double shift_ = neg_inf;
  double re_pos_ = 0, re_neg_ = 0, im_pos_ = 0, im_neg_ = 0;
};

}  // namespace fockrb
