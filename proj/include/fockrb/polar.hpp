#pragma once

#include <cmath>
#include <complex>

#include "fockrb/log_complex.hpp"

namespace fockrb {

/// A point of the plane in log-polar form. Node radii of the moment-driven
/// sequences reach e^{10^4} and beyond, so the radius is never stored directly.
/// The origin is log_r = -inf.
struct Polar {
  double log_r = neg_inf;
  double theta = 0.0;

  static Polar origin() { return {}; }
  static Polar from_radius(double r, double theta = 0.0) {
    return {r == 0.0 ? neg_inf : std::log(r), wrap_phase(theta)};
  }
  static Polar from_complex(std::complex<double> z) {
    return from_radius(std::abs(z), std::arg(z));
  }

  bool is_origin() const noexcept { return log_r == neg_inf; }
  double radius() const { return std::exp(log_r); }
  std::complex<double> to_complex() const {
    return is_origin() ? std::complex<double>{} : std::polar(radius(), theta);
  }
  LogComplex as_log_complex() const { return {log_r, theta}; }

  Polar rotated(double alpha) const { return {log_r, wrap_phase(theta + alpha)}; }
  Polar scaled(double factor) const { return {log_r + std::log(factor), theta}; }
  Polar conjugate() const { return {log_r, wrap_phase(-theta)}; }

  friend bool operator==(const Polar&, const Polar&) = default;
};

/// |a - b|, exact whenever both radii are representable.
inline double polar_distance(const Polar& a, const Polar& b) {
  if (a.is_origin()) return b.is_origin() ? 0.0 : b.radius();
  if (b.is_origin()) return a.radius();
  // |a - b| = |a| * |1 - (b/a)|, written so that huge but comparable radii survive.
  const double big = std::max(a.log_r, b.log_r);
  const std::complex<double> za = std::polar(std::exp(a.log_r - big), a.theta);
  const std::complex<double> zb = std::polar(std::exp(b.log_r - big), b.theta);
  return std::exp(big) * std::abs(za - zb);
}

/// log|a - b|; finite for radii far outside the double range.
inline double polar_log_distance(const Polar& a, const Polar& b) {
  if (a.is_origin() && b.is_origin()) return neg_inf;
  if (a.is_origin()) return b.log_r;
  if (b.is_origin()) return a.log_r;
  const double big = std::max(a.log_r, b.log_r);
  const std::complex<double> za = std::polar(std::exp(a.log_r - big), a.theta);
  const std::complex<double> zb = std::polar(std::exp(b.log_r - big), b.theta);
  const double d = std::abs(za - zb);
  return d == 0.0 ? neg_inf : big + std::log(d);
}

}  // namespace fockrb
