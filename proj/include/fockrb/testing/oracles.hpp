#pragma once

// Reference computations that share no numerical path with the library:
// dense trapezoid sums, golden-section Laplace points, 50-digit series and
// products.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_complex.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "fockrb/polar.hpp"

namespace fockrb::oracle {

using big = boost::multiprecision::cpp_bin_float_50;
using big_complex = boost::multiprecision::cpp_complex_50;

enum class Family { log_power, power };

/// psi(s) = phi(e^s), written out independently of RadialWeight.
inline double psi(Family f, double p, double s) {
  if (f == Family::power) return std::exp(p * s);
  return s > 0 ? std::pow(s, p) : 0.0;
}

/// w_n = log(2 pi int exp((2n+2)s - 2 psi(s)) ds) by a `points`-point
/// trapezoid over the window where the exponent is within 80 nats of its
/// maximum. The maximum is located by golden-section search on the exponent
/// itself; s = 0 is a grid node whenever it falls inside the window.
inline double trapezoid_wn(Family f, double p, std::size_t n, std::size_t points = 1'000'000) {
  const double a = 2.0 * static_cast<double>(n) + 2.0;
  auto g = [&](double s) { return a * s - 2.0 * psi(f, p, s); };

  double lo = -1.0, hi = 1.0;
  while (g(hi) >= g(0.5 * (lo + hi))) hi = 2.0 * hi + 1.0;
  while (g(lo) >= g(0.5 * (lo + hi))) lo = 2.0 * lo - 1.0;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
  double g1 = g(x1), g2 = g(x2);
  for (int it = 0; it < 300 && hi - lo > 1e-13 * (1.0 + std::abs(lo)); ++it) {
    if (g1 < g2) {
      lo = x1;
      x1 = x2;
      g1 = g2;
      x2 = lo + invphi * (hi - lo);
      g2 = g(x2);
    } else {
      hi = x2;
      x2 = x1;
      g2 = g1;
      x1 = hi - invphi * (hi - lo);
      g1 = g(x1);
    }
  }
  const double s_star = 0.5 * (lo + hi);
  const double gmax = g(s_star);

  double left = 1.0, right = 1.0;
  while (g(s_star - left) > gmax - 80.0) left *= 1.5;
  while (g(s_star + right) > gmax - 80.0) right *= 1.5;
  const double L = s_star - left, R = s_star + right;

  auto trapezoid = [&](double x0, double x1_, std::size_t m) {
    const double h = (x1_ - x0) / static_cast<double>(m);
    double acc = 0.5 * (std::exp(g(x0) - gmax) + std::exp(g(x1_) - gmax));
    for (std::size_t i = 1; i < m; ++i) acc += std::exp(g(x0 + h * static_cast<double>(i)) - gmax);
    return acc * h;
  };
  double total;
  if (L < 0.0 && R > 0.0) {
    const auto m1 = std::max<std::size_t>(1000, static_cast<std::size_t>(points * (-L) / (R - L)));
    const auto m2 = std::max<std::size_t>(1000, points - m1);
    total = trapezoid(L, 0.0, m1) + trapezoid(0.0, R, m2);
  } else {
    total = trapezoid(L, R, points);
  }
  return std::log(2.0 * std::numbers::pi) + gmax + std::log(total);
}

/// log(pi n! / 2^{n+1}) in 50-digit arithmetic.
inline big power2_wn_exact(std::size_t n) {
  big acc = log(boost::math::constants::pi<big>());
  for (std::size_t k = 2; k <= n; ++k) acc += log(big(k));
  acc -= big(n + 1) * log(big(2));
  return acc;
}

/// max over u > 0 of 2u - 2u^{1+delta}, by Brent's method.
inline double laplace_constant(double delta) {
  auto neg = [&](double u) { return -(2.0 * u - 2.0 * std::pow(u, 1.0 + delta)); };
  const auto r = boost::math::tools::brent_find_minima(neg, 0.0, 1.0,
                                                      std::numeric_limits<double>::digits);
  return -r.second;
}

/// int_R exp(-2x^2) dx by adaptive Gauss-Kronrod.
inline double gaussian_integral() {
  auto f = [](double x) { return std::exp(-2.0 * x * x); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -12.0, 12.0, 20, 1e-15);
}

inline big_complex to_big(const Polar& p) {
  if (p.is_origin()) return big_complex(0);
  const big r = exp(big(p.log_r));
  return big_complex(r * cos(big(p.theta)), r * sin(big(p.theta)));
}

/// sum_{n < terms} conj(lambda)^n z^n e^{-w_n} in 50 digits.
inline big_complex kernel_direct(const std::function<big(std::size_t)>& w, const Polar& lambda,
                                 const Polar& z, std::size_t terms) {
  const big_complex x = conj(to_big(lambda)) * to_big(z);
  big_complex acc(0), pw(1);
  for (std::size_t n = 0; n < terms; ++n) {
    acc += pw * exp(-w(n));
    pw *= x;
  }
  return acc;
}

/// prod_{j != skip} (1 - z/lambda_j); a node at the origin gives the factor z.
inline big_complex product_direct(const std::vector<Polar>& nodes, const big_complex& z,
                                  std::size_t skip = std::numeric_limits<std::size_t>::max()) {
  big_complex acc(1);
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (j == skip) continue;
    if (nodes[j].is_origin())
      acc *= z;
    else
      acc *= big_complex(1) - z / to_big(nodes[j]);
  }
  return acc;
}

/// E'(lambda_k) for the finite product over `nodes`.
inline big_complex product_derivative_direct(const std::vector<Polar>& nodes, std::size_t k) {
  const big_complex lam = to_big(nodes[k]);
  const big_complex rest = product_direct(nodes, lam, k);
  if (nodes[k].is_origin()) return rest;
  return -rest / lam;
}

/// sum_j a_j ||k_j|| E(z) / (E'(lambda_j)(z - lambda_j)) with everything in
/// 50 digits; norm_sq[j] = ||k_j||^2.
inline big_complex lagrange_direct(const std::vector<Polar>& nodes,
                                   const std::vector<std::pair<std::size_t, std::complex<double>>>& a,
                                   const std::vector<big>& norm_sq, const Polar& z) {
  const big_complex zz = to_big(z);
  const big_complex E = product_direct(nodes, zz);
  big_complex acc(0);
  for (const auto& [j, v] : a) {
    const big_complex coef(big(v.real()), big(v.imag()));
    acc += coef * sqrt(norm_sq[j]) * E /
           (product_derivative_direct(nodes, j) * (zz - to_big(nodes[j])));
  }
  return acc;
}

/// Central difference of a complex function along the real direction.
template <class F>
std::complex<double> central_difference(F&& f, std::complex<double> z, double h) {
  return (f(z + h) - f(z - h)) / (2.0 * h);
}

inline double log_abs(const big_complex& z) { return static_cast<double>(log(abs(z))); }
inline double arg_of(const big_complex& z) {
  return static_cast<double>(atan2(z.imag(), z.real()));
}

}  // namespace fockrb::oracle
