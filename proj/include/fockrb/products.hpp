#pragma once

// Canonical products E(z) = prod (1 - z/lambda_n) over a node sequence, in the
// log domain. A node at the origin contributes the factor z.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "fockrb/errors.hpp"
#include "fockrb/log_complex.hpp"
#include "fockrb/node_sequence.hpp"
#include "fockrb/nodes.hpp"
#include "fockrb/ratio_stat.hpp"
#include "fockrb/weights.hpp"

namespace fockrb {

struct ProductValue {
  LogComplex value;
  std::size_t terms_used = 0;
  /// Bound on |log E - log E_truncated| in nats.
  double tail_bound = 0.0;
};

/// Smallest gap in log r over the last half of a finite sequence.
inline double min_log_gap_tail(const NodeSequence& nodes) {
  const std::size_t n = nodes.size();
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t k = std::max<std::size_t>(1, n / 2); k < n; ++k)
    g = std::min(g, nodes[k].log_r - nodes[k - 1].log_r);
  return g;
}

inline constexpr double product_min_log_gap = 0.05;

namespace detail {

inline void check_eps(double eps) {
  if (!(eps > 1e-14 && eps < 1e-2))
    throw domain_error("product eps must lie in (1e-14, 1e-2), got " + format_g17(eps));
}

/// log(1 - u) for u = exp(lu) e^{i pu}, with the imaginary part in (-pi, pi].
/// Returns -inf real part when u == 1.
inline std::complex<double> log1m(double lu, double pu) {
  if (lu < std::log(0.5)) {
    // 1 - u close to 1: log1p keeps the small real part accurate.
    const std::complex<double> u = std::polar(std::exp(lu), pu);
    const double re = 0.5 * std::log1p(-2.0 * u.real() + std::norm(u));
    return {re, std::atan2(-u.imag(), 1.0 - u.real())};
  }
  if (lu > std::log(2.0)) {
    // log(-u) + log(1 - 1/u); exact for |u| far outside the double range.
    const std::complex<double> tail = log1m(-lu, -pu);
    return {lu + tail.real(), wrap_phase(pu + std::numbers::pi) + tail.imag()};
  }
  const std::complex<double> v = 1.0 - std::polar(std::exp(lu), pu);
  if (v == std::complex<double>{}) return {neg_inf, 0.0};
  return std::log(v);
}

/// Source of factors: a finite list or the Part B sequence continued as far as
/// needed (its theta rule is prefix-stable).
class FactorSource {
 public:
  explicit FactorSource(const NodeSequence& nodes) : base_(nodes) {
    infinite_ = nodes.generator() == NodeGenerator::part_b;
    if (infinite_) return;
    if (nodes.generator() == NodeGenerator::custom && nodes.size() > 1) {
      const double g = min_log_gap_tail(nodes);
      if (!(g >= product_min_log_gap))
        throw truncation_unsound_error(
            "custom nodes fail the growth check (min log-gap over the last half " +
            format_g17(g) + " < " + format_g17(product_min_log_gap) + ")");
    }
    // suffix_gap_[n]: smallest log-gap between consecutive nodes from n on.
    suffix_gap_.assign(nodes.size() + 1, std::numeric_limits<double>::infinity());
    for (std::size_t k = nodes.size(); k-- > 1;)
      suffix_gap_[k - 1] = std::min(suffix_gap_[k], nodes[k].log_r - nodes[k - 1].log_r);
  }

  bool infinite() const noexcept { return infinite_; }
  bool has(std::size_t n) const { return infinite_ || n < base_.size(); }

  /// Ratio bound q for |lambda_n / lambda_{n+k}| <= q^k.
  double ratio_bound(std::size_t n) const {
    return infinite_ ? std::exp(-0.5) : std::exp(-suffix_gap_[n]);
  }

  Polar operator[](std::size_t n) {
    if (n < base_.size()) return base_[n];
    if (ext_.size() <= n) ext_ = nodes_partB(2 * n + 16, base_.theta_rule()).nodes();
    return ext_[n];
  }

 private:
  const NodeSequence& base_;
  std::vector<Polar> ext_;
  std::vector<double> suffix_gap_;
  bool infinite_ = false;
};

/// Sum of log f_j(z) over all factors j != skip, with f_j = 1 - z/lambda_j or
/// f_j = z for a node at the origin. The imaginary parts add up unwrapped.
inline ProductValue log_product(const NodeSequence& nodes, const Polar& z, double eps,
                                std::size_t skip) {
  check_eps(eps);
  FactorSource src(nodes);
  const ProductValue zero{LogComplex::zero(), 0, 0.0};
  double re = 0.0, im = 0.0;
  double tail_bound = 0.0;
  std::size_t n = 0;
  for (; src.has(n); ++n) {
    if (n > 1'000'000) throw numeric_error("canonical product did not converge");
    const Polar lam = src[n];
    if (lam.is_origin()) {
      if (n == skip) continue;
      if (z.is_origin()) return zero;
      re += z.log_r;
      im += z.theta;
      continue;
    }
    if (z.is_origin()) break;  // every remaining factor is 1
    const double lu = z.log_r - lam.log_r;
    const double au = std::exp(lu);
    if (au <= 0.5) {
      // |log(1-u)| <= 2|u| for |u| <= 1/2, and the |u| decay geometrically.
      const double q = src.ratio_bound(n);
      const double tail = q < 1.0 ? 2.0 * au / (1.0 - q) : std::numeric_limits<double>::infinity();
      if (tail <= eps) {
        tail_bound = tail;
        break;
      }
    }
    if (n == skip) continue;
    const std::complex<double> l = log1m(lu, z.theta - lam.theta);
    if (l.real() == neg_inf) return zero;
    re += l.real();
    im += l.imag();
  }
  ProductValue out;
  out.terms_used = n;
  out.tail_bound = tail_bound;
  out.value = LogComplex{re, im};
  return out;
}

}  // namespace detail

/// E(z) with the tail beyond eps truncated. An exact node hit gives zero.
inline ProductValue product_eval(const NodeSequence& nodes, const Polar& z, double eps = 1e-12) {
  return detail::log_product(nodes, z, eps, std::numeric_limits<std::size_t>::max());
}

/// prod_{j != k} f_j(z).
inline ProductValue deleted_product(const NodeSequence& nodes, std::size_t k, const Polar& z,
                                    double eps = 1e-12) {
  if (k >= nodes.size()) throw config_error("node index out of range");
  return detail::log_product(nodes, z, eps, k);
}

/// E'(lambda_k) = f_k'(lambda_k) prod_{j != k} f_j(lambda_k), with f_k' = -1/lambda_k
/// (or 1 for a node at the origin).
inline ProductValue product_derivative_at_node(const NodeSequence& nodes, std::size_t k,
                                               double eps = 1e-12) {
  if (k >= nodes.size()) throw config_error("node index out of range");
  const Polar lam = nodes[k];
  for (std::size_t j = 0; j < nodes.size(); ++j)
    if (j != k && nodes[j].log_r == lam.log_r &&
        (lam.is_origin() || wrap_phase(nodes[j].theta - lam.theta) == 0.0))
      throw degenerate_error("node " + std::to_string(k) + " duplicates node " +
                             std::to_string(j) + "; E'(lambda) vanishes");
  ProductValue d = deleted_product(nodes, k, lam, eps);
  if (!lam.is_origin()) d.value = d.value * LogComplex{-lam.log_r, std::numbers::pi - lam.theta};
  return d;
}

// ---------------------------------------------------------------------------

/// Grid points closer than this (relative to |z|) to a node are nudged away.
inline constexpr double product_grid_jitter = 1e-9;

/// log|E(z)| - phi(z) - log dist(z, Lambda) + (3/2) log|z| over a set of points.
inline RatioStat verify_product_estimate(const NodeSequence& nodes, const RadialWeight& w,
                             const std::vector<Polar>& grid, double eps = 1e-12) {
  if (w.kind() != RadialWeight::Kind::log_power || w.param() != 2.0)
    throw config_error("product estimate check is defined for the log-power weight with beta = 2");
  if (grid.empty()) throw config_error("product estimate grid is empty");

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : grid) {
    if (p.is_origin()) throw coverage_error("product estimate grid contains the origin");
    lo = std::min(lo, p.log_r);
    hi = std::max(hi, p.log_r);
  }
  const double two_dec = 2.0 * std::numbers::ln10;
  double first = nodes[0].log_r;
  if (first == neg_inf && nodes.size() > 1) first = nodes[1].log_r;
  if (lo < first - two_dec || hi > nodes[nodes.size() - 1].log_r + two_dec)
    throw coverage_error("grid radii e^" + format_g17(lo) + " .. e^" + format_g17(hi) +
                         " exceed node coverage e^" + format_g17(first) + " .. e^" +
                         format_g17(nodes[nodes.size() - 1].log_r) + " by more than 2 decades");

  // Distances are taken to the full sequence the product runs over.
  NodeSequence dist_nodes = nodes;
  if (nodes.generator() == NodeGenerator::part_b) {
    const auto need = static_cast<std::size_t>(std::ceil(2.0 * hi)) + 8;
    if (need > nodes.size()) dist_nodes = nodes_partB(need, nodes.theta_rule());
  }

  std::vector<RatioSample> out;
  out.reserve(grid.size());
  for (Polar z : grid) {
    NearestNode near = dist_to_nodes(dist_nodes, z);
    if (near.log_distance < z.log_r + std::log(product_grid_jitter)) {
      z = {z.log_r + product_grid_jitter, z.theta};
      near = dist_to_nodes(dist_nodes, z);
    }
    const ProductValue e = product_eval(nodes, z, eps);
    const double v = e.value.logmag() - w.phi_at_log(z.log_r) - near.log_distance + 1.5 * z.log_r;
    out.push_back({z.log_r, v});
  }
  return RatioStat(std::move(out));
}

/// log|E'(lambda_n)| - phi(lambda_n) + (3/2) log r_n over the nodes.
inline RatioStat verify_derivative_estimate(const NodeSequence& nodes, const RadialWeight& w,
                             double eps = 1e-12) {
  if (w.kind() != RadialWeight::Kind::log_power || w.param() != 2.0)
    throw config_error("derivative estimate check is defined for the log-power weight with beta = 2");
  if (nodes.size() < 10) throw config_error("derivative estimate check needs >= 10 nodes");
  std::vector<RatioSample> out;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const Polar lam = nodes[n];
    if (lam.is_origin()) continue;
    const ProductValue d = product_derivative_at_node(nodes, n, eps);
    out.push_back({lam.log_r, d.value.logmag() - w.phi_at_log(lam.log_r) + 1.5 * lam.log_r});
  }
  return RatioStat(std::move(out));
}

}  // namespace fockrb
