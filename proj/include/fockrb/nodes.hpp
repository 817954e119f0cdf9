#pragma once

// Explicit node sequences: one node per ring, radii either e^{(n+1)/2} or
// driven by the moments, plus the square lattice used as a control.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "fockrb/errors.hpp"
#include "fockrb/moments.hpp"
#include "fockrb/node_sequence.hpp"

namespace fockrb {

/// lambda_n = exp((n+1)/2 + i theta_n).
inline NodeSequence nodes_partB(std::size_t count, ThetaRule rule = ThetaRule::zeros()) {
  if (count == 0) throw config_error("node count must be >= 1");
  const auto theta = rule.angles(count);
  std::vector<Polar> out(count);
  for (std::size_t n = 0; n < count; ++n) out[n] = {0.5 * (static_cast<double>(n) + 1.0), theta[n]};
  return {std::move(out), NodeGenerator::part_b, rule};
}

/// log r_n = (w_{n+1} - w_{n-1}) / 4 for n >= 1, r_0 = 0.
inline double partC_log_radius(const MomentTable& t, std::size_t n) {
  if (n == 0) return neg_inf;
  if (n + 1 > t.n_max()) throw config_error("moment table too short for node " + std::to_string(n));
  return 0.25 * (t[n + 1] - t[n - 1]);
}

inline NodeSequence nodes_partC(const MomentTable& t, std::size_t count,
                                ThetaRule rule = ThetaRule::zeros()) {
  if (count == 0) throw config_error("node count must be >= 1");
  if (t.n_max() < count + 1)
    throw config_error("moment table n_max = " + std::to_string(t.n_max()) + " too short for " +
                       std::to_string(count) + " nodes (needs >= " + std::to_string(count + 1) +
                       ")");
  const auto theta = rule.angles(count);
  std::vector<Polar> out(count);
  for (std::size_t n = 0; n < count; ++n) out[n] = {partC_log_radius(t, n), theta[n]};
  return {std::move(out), NodeGenerator::part_c, rule, t.digest()};
}

/// spacing * ((i + shift) + i (j + shift)) inside the disk |z| <= radius,
/// ordered by modulus, ties by argument.
inline NodeSequence square_lattice(double spacing, double radius, double shift = 0.0) {
  if (!(spacing > 0) || !(radius > 0)) throw config_error("lattice needs spacing, radius > 0");
  const auto k = static_cast<long>(std::ceil(radius / spacing)) + 1;
  std::vector<Polar> pts;
  for (long i = -k; i <= k; ++i)
    for (long j = -k; j <= k; ++j) {
      const std::complex<double> z{spacing * (static_cast<double>(i) + shift),
                                   spacing * (static_cast<double>(j) + shift)};
      if (std::abs(z) <= radius) pts.push_back(Polar::from_complex(z));
    }
  std::stable_sort(pts.begin(), pts.end(), [](const Polar& a, const Polar& b) {
    return a.log_r != b.log_r ? a.log_r < b.log_r : a.theta < b.theta;
  });
  return {std::move(pts), NodeGenerator::custom, ThetaRule::zeros()};
}

// ---------------------------------------------------------------------------

struct GapReport {
  bool with_factor = true;
  double kappa = std::numeric_limits<double>::infinity();
  std::size_t argmin_n = 0;
  std::size_t argmin_s = 0;
  std::vector<double> per_n_min;  // index n-1 holds the minimum for node n
  bool finite = false;
  bool tail_nondecreasing = false;
  bool pass() const { return finite && tail_nondecreasing; }
};

/// kappa = min over 1 <= n <= count, 0 <= s <= s_max, s != n of
///   2(n-s) log r_n - w_n + w_s - 2 log(n+1) - 2 log(s+1)
/// with r_n from the moment recipe. Without the factor the two log terms are
/// dropped.
inline GapReport verify_moment_gap(const MomentTable& t, std::size_t count, std::size_t s_max,
                                bool with_factor = true) {
  if (count == 0) throw config_error("inequality check needs count >= 1");
  if (s_max > t.n_max())
    throw config_error("s_max = " + std::to_string(s_max) + " exceeds table n_max " +
                       std::to_string(t.n_max()));
  if (count + 1 > t.n_max())
    throw config_error("count = " + std::to_string(count) + " exceeds table n_max - 1");

  GapReport rep;
  rep.with_factor = with_factor;
  rep.per_n_min.assign(count, std::numeric_limits<double>::infinity());
  for (std::size_t n = 1; n <= count; ++n) {
    const double lr = partC_log_radius(t, n);
    const double fn = with_factor ? 2.0 * std::log(static_cast<double>(n) + 1.0) : 0.0;
    double& best = rep.per_n_min[n - 1];
    for (std::size_t s = 0; s <= s_max; ++s) {
      if (s == n) continue;
      const double fs = with_factor ? 2.0 * std::log(static_cast<double>(s) + 1.0) : 0.0;
      const double d = static_cast<double>(n) - static_cast<double>(s);
      const double v = 2.0 * d * lr - t[n] + t[s] - fn - fs;
      if (v < best) best = v;
      if (v < rep.kappa) {
        rep.kappa = v;
        rep.argmin_n = n;
        rep.argmin_s = s;
      }
    }
  }
  rep.finite = std::isfinite(rep.kappa);
  rep.tail_nondecreasing = true;
  const std::size_t start = count - count / 3;  // final third, 1-based n
  for (std::size_t n = std::max<std::size_t>(start, 2); n <= count; ++n)
    if (rep.per_n_min[n - 1] < rep.per_n_min[n - 2] - 1e-9) rep.tail_nondecreasing = false;
  return rep;
}

}  // namespace fockrb
