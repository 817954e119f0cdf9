#pragma once

// Finite sections of the Gram matrix of normalized kernels, their extreme
// eigenvalues, the Bari proximity terms and the N-trend classification.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "fockrb/errors.hpp"
#include "fockrb/kernels.hpp"
#include "fockrb/moments.hpp"
#include "fockrb/node_sequence.hpp"
#include "fockrb/parallel.hpp"

namespace fockrb {

inline constexpr std::size_t gram_max_n = 512;

struct RieszBounds {
  double c;
  double C;
  double cond;
};

class GramSection {
 public:
  /// Takes a Hermitian matrix with unit diagonal; checks the structure and
  /// runs the eigensolve.
  explicit GramSection(Eigen::MatrixXcd entries, std::string node_digest = {},
                       std::string table_digest = {})
      : g_(std::move(entries)),
        node_digest_(std::move(node_digest)),
        table_digest_(std::move(table_digest)) {
    const auto n = g_.rows();
    if (n == 0 || g_.cols() != n) throw config_error("Gram section must be square and nonempty");
    if (static_cast<std::size_t>(n) > gram_max_n)
      throw config_error("Gram section larger than " + std::to_string(gram_max_n));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(g_(i, i) - 1.0) > 1e-12)
        throw numeric_error("Gram diagonal entry " + std::to_string(i) + " is not 1");
      for (Eigen::Index j = 0; j < i; ++j)
        if (g_(i, j) != std::conj(g_(j, i)))
          throw numeric_error("Gram section is not Hermitian");
    }
    solve();
  }

  std::size_t N() const noexcept { return static_cast<std::size_t>(g_.rows()); }
  const Eigen::MatrixXcd& entries() const noexcept { return g_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eig_; }
  double eig_min() const { return eig_(0); }
  double eig_max() const { return eig_(eig_.size() - 1); }
  double cond() const { return eig_max() / eig_min(); }
  const std::string& node_digest() const noexcept { return node_digest_; }
  const std::string& table_digest() const noexcept { return table_digest_; }

  /// Leading N x N block.
  GramSection leading(std::size_t n) const {
    if (n == 0 || n > N()) throw config_error("leading block size out of range");
    const auto k = static_cast<Eigen::Index>(n);
    return GramSection(g_.topLeftCorner(k, k), node_digest_, table_digest_);
  }

 private:
  void solve() {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g_, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw numeric_error("Hermitian eigensolve failed");
    eig_ = es.eigenvalues();
    if (eig_(0) < -1e-8 * eig_(eig_.size() - 1))
      throw numeric_error("Gram section is not positive semidefinite (eig_min = " +
                          format_g17(eig_(0)) + ")");
  }

  Eigen::MatrixXcd g_;
  Eigen::VectorXd eig_;
  std::string node_digest_;
  std::string table_digest_;
};

/// entries[m][n] = k_{lambda_n}(lambda_m) / (||k_m|| ||k_n||), normalized in the
/// log domain before exponentiation.
inline GramSection gram_section(const MomentTable& t, const NodeSequence& nodes, std::size_t N,
                                unsigned jobs = 1) {
  if (N == 0 || N > nodes.size())
    throw config_error("Gram size " + std::to_string(N) + " outside 1.." +
                       std::to_string(nodes.size()));
  if (N > gram_max_n) throw config_error("Gram size capped at " + std::to_string(gram_max_n));
  std::vector<double> half(N);
  for (std::size_t n = 0; n < N; ++n) half[n] = 0.5 * kernel_norm_sq_log(t, nodes[n].log_r);

  const auto k = static_cast<Eigen::Index>(N);
  Eigen::MatrixXcd g(k, k);
  parallel_for(N, jobs, [&](std::size_t m) {
    g(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)) = 1.0;
    for (std::size_t n = m + 1; n < N; ++n) {
      const LogComplex v = kernel_eval(t, nodes[n], nodes[m]);
      const std::complex<double> e = v.scaled(half[m] + half[n]);
      if (std::abs(e) > 1.0 + 1e-12)
        throw numeric_error("normalized kernel product exceeds 1 at (" + std::to_string(m) + ", " +
                            std::to_string(n) + ")");
      g(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) = e;
      g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = std::conj(e);
    }
  });
  return GramSection(std::move(g), nodes.digest(), t.digest());
}

inline RieszBounds riesz_bounds(const GramSection& g) {
  return {g.eig_min(), g.eig_max(), g.cond()};
}

// ---------------------------------------------------------------------------

struct BariTerm {
  std::size_t n;
  double S1;
  double S2;
};

/// S1 = sum_{s != n} r_n^{2s} e^{-w_s} / sum_s r_n^{2s} e^{-w_s} and
/// S2 = |1 - r_n^n e^{-w_n/2} / (sum_s ...)^{1/2}|^2.
inline BariTerm bari_proximity(const MomentTable& t, const NodeSequence& nodes, std::size_t n) {
  if (nodes.generator() != NodeGenerator::part_c || nodes.table_digest() != t.digest())
    throw config_error("Bari terms need moment-driven nodes built from the same table");
  if (n == 0 || n >= nodes.size()) throw config_error("Bari index must satisfy 1 <= n < count");
  const double lr = nodes[n].log_r;

  // Terms 2 s log r_n - w_s are concave in s; cut 40 nats past the peak.
  std::vector<double> terms;
  double peak = neg_inf;
  bool done = false;
  for (std::size_t s = 0; s <= t.n_max(); ++s) {
    const double v = 2.0 * static_cast<double>(s) * lr - t[s];
    terms.push_back(v);
    peak = std::max(peak, v);
    if (s > n && v < peak - kernel_tail_nats) {
      done = true;
      break;
    }
  }
  if (!done)
    throw truncation_error("Bari sum for n = " + std::to_string(n) + " runs past the table",
                           2 * t.n_max());
  const double total = log_sum_exp(terms);
  const double own = terms[n];
  double others_max = neg_inf;
  for (std::size_t s = 0; s < terms.size(); ++s)
    if (s != n) others_max = std::max(others_max, terms[s]);
  double acc = 0.0;
  for (std::size_t s = 0; s < terms.size(); ++s)
    if (s != n) acc += std::exp(terms[s] - others_max);
  const double log_s1 = others_max + std::log(acc) - total;
  const double S1 = std::min(1.0, std::exp(log_s1));
  const double p = std::exp(own - total);  // 1 - S1, computed without cancellation
  const double S2 = std::pow(S1 / (1.0 + std::sqrt(p)), 2);
  return {n, S1, S2};
}

// ---------------------------------------------------------------------------

struct TrendThresholds {
  /// stable: cond(N_max) <= stable_factor * min cond over the last half of N_list.
  double stable_factor = 1.5;
  /// degenerating: c_N drops by at least this factor from the first to the last N.
  double degenerate_factor = 10.0;
  double interlace_tol = 1e-9;
};

struct TrendRow {
  std::size_t N;
  double c;
  double C;
  double cond;
};

struct TrendReport {
  std::vector<TrendRow> rows;
  bool stable = false;
  bool degenerating = false;
  bool interlacing_ok = false;
  double c_drop = 0;        // c_first / c_last
  double cond_growth = 0;   // cond(N_max) / min cond over the last half
  TrendThresholds thresholds;

  std::string classification() const {
    if (degenerating) return "degenerating";
    if (stable) return "stable";
    return "unstable";
  }

  std::string to_csv() const {
    std::string s = "N,c_N,C_N,cond\r\n";
    for (const auto& r : rows)
      s += std::to_string(r.N) + ',' + format_g17(r.c) + ',' + format_g17(r.C) + ',' +
           format_g17(r.cond) + "\r\n";
    return s;
  }
};

/// Nested leading sections of the largest section, one row per N.
inline TrendReport basis_trend(const MomentTable& t, const NodeSequence& nodes,
                               const std::vector<std::size_t>& N_list,
                               const TrendThresholds& th = {}, unsigned jobs = 1) {
  if (N_list.empty()) throw config_error("N_list is empty");
  for (std::size_t i = 1; i < N_list.size(); ++i)
    if (N_list[i] <= N_list[i - 1]) throw config_error("N_list must be strictly increasing");
  const GramSection full = gram_section(t, nodes, N_list.back(), jobs);
  TrendReport rep;
  rep.thresholds = th;
  for (std::size_t N : N_list) {
    const auto b = N == full.N() ? riesz_bounds(full) : riesz_bounds(full.leading(N));
    rep.rows.push_back({N, b.c, b.C, b.cond});
  }
  rep.interlacing_ok = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (rep.rows[i].c > rep.rows[i - 1].c + th.interlace_tol) rep.interlacing_ok = false;
    if (rep.rows[i].C < rep.rows[i - 1].C - th.interlace_tol) rep.interlacing_ok = false;
  }
  const std::size_t half = rep.rows.size() / 2;
  double cond_ref = rep.rows[half].cond;
  for (std::size_t i = half; i < rep.rows.size(); ++i)
    cond_ref = std::min(cond_ref, rep.rows[i].cond);
  rep.cond_growth = rep.rows.back().cond / cond_ref;
  const double c_last = rep.rows.back().c;
  rep.c_drop = c_last > 0 ? rep.rows.front().c / c_last : std::numeric_limits<double>::infinity();
  rep.stable = rep.cond_growth <= th.stable_factor;
  rep.degenerating = rep.c_drop >= th.degenerate_factor;
  return rep;
}

}  // namespace fockrb
