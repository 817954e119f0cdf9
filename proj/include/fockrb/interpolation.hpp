#pragma once

// The interpolation operator T a = sum_j a_j ||k_j|| E(z) / (E'(lambda_j)(z - lambda_j)),
// norms by polar quadrature, and the norm-equivalence and decay checks built
// on them.

#include <boost/math/quadrature/gauss.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "fockrb/errors.hpp"
#include "fockrb/kernels.hpp"
#include "fockrb/log_complex.hpp"
#include "fockrb/moments.hpp"
#include "fockrb/node_sequence.hpp"
#include "fockrb/parallel.hpp"
#include "fockrb/products.hpp"
#include "fockrb/weights.hpp"

namespace fockrb {

// ---------------------------------------------------------------------------
// Polar quadrature grid.

struct PolarGridSpec {
  double r_min = 1e-2;
  double r_max = 1e4;
  unsigned panels_per_decade = 8;
  unsigned angles = 128;

  nlohmann::ordered_json to_json() const {
    return {{"r_min", r_min},
            {"r_max", r_max},
            {"panels_per_decade", panels_per_decade},
            {"gauss_order", 16},
            {"angles", angles}};
  }
};

/// Gauss-Legendre (16 points) on [0, r_min] in r, then panels in s = log r with
/// breakpoints every 1/panels_per_decade decade and at r = 1; uniform angles.
/// Stores the radial nodes as log r with log weights for int g(r) r dr.
class PolarGrid {
 public:
  static constexpr unsigned gauss_order = 16;

  explicit PolarGrid(PolarGridSpec spec) : spec_(spec) {
    if (!(spec.r_min > 0) || !(spec.r_max > spec.r_min))
      throw config_error("polar grid needs 0 < r_min < r_max");
    if (spec.r_min > 1.0) throw config_error("polar grid needs r_min <= 1");
    if (spec.panels_per_decade == 0) throw config_error("polar grid needs panels_per_decade >= 1");
    if (spec.angles < 64 || (spec.angles & (spec.angles - 1)) != 0)
      throw config_error("angular count must be a power of two >= 64, got " +
                         std::to_string(spec.angles));

    using gl = boost::math::quadrature::gauss<double, gauss_order>;
    auto add_panel = [&](double a, double b, bool in_log) {
      const double h = 0.5 * (b - a), c = 0.5 * (a + b);
      auto push = [&](double x, double wt) {
        if (in_log) {
          log_r_.push_back(x);
          log_w_.push_back(std::log(wt * h) + 2.0 * x);  // r dr = r^2 ds
        } else {
          log_r_.push_back(std::log(x));
          log_w_.push_back(std::log(wt * h * x));
        }
      };
      const auto& xs = gl::abscissa();
      const auto& ws = gl::weights();
      for (std::size_t k = 0; k < xs.size(); ++k) {
        if (xs[k] == 0.0) {
          push(c, ws[k]);
          continue;
        }
        push(c - h * xs[k], ws[k]);
        push(c + h * xs[k], ws[k]);
      }
    };

    add_panel(0.0, spec.r_min, false);
    const double s0 = std::log(spec.r_min), s1 = std::log(spec.r_max);
    const double step = std::numbers::ln10 / spec.panels_per_decade;
    std::vector<double> bps{s0};
    for (double s = s0 + step; s < s1 - 1e-12; s += step) bps.push_back(s);
    bps.push_back(s1);
    if (s0 < 0.0 && s1 > 0.0) {
      bps.push_back(0.0);
      std::sort(bps.begin(), bps.end());
      bps.erase(std::unique(bps.begin(), bps.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                bps.end());
    }
    for (std::size_t i = 1; i < bps.size(); ++i) add_panel(bps[i - 1], bps[i], true);

    // Sort radial nodes so consumers can stream outward.
    std::vector<std::size_t> idx(log_r_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return log_r_[a] < log_r_[b]; });
    std::vector<double> lr, lw;
    for (auto i : idx) {
      lr.push_back(log_r_[i]);
      lw.push_back(log_w_[i]);
    }
    log_r_ = std::move(lr);
    log_w_ = std::move(lw);
    log_angle_w_ = std::log(two_pi / spec.angles);
  }

  const PolarGridSpec& spec() const noexcept { return spec_; }
  std::size_t radial_count() const noexcept { return log_r_.size(); }
  std::size_t angle_count() const noexcept { return spec_.angles; }
  std::size_t size() const noexcept { return radial_count() * angle_count(); }
  double log_r(std::size_t i) const { return log_r_[i]; }
  double log_weight(std::size_t i) const { return log_w_[i] + log_angle_w_; }
  double theta(std::size_t j) const { return two_pi * static_cast<double>(j) / spec_.angles; }
  Polar point(std::size_t i, std::size_t j) const { return {log_r_[i], wrap_phase(theta(j))}; }
  /// True for radial nodes in the outermost decade.
  bool outer(std::size_t i) const { return log_r_[i] > std::log(spec_.r_max) - std::numbers::ln10; }

 private:
  PolarGridSpec spec_;
  std::vector<double> log_r_;
  std::vector<double> log_w_;
  double log_angle_w_ = 0;
};

/// Largest share of the mass allowed in the outermost decade.
inline constexpr double outer_decade_share = 1e-6;

namespace detail {

inline void check_outer_share(double total, double outer, const PolarGrid& grid,
                              const std::string& what) {
  if (!(total > 0)) return;
  const double share = outer / total;
  if (share >= outer_decade_share) {
    // Tails of the functions handled here decay at least like 1/R.
    const double factor = std::max(10.0, 10.0 * share / outer_decade_share);
    throw range_error(what + ": outermost decade holds " + format_g17(share) +
                          " of the mass; extend r_max",
                      grid.spec().r_max * factor);
  }
}

}  // namespace detail

using PolarFunction = std::function<LogComplex(const Polar&)>;

/// log of int |f|^2 e^{-2 phi} dm.
inline double norm_quadrature(const RadialWeight& w, const PolarFunction& f, const PolarGrid& grid,
                              unsigned jobs = 1) {
  const std::size_t R = grid.radial_count(), M = grid.angle_count();
  std::vector<double> ring(R, neg_inf);  // log of each ring's contribution
  parallel_for(R, jobs, [&](std::size_t i) {
    const double base = grid.log_weight(i) - 2.0 * w.phi_at_log(grid.log_r(i));
    std::vector<double> v(M);
    for (std::size_t j = 0; j < M; ++j) v[j] = 2.0 * f(grid.point(i, j)).logmag() + base;
    ring[i] = log_sum_exp(v);
  });
  const double total = log_sum_exp(ring);
  double outer = neg_inf;
  for (std::size_t i = 0; i < R; ++i)
    if (grid.outer(i)) outer = log_add_exp(outer, ring[i]);
  if (total == neg_inf) return total;
  detail::check_outer_share(1.0, std::exp(outer - total), grid, "norm quadrature");
  return total;
}

/// <f, g> = int f conj(g) e^{-2 phi} dm.
inline LogComplex inner_quadrature(const RadialWeight& w, const PolarFunction& f,
                                   const PolarFunction& g, const PolarGrid& grid) {
  LogSum sum;
  for (std::size_t i = 0; i < grid.radial_count(); ++i) {
    const double base = grid.log_weight(i) - 2.0 * w.phi_at_log(grid.log_r(i));
    for (std::size_t j = 0; j < grid.angle_count(); ++j) {
      const Polar z = grid.point(i, j);
      sum.add(f(z) * conj(g(z)) * LogComplex{base, 0.0});
    }
  }
  return sum.value();
}

// ---------------------------------------------------------------------------
// Lagrange basis.

struct InterpolationData {
  std::map<std::size_t, std::complex<double>> a;
  std::string nodes_digest;
  std::string table_digest;
};

/// Relative distance |z - lambda| / |lambda| below which the removable
/// singularity is evaluated through the deleted product.
inline constexpr double near_node_rel = 1e-6;

class LagrangeBasis {
 public:
  /// Basis functions for the first `support` nodes.
  LagrangeBasis(const MomentTable& t, const NodeSequence& nodes, std::size_t support,
                double eps = 1e-12)
      : nodes_(nodes), eps_(eps), nodes_digest_(nodes.digest()), table_digest_(t.digest()) {
    if (support == 0 || support > nodes.size())
      throw config_error("support size must lie in 1..node count");
    for (std::size_t j = 0; j < support; ++j) {
      half_norm_.push_back(0.5 * kernel_norm_sq_log(t, nodes[j].log_r));
      deriv_.push_back(product_derivative_at_node(nodes, j, eps).value);
    }
  }

  std::size_t support() const noexcept { return deriv_.size(); }
  const NodeSequence& nodes() const noexcept { return nodes_; }
  double log_kernel_norm(std::size_t j) const { return half_norm_[j]; }
  const LogComplex& derivative(std::size_t j) const { return deriv_[j]; }

  LogComplex E(const Polar& z) const { return product_eval(nodes_, z, eps_).value; }

  /// E_j(z) given E(z).
  LogComplex basis(std::size_t j, const Polar& z, const LogComplex& Ez) const {
    const Polar& lam = nodes_[j];
    const LogComplex scale = LogComplex{half_norm_[j], 0.0} / deriv_[j];
    const double near = lam.is_origin() ? neg_inf : lam.log_r + std::log(near_node_rel);
    const double ld = polar_log_distance(z, lam);
    if (ld < near || (lam.is_origin() && z.is_origin())) {
      // E(z)/(z - lambda) = -D_j(z)/lambda, or D_j(z) for a node at the origin.
      LogComplex d = deleted_product(nodes_, j, z, eps_).value;
      if (!lam.is_origin()) d = d * LogComplex{-lam.log_r, std::numbers::pi - lam.theta};
      return scale * d;
    }
    if (Ez.is_zero()) return {};
    return scale * Ez / (z.as_log_complex() - lam.as_log_complex());
  }

  LogComplex basis(std::size_t j, const Polar& z) const { return basis(j, z, E(z)); }

  void check(const InterpolationData& d) const {
    if (!d.nodes_digest.empty() && d.nodes_digest != nodes_digest_)
      throw config_error("interpolation data refers to a different node sequence");
    if (!d.table_digest.empty() && d.table_digest != table_digest_)
      throw config_error("interpolation data refers to a different moment table");
    for (const auto& [j, v] : d.a)
      if (j >= support())
        throw config_error("coefficient index " + std::to_string(j) + " outside the support");
  }

  LogComplex eval(const InterpolationData& d, const Polar& z) const {
    check(d);
    const LogComplex Ez = E(z);
    LogSum sum;
    for (const auto& [j, v] : d.a) sum.add(LogComplex::from_complex(v) * basis(j, z, Ez));
    return sum.value();
  }

  const std::string& nodes_digest() const noexcept { return nodes_digest_; }
  const std::string& table_digest() const noexcept { return table_digest_; }

 private:
  const NodeSequence& nodes_;
  double eps_;
  std::vector<double> half_norm_;
  std::vector<LogComplex> deriv_;
  std::string nodes_digest_, table_digest_;
};

/// T a at z, for data supported on the first nodes.
inline LogComplex lagrange_eval(const MomentTable& t, const NodeSequence& nodes,
                                const InterpolationData& data, const Polar& z) {
  std::size_t support = 1;
  for (const auto& [j, v] : data.a) support = std::max(support, j + 1);
  return LagrangeBasis(t, nodes, support).eval(data, z);
}

// ---------------------------------------------------------------------------
// Gram matrix of the basis functions by quadrature.

struct BasisGram {
  Eigen::MatrixXcd G;  // <E_m, E_n>
  std::size_t first = 0;
};

/// <E_m, E_n> for first <= m, n < first + count, one pass over the grid.
inline BasisGram basis_gram(const RadialWeight& w, const LagrangeBasis& b, const PolarGrid& grid,
                            std::size_t first, std::size_t count, unsigned jobs = 1) {
  if (count == 0 || first + count > b.support()) throw config_error("basis range outside support");
  const std::size_t R = grid.radial_count(), M = grid.angle_count();
  const auto k = static_cast<Eigen::Index>(count);
  std::vector<Eigen::MatrixXcd> ring(R, Eigen::MatrixXcd::Zero(k, k));
  parallel_for(R, jobs, [&](std::size_t i) {
    const double base = 0.5 * grid.log_weight(i) - w.phi_at_log(grid.log_r(i));
    Eigen::VectorXcd v(k);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(k, k);
    for (std::size_t j = 0; j < M; ++j) {
      const Polar z = grid.point(i, j);
      const LogComplex Ez = b.E(z);
      for (std::size_t m = 0; m < count; ++m)
        v(static_cast<Eigen::Index>(m)) = b.basis(first + m, z, Ez).scaled(-base);
      acc.noalias() += v * v.adjoint();
    }
    ring[i] = std::move(acc);
  });
  Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(k, k), outer = G;
  for (std::size_t i = 0; i < R; ++i) {
    G += ring[i];
    if (grid.outer(i)) outer += ring[i];
  }
  for (Eigen::Index m = 0; m < k; ++m)
    detail::check_outer_share(G(m, m).real(), outer(m, m).real(), grid,
                              "basis function " + std::to_string(first + m));
  // v v^H accumulates <E_m, E_n> at (m, n).
  return {G, first};
}

// ---------------------------------------------------------------------------

struct EquivalenceReport {
  std::vector<double> ratio;  // ||T a||^2 / sum |a|^2 per trial
  std::vector<double> singleton;  // ||E_j||^2 per support node
  double c = 0, C = 0;
  double max_resample_error = 0;
  double spread() const { return C / c; }

  nlohmann::ordered_json to_json() const {
    return {{"trials", ratio.size()},
            {"c", c},
            {"C", C},
            {"C_over_c", spread()},
            {"max_resample_error", max_resample_error},
            {"singleton_norm_sq", singleton}};
  }
};

/// Complex Gaussian coefficients on `sparsity` distinct indices, unit l2 norm.
/// Uses its own mapping from 64-bit draws so the data are platform independent.
inline InterpolationData random_sparse_data(std::mt19937_64& gen, std::size_t support,
                                            std::size_t sparsity) {
  if (sparsity == 0 || sparsity > support)
    throw config_error("sparsity must lie in 1..support");
  auto uniform = [&] { return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53; };
  InterpolationData d;
  while (d.a.size() < sparsity) {
    const auto j = static_cast<std::size_t>(gen() % support);
    if (d.a.count(j)) continue;
    const double rad = std::sqrt(-2.0 * std::log(uniform()));
    const double ang = two_pi * uniform();
    d.a[j] = std::polar(rad, ang);
  }
  double norm = 0;
  for (const auto& [j, v] : d.a) norm += std::norm(v);
  for (auto& [j, v] : d.a) v /= std::sqrt(norm);
  return d;
}

/// ||T a||^2 over random unit data, plus re-sampling of T a at the support.
inline EquivalenceReport verify_norm_equivalence(const MomentTable& t, const NodeSequence& nodes,
                              const RadialWeight& w, const PolarGrid& grid, std::size_t support,
                              std::size_t trials, std::size_t sparsity, std::uint64_t seed,
                              unsigned jobs = 1) {
  if (nodes.generator() == NodeGenerator::custom)
    throw config_error("norm equivalence check needs Part B or Part C nodes");
  if (nodes.generator() == NodeGenerator::part_c && nodes.table_digest() != t.digest())
    throw config_error("Part C nodes were built from a different table");
  if (trials == 0) throw config_error("trials must be >= 1");
  const LagrangeBasis b(t, nodes, support);
  const BasisGram g = basis_gram(w, b, grid, 0, support, jobs);

  EquivalenceReport rep;
  for (std::size_t j = 0; j < support; ++j)
    rep.singleton.push_back(g.G(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)).real());

  std::mt19937_64 gen(seed);
  rep.c = std::numeric_limits<double>::infinity();
  rep.C = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    InterpolationData d = random_sparse_data(gen, support, sparsity);
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(support));
    for (const auto& [j, v] : d.a) a(static_cast<Eigen::Index>(j)) = v;
    // ||sum a_j E_j||^2 = sum a_m conj(a_n) <E_m, E_n>.
    const double r = (a.transpose() * g.G * a.conjugate())(0, 0).real();
    rep.ratio.push_back(r);
    rep.c = std::min(rep.c, r);
    rep.C = std::max(rep.C, r);
    for (const auto& [k, v] : d.a) {
      const LogComplex f = b.eval(d, nodes[k]);
      const std::complex<double> sample = f.scaled(b.log_kernel_norm(k));
      rep.max_resample_error = std::max(rep.max_resample_error, std::abs(sample - v) / std::abs(v));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

struct DecayRow {
  std::size_t m, n;
  double log_abs_inner;
};

struct DecayReport {
  std::vector<DecayRow> rows;
  double c_hat = 0;     // -slope of log|<E_m, E_n>| against |n - m|
  double max_norm = 0;  // max ||E_m||
  PolarGridSpec grid;

  std::string to_csv() const {
    std::string s = "m,n,log_abs_inner\r\n";
    for (const auto& r : rows)
      s += std::to_string(r.m) + ',' + std::to_string(r.n) + ',' + format_g17(r.log_abs_inner) +
           "\r\n";
    return s;
  }

  nlohmann::ordered_json to_json() const {
    return {{"c_hat", c_hat}, {"max_norm", max_norm}, {"grid", grid.to_json()}};
  }
};

/// <E_m, E_n> for m, n in [first, last] and the least-squares decay rate.
inline DecayReport verify_basis_decay(const MomentTable& t, const NodeSequence& nodes,
                                    const RadialWeight& w, const PolarGrid& grid, std::size_t first,
                                    std::size_t last, unsigned jobs = 1) {
  if (w.kind() != RadialWeight::Kind::log_power || w.param() != 2.0)
    throw config_error("decay check is defined for the log-power weight with beta = 2");
  if (nodes.generator() != NodeGenerator::part_b) throw config_error("decay check needs Part B nodes");
  if (last < first || last >= nodes.size()) throw config_error("m range outside the node count");
  const std::size_t count = last - first + 1;
  const LagrangeBasis b(t, nodes, last + 1);
  const BasisGram g = basis_gram(w, b, grid, first, count, jobs);

  DecayReport rep;
  rep.grid = grid.spec();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t np = 0;
  for (std::size_t m = 0; m < count; ++m) {
    rep.max_norm = std::max(rep.max_norm,
                            std::sqrt(g.G(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)).real()));
    for (std::size_t n = 0; n < count; ++n) {
      const double v =
          std::log(std::abs(g.G(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n))));
      rep.rows.push_back({first + m, first + n, v});
      if (m == n || !std::isfinite(v)) continue;
      const double x = std::abs(static_cast<double>(n) - static_cast<double>(m));
      sx += x;
      sy += v;
      sxx += x * x;
      sxy += x * v;
      ++np;
    }
  }
  if (np >= 2) {
    const double den = static_cast<double>(np) * sxx - sx * sx;
    if (den > 0) rep.c_hat = -(static_cast<double>(np) * sxy - sx * sy) / den;
  }
  return rep;
}

}  // namespace fockrb
