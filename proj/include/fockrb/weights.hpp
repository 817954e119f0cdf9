#pragma once

// Radial weights phi(|z|), their derivatives, and the local scale
// rho = (Laplacian phi)^{-1/2}.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fockrb/digest.hpp"
#include "fockrb/errors.hpp"
#include "fockrb/node_sequence.hpp"
#include "fockrb/polar.hpp"

namespace fockrb {

/// psi(s) = phi(e^s) and its first two s-derivatives. psi' = r phi'(r) and
/// psi'' = r^2 Laplacian(phi), so everything the library needs is available
/// without forming r, which overflows for the moment-driven node sequences.
struct LogDerivs {
  double psi;
  double dpsi;
  double d2psi;
};

class RadialWeight {
 public:
  enum class Kind { log_power, power, custom };
  using Fn = std::function<double(double)>;

  /// Half-width of the excluded band around r = 1 for log-power weights.
  static constexpr double kink_band = 1e-8;

  /// phi(r) = (log+ r)^beta, beta > 1.
  static RadialWeight log_power(double beta) {
    if (!(beta > 1.0) || !std::isfinite(beta))
      throw domain_error("log-power weight requires beta > 1, got " + format_g17(beta));
    return RadialWeight(Kind::log_power, beta);
  }

  /// phi(r) = r^alpha, alpha > 0.
  static RadialWeight power(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw domain_error("power weight requires alpha > 0, got " + format_g17(alpha));
    return RadialWeight(Kind::power, alpha);
  }

  /// Library-only escape hatch: phi and its first two derivatives in r.
  static RadialWeight custom(std::string name, Fn phi, Fn dphi, Fn d2phi) {
    RadialWeight w(Kind::custom, 0.0);
    w.custom_ = std::make_shared<Custom>(Custom{std::move(name), std::move(phi), std::move(dphi),
                                                std::move(d2phi)});
    return w;
  }

  /// From the config spelling `logpower` / `power`.
  static RadialWeight from_spec(const std::string& kind, double param) {
    if (kind == "logpower") return log_power(param);
    if (kind == "power") return power(param);
    throw config_error("unknown weight.kind '" + kind + "' (expected logpower or power)");
  }

  Kind kind() const noexcept { return kind_; }
  double param() const noexcept { return param_; }

  std::string kind_name() const {
    switch (kind_) {
      case Kind::log_power: return "logpower";
      case Kind::power: return "power";
      case Kind::custom: return "custom:" + custom_->name;
    }
    return "?";
  }

  std::string descriptor() const { return kind_name() + ":" + format_g17(param_); }

  double phi(double r) const {
    check_radius(r);
    switch (kind_) {
      case Kind::log_power: return r <= 1.0 ? 0.0 : std::pow(std::log(r), param_);
      case Kind::power: return std::pow(r, param_);
      case Kind::custom: return custom_->phi(r);
    }
    return 0.0;
  }

  double dphi(double r) const {
    check_radius(r);
    switch (kind_) {
      case Kind::log_power:
        return r <= 1.0 ? 0.0 : param_ * std::pow(std::log(r), param_ - 1.0) / r;
      case Kind::power: return param_ * std::pow(r, param_ - 1.0);
      case Kind::custom: return custom_->dphi(r);
    }
    return 0.0;
  }

  double d2phi(double r) const {
    check_radius(r);
    switch (kind_) {
      case Kind::log_power: {
        if (r <= 1.0) return 0.0;
        const double l = std::log(r);
        const double b = param_;
        return (b * (b - 1.0) * std::pow(l, b - 2.0) - b * std::pow(l, b - 1.0)) / (r * r);
      }
      case Kind::power: return param_ * (param_ - 1.0) * std::pow(r, param_ - 2.0);
      case Kind::custom: return custom_->d2phi(r);
    }
    return 0.0;
  }

  /// phi(e^s), valid for any real s.
  double phi_at_log(double s) const { return log_derivs(s).psi; }

  LogDerivs log_derivs(double s) const {
    switch (kind_) {
      case Kind::log_power: {
        if (s <= 0.0) return {0.0, 0.0, 0.0};
        const double b = param_;
        const double sb2 = std::pow(s, b - 2.0);
        return {sb2 * s * s, b * sb2 * s, b * (b - 1.0) * sb2};
      }
      case Kind::power: {
        const double e = std::exp(param_ * s);
        return {e, param_ * e, param_ * param_ * e};
      }
      case Kind::custom: {
        const double r = std::exp(s);
        const double d1 = r * custom_->dphi(r);
        return {custom_->phi(r), d1, d1 + r * r * custom_->d2phi(r)};
      }
    }
    return {};
  }

  /// phi'(r)/r + phi''(r).
  double laplacian(double r) const {
    check_radius(r);
    if (r == 0.0) throw domain_error("Laplacian evaluated at r = 0");
    if (kind_ == Kind::log_power) {
      if (r <= 1.0) return 0.0;
      const double b = param_;
      return b * (b - 1.0) * std::pow(std::log(r), b - 2.0) / (r * r);
    }
    if (kind_ == Kind::power) return param_ * param_ * std::pow(r, param_ - 2.0);
    return dphi(r) / r + d2phi(r);
  }

  /// rho(r) = (phi'(r)/r + phi''(r))^{-1/2}.
  double rho(double r) const {
    if (!(r > 0.0)) throw domain_error("rho requires r > 0, got " + format_g17(r));
    check_scale_defined(std::log(r));
    const double lap = laplacian(r);
    if (!(lap > 0.0))
      throw singular_scale_error("Laplacian of phi is " + format_g17(lap) + " <= 0 at r = " +
                                 format_g17(r));
    return 1.0 / std::sqrt(lap);
  }

  /// log rho(e^s); finite where rho itself would overflow.
  double log_rho_at_log(double s) const {
    check_scale_defined(s);
    const double d2 = log_derivs(s).d2psi;
    if (!(d2 > 0.0))
      throw singular_scale_error("Laplacian of phi is <= 0 at log r = " + format_g17(s));
    return s - 0.5 * std::log(d2);
  }

 private:
  struct Custom {
    std::string name;
    Fn phi, dphi, d2phi;
  };

  RadialWeight(Kind kind, double param) : kind_(kind), param_(param) {}

  static void check_radius(double r) {
    if (!(r >= 0.0)) throw domain_error("weight evaluated at negative radius " + format_g17(r));
  }

  void check_scale_defined(double s) const {
    if (kind_ != Kind::log_power) return;
    if (s < 0.0)
      throw undefined_scale_error("rho undefined for r < 1 (phi vanishes identically there)");
    if (std::abs(std::expm1(s)) <= kink_band)
      throw undefined_scale_error("rho undefined in the excluded band around r = 1");
  }

  Kind kind_;
  double param_;
  std::shared_ptr<const Custom> custom_;
};

// ---------------------------------------------------------------------------
// Regularity checks on a geometric grid.

struct RegularityOptions {
  double subharmonic_tol = 1e-12;
  /// Band for rho(2r)/rho(r); the implicit constants are not quantified anywhere.
  double doubling_lo = 0.125;
  double doubling_hi = 8.0;
  /// A "-> 0" trend must end below this value in the final decade ...
  double trend_final_max = 0.5;
  /// ... and fall by at least this fraction from the first decade, unless it is
  /// already below trend_zero.
  double trend_min_drop = 0.05;
  double trend_zero = 1e-9;
};

struct Witness {
  double r;
  double value;
};

struct RegularityReport {
  bool subharmonic_ok = false;
  bool rho_inf_positive = false;
  bool rho_little_o_ok = false;
  bool rho_slowly_varying_ok = false;
  bool rho_doubling_ok = false;
  std::vector<Witness> subharmonic_witness;
  std::vector<Witness> rho_inf_witness;
  std::vector<Witness> rho_little_o_witness;      // per-decade max of rho(r)/r
  std::vector<Witness> rho_slowly_varying_witness;  // per-decade max of |rho(r+rho)/rho - 1|
  std::vector<Witness> rho_doubling_witness;      // extreme rho(2r)/rho(r)

  bool all_ok() const {
    return subharmonic_ok && rho_inf_positive && rho_little_o_ok && rho_slowly_varying_ok &&
           rho_doubling_ok;
  }
};

/// r_min * 10^{k / points_per_decade}, k = 0 .. decades * points_per_decade.
inline std::vector<double> geometric_grid(double r_min, double decades, unsigned points_per_decade) {
  if (!(r_min > 0) || !(decades > 0) || points_per_decade == 0)
    throw config_error("geometric grid needs r_min > 0, decades > 0, points_per_decade > 0");
  const auto steps = static_cast<std::size_t>(std::llround(decades * points_per_decade));
  std::vector<double> out(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k)
    out[k] = r_min * std::pow(10.0, static_cast<double>(k) / points_per_decade);
  return out;
}

namespace detail {

/// Group grid indices by decade relative to the first grid point.
inline std::vector<std::vector<std::size_t>> decade_buckets(const std::vector<double>& r) {
  std::vector<std::vector<std::size_t>> out;
  const double base = std::log10(r.front());
  for (std::size_t i = 0; i < r.size(); ++i) {
    auto d = static_cast<std::size_t>(std::floor(std::log10(r[i]) - base + 1e-12));
    if (out.size() <= d) out.resize(d + 1);
    out[d].push_back(i);
  }
  // A lone endpoint at exactly k decades joins the previous bucket.
  if (out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back().front());
    out.pop_back();
  }
  return out;
}

/// Checks that per-decade maxima tend to zero: monotone, ending small, and
/// actually decreasing (or already negligible).
inline bool trends_to_zero(const std::vector<Witness>& per_decade, const RegularityOptions& o) {
  if (per_decade.size() < 2) return false;
  const double first = per_decade.front().value;
  const double last = per_decade.back().value;
  if (!(last <= o.trend_final_max)) return false;
  if (last <= o.trend_zero) return true;
  for (std::size_t k = 1; k < per_decade.size(); ++k)
    if (per_decade[k].value > per_decade[k - 1].value * (1 + 1e-9)) return false;
  return last <= (1.0 - o.trend_min_drop) * first;
}

}  // namespace detail

/// Evaluates the scale hypotheses (inf rho > 0, rho = o(r), rho(r + rho) ~ rho,
/// rho(2r) ~ rho(r)) as trend checks over a geometric grid.
inline RegularityReport check_regularity(const RadialWeight& w, const std::vector<double>& r_grid,
                                         const RegularityOptions& opt = {}) {
  if (r_grid.size() < 16) throw config_error("regularity grid needs at least 16 points");
  if (!std::is_sorted(r_grid.begin(), r_grid.end()) || !(r_grid.front() > 0))
    throw config_error("regularity grid must be positive and increasing");
  if (std::log10(r_grid.back() / r_grid.front()) < 4.0 - 1e-9)
    throw config_error("regularity grid must span at least 4 decades");

  RegularityReport rep;
  const auto buckets = detail::decade_buckets(r_grid);

  // Subharmonicity: the Laplacian may not dip below -tol.
  rep.subharmonic_ok = true;
  Witness worst_lap{r_grid.front(), std::numeric_limits<double>::infinity()};
  for (double r : r_grid) {
    const double lap = w.laplacian(r);
    if (lap < worst_lap.value) worst_lap = {r, lap};
    if (lap < -opt.subharmonic_tol) rep.subharmonic_ok = false;
  }
  rep.subharmonic_witness.push_back(worst_lap);

  std::vector<double> rho(r_grid.size());
  for (std::size_t i = 0; i < r_grid.size(); ++i) rho[i] = w.rho(r_grid[i]);

  // inf rho > 0: positive everywhere and not decaying toward zero.
  auto bucket_min = [&](const std::vector<std::size_t>& b) {
    Witness m{r_grid[b.front()], rho[b.front()]};
    for (auto i : b)
      if (rho[i] < m.value) m = {r_grid[i], rho[i]};
    return m;
  };
  const Witness first_min = bucket_min(buckets.front());
  const Witness last_min = bucket_min(buckets.back());
  const double global_min = *std::min_element(rho.begin(), rho.end());
  rep.rho_inf_witness = {first_min, last_min};
  rep.rho_inf_positive = global_min > 0 && last_min.value >= 0.5 * first_min.value;

  auto per_decade_max = [&](auto&& value_at) {
    std::vector<Witness> out;
    for (const auto& b : buckets) {
      Witness m{r_grid[b.front()], value_at(b.front())};
      for (auto i : b) {
        const double v = value_at(i);
        if (v > m.value) m = {r_grid[i], v};
      }
      out.push_back(m);
    }
    return out;
  };

  rep.rho_little_o_witness = per_decade_max([&](std::size_t i) { return rho[i] / r_grid[i]; });
  rep.rho_little_o_ok = detail::trends_to_zero(rep.rho_little_o_witness, opt);

  rep.rho_slowly_varying_witness = per_decade_max([&](std::size_t i) {
    return std::abs(w.rho(r_grid[i] + rho[i]) / rho[i] - 1.0);
  });
  rep.rho_slowly_varying_ok = detail::trends_to_zero(rep.rho_slowly_varying_witness, opt);

  rep.rho_doubling_ok = true;
  Witness lo{r_grid.front(), std::numeric_limits<double>::infinity()};
  Witness hi{r_grid.front(), -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    const double q = w.rho(2.0 * r_grid[i]) / rho[i];
    if (q < lo.value) lo = {r_grid[i], q};
    if (q > hi.value) hi = {r_grid[i], q};
    if (q < opt.doubling_lo || q > opt.doubling_hi) rep.rho_doubling_ok = false;
  }
  rep.rho_doubling_witness = {lo, hi};
  return rep;
}

// ---------------------------------------------------------------------------
// Separation and density of a node set relative to rho.

struct SeparationDensityReport {
  bool separation_ok = false;
  bool density_ok = false;
  /// dist(lambda, others) / rho(lambda), per node (NaN where rho is undefined).
  std::vector<double> separation_ratio;
  /// dist(z, nodes) / rho(z), per probe (NaN where rho is undefined).
  std::vector<double> density_ratio;
  double min_separation_ratio = std::numeric_limits<double>::infinity();
  double max_density_ratio = 0.0;
  std::size_t min_separation_index = 0;
  std::size_t max_density_index = 0;
  std::size_t nodes_skipped = 0;
  std::size_t probes_skipped = 0;
};

inline SeparationDensityReport separation_density_check(const RadialWeight& w,
                                                        const NodeSequence& nodes, double c_sep,
                                                        double c_dens,
                                                        const std::vector<Polar>& probes) {
  SeparationDensityReport rep;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto log_rho = [&](const Polar& p) -> std::optional<double> {
    if (p.is_origin()) return std::nullopt;
    try {
      return w.log_rho_at_log(p.log_r);
    } catch (const undefined_scale_error&) {
      return std::nullopt;
    } catch (const singular_scale_error&) {
      return std::nullopt;
    }
  };

  rep.separation_ratio.assign(nodes.size(), nan);
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const auto lr = log_rho(nodes[n]);
    if (!lr) {
      ++rep.nodes_skipped;
      continue;
    }
    double ld = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < nodes.size(); ++m)
      if (m != n) ld = std::min(ld, polar_log_distance(nodes[n], nodes[m]));
    const double ratio = std::exp(ld - *lr);
    rep.separation_ratio[n] = ratio;
    if (ratio < rep.min_separation_ratio) {
      rep.min_separation_ratio = ratio;
      rep.min_separation_index = n;
    }
  }

  rep.density_ratio.assign(probes.size(), nan);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto lr = log_rho(probes[i]);
    if (!lr) {
      ++rep.probes_skipped;
      continue;
    }
    const double ratio = std::exp(dist_to_nodes(nodes, probes[i]).log_distance - *lr);
    rep.density_ratio[i] = ratio;
    if (ratio > rep.max_density_ratio) {
      rep.max_density_ratio = ratio;
      rep.max_density_index = i;
    }
  }

  rep.separation_ok = rep.nodes_skipped < nodes.size() && rep.min_separation_ratio >= c_sep;
  rep.density_ok = rep.probes_skipped < probes.size() && rep.max_density_ratio <= c_dens;
  return rep;
}

}  // namespace fockrb
