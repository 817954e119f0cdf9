#pragma once

// Moments w_n = log ||z^n||^2 = log( 2 pi int_0^inf r^{2n+1} e^{-2 phi(r)} dr ).
//
// e^{w_n} leaves the double range around n = 30 for (log r)^2 already, so the
// integral is taken in s = log r on the exponent
//     g(s) = (2n+2) s - 2 phi(e^s),
// rescaled by its maximum. The peak is located by bisection on g', then
// Gauss-Kronrod panels march outward until the exponent sits 60 nats below the
// peak on both sides.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fockrb/digest.hpp"
#include "fockrb/errors.hpp"
#include "fockrb/log_complex.hpp"
#include "fockrb/parallel.hpp"
#include "fockrb/weights.hpp"

namespace fockrb {

namespace detail {

struct MomentExponent {
  const RadialWeight& weight;
  double slope;  // 2n + 2

  double g(double s) const { return slope * s - 2.0 * weight.log_derivs(s).psi; }
  double dg(double s) const { return slope - 2.0 * weight.log_derivs(s).dpsi; }
  double d2g(double s) const { return -2.0 * weight.log_derivs(s).d2psi; }
};

inline double bisect_peak(const MomentExponent& e, double lo, double hi) {
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (e.dg(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Location of the maximum of g; s_floor is the left end of the domain.
inline double locate_peak(const MomentExponent& e, double s_floor) {
  constexpr double reach = 1e7;
  double hi = std::max(1.0, s_floor + 1.0);
  while (!(e.dg(hi) < 0)) {
    if (hi > reach)
      throw divergence_error("moment integrand does not decay: g'(s) > 0 up to s = " +
                             format_g17(hi));
    hi = 2.0 * hi + 1.0;
  }
  double lo;
  if (std::isfinite(s_floor)) {
    lo = s_floor;
  } else {
    lo = std::min(-1.0, hi - 2.0);
    while (!(e.dg(lo) > 0)) {
      if (lo < -reach)
        throw numeric_error("peak search failed to bracket: g'(s) <= 0 down to s = " +
                            format_g17(lo) + " (slope " + format_g17(e.slope) + ")");
      lo = 2.0 * lo - 1.0;
    }
  }
  if (e.dg(lo) <= 0) return lo;  // boundary maximum
  return bisect_peak(e, lo, hi);
}

}  // namespace detail

inline constexpr const char* moment_method_id = "gk15-panel-march-v1";

/// w_n by log-domain panel quadrature; relative error of e^{w_n} about tol.
inline double compute_wn(const RadialWeight& w, std::size_t n, double tol) {
  if (!(tol > 1e-14 && tol < 1e-2))
    throw domain_error("moment tolerance must lie in (1e-14, 1e-2), got " + format_g17(tol));

  const detail::MomentExponent e{w, 2.0 * static_cast<double>(n) + 2.0};
  // For log-power weights phi vanishes on r < 1: that piece is 2 pi / (2n+2)
  // in closed form and the quadrature starts at s = 0.
  const bool split = w.kind() == RadialWeight::Kind::log_power;
  const double s_floor = split ? 0.0 : neg_inf;

  const double peak = detail::locate_peak(e, s_floor);
  const double gmax = e.g(peak);
  if (!std::isfinite(gmax)) throw numeric_error("moment exponent not finite at its peak");

  const double curv = -e.d2g(peak);
  const double sigma = curv > 0 ? std::clamp(1.0 / std::sqrt(curv), 1e-6, 1e6) : 1.0;
  const double drop = 60.0;
  // Kronrod error estimates are pessimistic and cannot be pushed much below
  // 1e-12 without exhausting the recursion; the achieved accuracy is far better.
  const double panel_tol = std::max(tol * 1e-1, 1e-12);

  auto integrand = [&](double s) { return std::exp(e.g(s) - gmax); };
  auto panel = [&](double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, a, b, 10,
                                                                         panel_tol);
  };

  double total = 0.0;
  constexpr int max_panels = 20000;
  // Rightward march.
  {
    double x = peak, h = sigma;
    for (int k = 0;; ++k) {
      if (k == max_panels) throw numeric_error("moment quadrature did not reach the tail");
      const double part = panel(x, x + h);
      total += part;
      x += h;
      if (e.g(x) - gmax <= -drop && part <= tol * 1e-3 * total) break;
      h *= 1.25;
    }
  }
  // Leftward march, clipped at the domain floor.
  {
    double x = peak, h = sigma;
    for (int k = 0; x > s_floor; ++k) {
      if (k == max_panels) throw numeric_error("moment quadrature did not reach the tail");
      const double a = std::max(x - h, s_floor);
      const double part = panel(a, x);
      total += part;
      x = a;
      if (e.g(x) - gmax <= -drop && part <= tol * 1e-3 * total) break;
      h *= 1.25;
    }
  }

  if (!(total > 0) || !std::isfinite(total))
    throw numeric_error("moment quadrature produced a non-positive total");
  double wn = std::log(two_pi) + gmax + std::log(total);
  if (split) wn = log_add_exp(wn, std::log(two_pi / e.slope));
  return wn;
}

/// Cached moment sequence w_0 .. w_{n_max}. Immutable after construction.
class MomentTable {
 public:
  static constexpr int format_version = 1;

  MomentTable(RadialWeight weight, std::vector<double> w, double tol,
              std::string method = moment_method_id)
      : weight_(std::move(weight)), w_(std::move(w)), tol_(tol), method_(std::move(method)) {
    if (w_.empty()) throw config_error("moment table must hold at least w_0");
    for (std::size_t n = 1; n + 1 < w_.size(); ++n) {
      const double d2 = w_[n - 1] + w_[n + 1] - 2.0 * w_[n];
      if (d2 < -1e-8)
        throw numeric_error("moment table is not log-convex at n = " + std::to_string(n) +
                            " (second difference " + format_g17(d2) + ")");
    }
    digest_ = sha256_hex(render_body(false));
  }

  const RadialWeight& weight() const noexcept { return weight_; }
  std::size_t n_max() const noexcept { return w_.size() - 1; }
  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t n) const { return w_[n]; }
  std::span<const double> values() const noexcept { return w_; }
  double tol() const noexcept { return tol_; }
  const std::string& method() const noexcept { return method_; }
  const std::string& digest() const noexcept { return digest_; }

  /// Cache file text: header lines, then `n w_n` rows at 17 significant digits.
  std::string render() const { return render_body(true); }

  struct Parsed;
  /// Parse cache text. With verify, a digest mismatch throws numeric_error.
  static MomentTable parse(std::string_view text, bool verify = true);
  static Parsed parse_unverified(std::string_view text);

 private:
  std::string render_body(bool with_digest) const {
    std::ostringstream os;
    os << "version " << format_version << '\n';
    os << "weight.kind " << weight_.kind_name() << '\n';
    os << "weight.param " << format_g17(weight_.param()) << '\n';
    os << "n_max " << n_max() << '\n';
    os << "tol " << format_g17(tol_) << '\n';
    os << "method " << method_ << '\n';
    if (with_digest) os << "digest " << digest_ << '\n';
    for (std::size_t n = 0; n < w_.size(); ++n) os << n << ' ' << format_g17(w_[n]) << '\n';
    return os.str();
  }

  RadialWeight weight_;
  std::vector<double> w_;
  double tol_;
  std::string method_;
  std::string digest_;
};

struct MomentTable::Parsed {
  MomentTable table;
  std::string stored_digest;
  /// Hash of the file text without the digest line. An edit that rounds back
  /// to the same doubles still changes this.
  std::string text_digest;
  bool digest_ok() const { return table.digest() == stored_digest && text_digest == stored_digest; }
};

namespace detail {

inline double parse_double(const std::string& tok, const std::string& field) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || end != tok.c_str() + tok.size())
    throw config_error("moment cache: bad number '" + tok + "' for " + field);
  return v;
}

}  // namespace detail

inline MomentTable::Parsed MomentTable::parse_unverified(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line, body;
  auto header = [&](const char* key) {
    if (!std::getline(is, line)) throw config_error(std::string("moment cache: missing ") + key);
    if (std::string_view(key) != "digest") body += line + '\n';
    const std::string prefix = std::string(key) + ' ';
    if (line.rfind(prefix, 0) != 0)
      throw config_error(std::string("moment cache: expected '") + key + "', got '" + line + "'");
    return line.substr(prefix.size());
  };
  if (header("version") != std::to_string(format_version))
    throw config_error("moment cache: unsupported version");
  const std::string kind = header("weight.kind");
  const double param = detail::parse_double(header("weight.param"), "weight.param");
  const auto n_max = static_cast<std::size_t>(detail::parse_double(header("n_max"), "n_max"));
  const double tol = detail::parse_double(header("tol"), "tol");
  const std::string method = header("method");
  const std::string digest = header("digest");

  std::vector<double> w;
  w.reserve(n_max + 1);
  while (std::getline(is, line)) {
    body += line + '\n';
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw config_error("moment cache: malformed row '" + line + "'");
    const auto idx = static_cast<std::size_t>(detail::parse_double(line.substr(0, sp), "n"));
    if (idx != w.size()) throw config_error("moment cache: row index out of sequence");
    w.push_back(detail::parse_double(line.substr(sp + 1), "w_" + std::to_string(idx)));
  }
  if (w.size() != n_max + 1) throw config_error("moment cache: row count does not match n_max");
  return {MomentTable(RadialWeight::from_spec(kind, param), std::move(w), tol, method), digest,
          sha256_hex(body)};
}

inline MomentTable MomentTable::parse(std::string_view text, bool verify) {
  Parsed p = parse_unverified(text);
  if (verify && !p.digest_ok())
    throw numeric_error("moment cache: digest mismatch (stored " + p.stored_digest +
                        ", computed " + p.text_digest + ")");
  return std::move(p.table);
}

inline MomentTable build_moment_table(const RadialWeight& w, std::size_t n_max, double tol,
                                      unsigned jobs = 1) {
  if (n_max < 2) throw config_error("moment table needs n_max >= 2");
  std::vector<double> values(n_max + 1);
  parallel_for(n_max + 1, jobs, [&](std::size_t n) {
    try {
      values[n] = compute_wn(w, n, tol);
    } catch (const error& e) {
      e.rethrow_with("w_" + std::to_string(n) + ": ");
    }
  });
  return MomentTable(w, std::move(values), tol);
}

// ---------------------------------------------------------------------------
// Growth asymptotic w_n ~ c (n+1)^{1+1/delta} for phi = (log+ r)^{1+delta}.

/// c = 2 delta (1+delta)^{-(1+1/delta)}: value at the maximum of
/// (2n+2) s - 2 s^{1+delta}, divided by (n+1)^{1+1/delta}.
inline double growth_constant(double delta) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw domain_error("delta must lie in (0, 1], got " + format_g17(delta));
  return 2.0 * delta * std::pow(1.0 + delta, -(1.0 + 1.0 / delta));
}

inline double wn_asymptotic(double delta, std::size_t n) {
  const double c = growth_constant(delta);
  return c * std::pow(static_cast<double>(n) + 1.0, 1.0 + 1.0 / delta);
}

struct GrowthReport {
  double delta = 0;        // exponent parameter tested
  double table_delta = 0;  // beta - 1 of the table's weight
  double c = 0;
  std::vector<double> ratio;  // ratio[n] for n >= 2; ratio[0], ratio[1] unused (NaN)
  double max_ratio = 0;
  std::size_t argmax = 0;
  bool bounded = false;
  bool tail_nonincreasing = false;
  bool pass() const { return bounded && tail_nonincreasing; }
};

/// |w_n - c (n+1)^{1+1/delta}| / log(n+1) over 2 <= n <= n_max. Passes when the
/// ratio stays below `bound` and does not increase over the last half of the
/// range. A table built for a different delta is allowed and is expected to
/// fail (the residual then grows polynomially).
inline GrowthReport verify_moment_growth(const MomentTable& table, double delta, double bound) {
  if (table.weight().kind() != RadialWeight::Kind::log_power)
    throw config_error("growth check needs a log-power moment table");
  if (table.n_max() < 50) throw config_error("growth check needs n_max >= 50");
  GrowthReport rep;
  rep.delta = delta;
  rep.table_delta = table.weight().param() - 1.0;
  rep.c = growth_constant(delta);
  rep.ratio.assign(table.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t n = 2; n <= table.n_max(); ++n) {
    const double res = std::abs(table[n] - wn_asymptotic(delta, n));
    rep.ratio[n] = res / std::log(static_cast<double>(n) + 1.0);
    if (rep.ratio[n] > rep.max_ratio) {
      rep.max_ratio = rep.ratio[n];
      rep.argmax = n;
    }
  }
  rep.bounded = std::isfinite(rep.max_ratio) && rep.max_ratio <= bound;
  rep.tail_nonincreasing = true;
  for (std::size_t n = std::max<std::size_t>(3, table.n_max() / 2 + 1); n <= table.n_max(); ++n)
    if (rep.ratio[n] > rep.ratio[n - 1] * (1 + 1e-9) + 1e-12) rep.tail_nonincreasing = false;
  return rep;
}

}  // namespace fockrb
