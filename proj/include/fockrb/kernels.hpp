#pragma once

// Reproducing kernels k_lambda(z) = sum_n conj(lambda)^n z^n e^{-w_n} and their
// norms, summed in the log domain against a moment table.

#include <cmath>
#include <string>
#include <vector>

#include "fockrb/errors.hpp"
#include "fockrb/log_complex.hpp"
#include "fockrb/moments.hpp"
#include "fockrb/polar.hpp"
#include "fockrb/ratio_stat.hpp"
#include "fockrb/weights.hpp"

namespace fockrb {

/// Nats below the running maximum after which the series is cut.
inline constexpr double kernel_tail_nats = 40.0;

namespace detail {

/// Index at which n log R - w_n has dropped `kernel_tail_nats` past its peak,
/// continuing w beyond the table with w''(m) = w''(n) n / m. That decay is the
/// slowest among the built-in weights (power weights have w'' ~ 1/(alpha m),
/// log-power weights nondecreasing w''), so the estimate errs on the high side.
inline std::size_t estimate_required_n(const MomentTable& t, double log_R, double peak_term,
                                       double last_term) {
  const std::size_t n = t.n_max();
  if (n < 2) return 2 * n + 64;
  const double nn = static_cast<double>(n);
  const double d1 = t[n] - t[n - 1];
  const double d2 = std::max(t[n] + t[n - 2] - 2.0 * t[n - 1], 1e-12);
  double term = last_term, peak = peak_term;
  std::size_t m = n;
  for (; m < 100'000'000; ++m) {
    const double mm = static_cast<double>(m) + 1.0;
    term += log_R - (d1 + d2 * nn * std::log(mm / nn));
    peak = std::max(peak, term);
    if (term < peak - kernel_tail_nats) break;
  }
  return m + m / 10 + 10;
}

}  // namespace detail

/// k_lambda(z) as LogComplex. Throws truncation_error when the table ends
/// before the terms fall 40 nats below their peak.
inline LogComplex kernel_eval(const MomentTable& t, const Polar& lambda, const Polar& z) {
  if (lambda.is_origin() || z.is_origin()) return {-t[0], 0.0};
  const double log_R = lambda.log_r + z.log_r;
  const double dphase = z.theta - lambda.theta;

  // Terms are concave in n (w is convex), so the first pass finds the peak and
  // the cut; the second sums relative to the peak.
  double peak = neg_inf;
  std::size_t peak_n = 0, cut = t.n_max();
  bool done = false;
  for (std::size_t n = 0; n <= t.n_max(); ++n) {
    const double term = static_cast<double>(n) * log_R - t[n];
    if (term > peak) {
      peak = term;
      peak_n = n;
    } else if (n > peak_n && term < peak - kernel_tail_nats) {
      cut = n;
      done = true;
      break;
    }
  }
  if (!done) {
    const double last = static_cast<double>(t.n_max()) * log_R - t[t.n_max()];
    const std::size_t need = detail::estimate_required_n(t, log_R, peak, last);
    throw truncation_error("kernel series at log|lambda z| = " + format_g17(log_R) +
                               " needs n_max >= " + std::to_string(need) + " (table has " +
                               std::to_string(t.n_max()) + ")",
                           need);
  }

  LogSum sum;
  for (std::size_t n = 0; n <= cut; ++n) {
    const double nn = static_cast<double>(n);
    sum.add(nn * log_R - t[n], std::remainder(nn * dphase, two_pi));
  }
  return sum.value();
}

/// log ||k_z||^2 = log sum_n |z|^{2n} e^{-w_n}, given log|z|.
inline double kernel_norm_sq_log(const MomentTable& t, double log_r) {
  if (log_r == neg_inf) return -t[0];
  const Polar p{log_r, 0.0};
  return kernel_eval(t, p, p).logmag();
}

/// log ||k_z||^2 for |z| = r.
inline double kernel_norm_sq(const MomentTable& t, double r) {
  if (!(r >= 0)) throw domain_error("kernel norm needs r >= 0, got " + format_g17(r));
  return kernel_norm_sq_log(t, r == 0 ? neg_inf : std::log(r));
}

struct KernelPoint {
  Polar lambda;
  double norm_sq_log;
  std::string table_digest;

  static KernelPoint at(const MomentTable& t, const Polar& lambda) {
    return {lambda, kernel_norm_sq_log(t, lambda.log_r), t.digest()};
  }
};

/// Which normalization of ||k_z||^2 e^{-2 phi} is compared against 1.
enum class KernelNormForm {
  automatic,    // (1+|z|^2) when rho grows like |z| (log-power beta = 2), rho^2 otherwise
  rho,          // ||k||^2 rho^2 e^{-2 phi}
  one_plus_r2,  // ||k||^2 (1+|z|^2) e^{-2 phi}
};

inline KernelNormForm resolve_form(const RadialWeight& w, KernelNormForm f) {
  if (f != KernelNormForm::automatic) return f;
  return w.kind() == RadialWeight::Kind::log_power && w.param() == 2.0 ? KernelNormForm::one_plus_r2
                                                                       : KernelNormForm::rho;
}

/// log of ||k_z||^2 rho(z)^2 e^{-2 phi(z)} (or the (1+|z|^2) variant) over a
/// radius grid. Points where rho is undefined are dropped and counted.
inline RatioStat verify_kernel_norm_asymptotic(const RadialWeight& w, const MomentTable& t,
                                               const std::vector<double>& r_grid,
                                               KernelNormForm form = KernelNormForm::automatic) {
  if (r_grid.empty()) throw config_error("kernel norm check needs a nonempty grid");
  form = resolve_form(w, form);
  std::vector<RatioSample> out;
  std::size_t dropped = 0;
  for (double r : r_grid) {
    if (!(r > 0)) throw config_error("kernel norm grid must be positive");
    const double s = std::log(r);
    double scale;
    if (form == KernelNormForm::rho) {
      try {
        scale = 2.0 * w.log_rho_at_log(s);
      } catch (const undefined_scale_error&) {
        ++dropped;
        continue;
      } catch (const singular_scale_error&) {
        ++dropped;
        continue;
      }
    } else {
      scale = std::log1p(r * r);
    }
    const double v = kernel_norm_sq_log(t, s) + scale - 2.0 * w.phi_at_log(s);
    out.push_back({s, v});
  }
  return RatioStat(std::move(out), dropped);
}

}  // namespace fockrb
