#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fockrb {

/// Base class of every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Short machine-readable tag, used in CLI error records.
  virtual const char* kind() const noexcept { return "error"; }
  /// Throw a copy of this error, same dynamic type, with `prefix` prepended.
  [[noreturn]] virtual void rethrow_with(const std::string& prefix) const {
    throw error(prefix + what());
  }
};

#define FOCKRB_ERROR_TYPE(name, tag)                              \
  class name : public error {                                     \
   public:                                                        \
    using error::error;                                           \
    const char* kind() const noexcept override { return tag; }    \
    [[noreturn]] void rethrow_with(const std::string& p) const override { \
      throw name(p + what());                                     \
    }                                                             \
  }

FOCKRB_ERROR_TYPE(domain_error, "domain");
FOCKRB_ERROR_TYPE(config_error, "config");
FOCKRB_ERROR_TYPE(numeric_error, "numeric");
FOCKRB_ERROR_TYPE(divergence_error, "divergence");
FOCKRB_ERROR_TYPE(singular_scale_error, "singular-scale");
FOCKRB_ERROR_TYPE(undefined_scale_error, "undefined-scale");
FOCKRB_ERROR_TYPE(coverage_error, "coverage");
FOCKRB_ERROR_TYPE(degenerate_error, "degenerate");
FOCKRB_ERROR_TYPE(truncation_unsound_error, "truncation-unsound");

#undef FOCKRB_ERROR_TYPE

/// Kernel series would need more moments than the table holds.
class truncation_error : public error {
 public:
  truncation_error(const std::string& what, std::size_t required_n_max)
      : error(what), required_n_max_(required_n_max) {}
  const char* kind() const noexcept override { return "truncation"; }
  std::size_t required_n_max() const noexcept { return required_n_max_; }
  [[noreturn]] void rethrow_with(const std::string& p) const override {
    throw truncation_error(p + what(), required_n_max_);
  }

 private:
  std::size_t required_n_max_;
};

/// Quadrature window does not capture the integrand's decay.
class range_error : public error {
 public:
  range_error(const std::string& what, double suggested_r_max)
      : error(what), suggested_r_max_(suggested_r_max) {}
  const char* kind() const noexcept override { return "range"; }
  double suggested_r_max() const noexcept { return suggested_r_max_; }
  [[noreturn]] void rethrow_with(const std::string& p) const override {
    throw range_error(p + what(), suggested_r_max_);
  }

 private:
  double suggested_r_max_;
};

}  // namespace fockrb
