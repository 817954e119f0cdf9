#pragma once

// Banded statistics of a log-ratio sampled along a radius (or along an index).
// Values are in nats throughout.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "json.hpp"

#include "fockrb/errors.hpp"
#include "fockrb/node_sequence.hpp"

namespace fockrb {

struct RatioSample {
  double log_r;
  double value;
};

struct DecadeBand {
  double log_r_lo;
  double log_r_hi;
  double min;
  double max;
  std::size_t count;
};

class RatioStat {
 public:
  RatioStat() = default;

  /// Samples in any order; decades are counted from the smallest radius.
  explicit RatioStat(std::vector<RatioSample> samples, std::size_t dropped = 0)
      : samples_(std::move(samples)), dropped_(dropped) {
    std::stable_sort(samples_.begin(), samples_.end(),
                     [](const RatioSample& a, const RatioSample& b) { return a.log_r < b.log_r; });
    build();
  }

  bool empty() const noexcept { return samples_.empty(); }
  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t dropped() const noexcept { return dropped_; }
  const std::vector<RatioSample>& samples() const noexcept { return samples_; }
  const std::vector<DecadeBand>& decades() const noexcept { return decades_; }

  double min() const { return at(imin_).value; }
  double max() const { return at(imax_).value; }
  double argmin_log_r() const { return at(imin_).log_r; }
  double argmax_log_r() const { return at(imax_).log_r; }
  double width() const { return max() - min(); }

  /// Largest shift of either band edge between the first and last decade.
  double drift() const {
    if (decades_.size() < 2) return 0.0;
    const auto& a = decades_.front();
    const auto& b = decades_.back();
    return std::max(std::abs(b.min - a.min), std::abs(b.max - a.max));
  }

  /// True when the per-decade band centres move strictly one way across at
  /// least four decades by more than `slack` in total.
  bool monotone_drift(double slack) const {
    if (decades_.size() < 4) return false;
    auto mid = [](const DecadeBand& d) { return 0.5 * (d.min + d.max); };
    bool up = true, down = true;
    for (std::size_t k = 1; k < decades_.size(); ++k) {
      up = up && mid(decades_[k]) > mid(decades_[k - 1]);
      down = down && mid(decades_[k]) < mid(decades_[k - 1]);
    }
    return (up || down) && std::abs(mid(decades_.back()) - mid(decades_.front())) > slack;
  }

  /// Edges of two bands differ by at most `tol`.
  bool band_close(const RatioStat& o, double tol) const {
    return std::abs(min() - o.min()) <= tol && std::abs(max() - o.max()) <= tol;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    if (empty()) {
      j["min"] = nullptr;
      j["max"] = nullptr;
      j["argmin_r"] = nullptr;
      j["argmax_r"] = nullptr;
      j["decades"] = nlohmann::ordered_json::array();
      j["dropped"] = dropped_;
      return j;
    }
    j["min"] = min();
    j["max"] = max();
    j["argmin_r"] = radius_json(argmin_log_r());
    j["argmax_r"] = radius_json(argmax_log_r());
    auto arr = nlohmann::ordered_json::array();
    for (const auto& d : decades_)
      arr.push_back({{"r_lo", radius_json(d.log_r_lo)},
                     {"r_hi", radius_json(d.log_r_hi)},
                     {"min", d.min},
                     {"max", d.max}});
    j["decades"] = std::move(arr);
    j["dropped"] = dropped_;
    return j;
  }

  /// Plain number when representable, otherwise the decimal string.
  static nlohmann::ordered_json radius_json(double log_r) {
    if (log_r == neg_inf) return 0.0;
    const double r = std::exp(log_r);
    if (std::isfinite(r) && r > 0) return r;
    return NodeSequence::format_radius(log_r);
  }

 private:
  const RatioSample& at(std::size_t i) const {
    if (samples_.empty()) throw numeric_error("ratio statistic has no samples");
    return samples_[i];
  }

  void build() {
    if (samples_.empty()) return;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (samples_[i].value < samples_[imin_].value) imin_ = i;
      if (samples_[i].value > samples_[imax_].value) imax_ = i;
    }
    const double base = samples_.front().log_r;
    if (!std::isfinite(base)) return;
    for (const auto& s : samples_) {
      const auto k = static_cast<std::size_t>(
          std::floor((s.log_r - base) / std::numbers::ln10 + 1e-12));
      while (decades_.size() <= k) {
        const double lo = base + static_cast<double>(decades_.size()) * std::numbers::ln10;
        decades_.push_back({lo, lo + std::numbers::ln10, std::numeric_limits<double>::infinity(),
                            -std::numeric_limits<double>::infinity(), 0});
      }
      auto& d = decades_[k];
      d.min = std::min(d.min, s.value);
      d.max = std::max(d.max, s.value);
      ++d.count;
    }
    std::erase_if(decades_, [](const DecadeBand& d) { return d.count == 0; });
    // A lone sample at exactly the closing radius joins the previous decade.
    if (decades_.size() > 1 && decades_.back().count == 1) {
      auto last = decades_.back();
      decades_.pop_back();
      auto& d = decades_.back();
      d.min = std::min(d.min, last.min);
      d.max = std::max(d.max, last.max);
      ++d.count;
    }
  }

  std::vector<RatioSample> samples_;
  std::vector<DecadeBand> decades_;
  std::size_t imin_ = 0, imax_ = 0;
  std::size_t dropped_ = 0;
};

}  // namespace fockrb
