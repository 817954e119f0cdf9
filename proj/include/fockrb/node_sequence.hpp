#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fockrb/digest.hpp"
#include "fockrb/errors.hpp"
#include "fockrb/polar.hpp"

namespace fockrb {

/// How node arguments theta_n are chosen. Any choice is admissible for the
/// constructions; the rules only make runs reproducible.
struct ThetaRule {
  enum class Kind { zeros, seeded_uniform, alternating };

  Kind kind = Kind::zeros;
  std::uint64_t seed = 0;

  static ThetaRule zeros() { return {Kind::zeros, 0}; }
  static ThetaRule seeded_uniform(std::uint64_t seed) { return {Kind::seeded_uniform, seed}; }
  static ThetaRule alternating() { return {Kind::alternating, 0}; }

  /// theta_0 .. theta_{count-1}. Prefix-stable: angles(n)[k] == angles(m)[k].
  std::vector<double> angles(std::size_t count) const {
    std::vector<double> out(count, 0.0);
    switch (kind) {
      case Kind::zeros:
        break;
      case Kind::alternating:
        for (std::size_t n = 0; n < count; ++n) out[n] = (n % 2) ? std::numbers::pi : 0.0;
        break;
      case Kind::seeded_uniform: {
        std::mt19937_64 gen(seed);
        // 53 random bits mapped onto (-pi, pi]; avoids the implementation-defined
        // algorithms of std::uniform_real_distribution.
        for (std::size_t n = 0; n < count; ++n) {
          const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
          out[n] = wrap_phase(std::numbers::pi - two_pi * u);
        }
        break;
      }
    }
    return out;
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::zeros: return "zeros";
      case Kind::alternating: return "alternating";
      case Kind::seeded_uniform: return "seeded-uniform(" + std::to_string(seed) + ")";
    }
    return "?";
  }

  friend bool operator==(const ThetaRule&, const ThetaRule&) = default;
};

enum class NodeGenerator { part_b, part_c, custom };

inline const char* to_string(NodeGenerator g) {
  switch (g) {
    case NodeGenerator::part_b: return "partB";
    case NodeGenerator::part_c: return "partC";
    case NodeGenerator::custom: return "custom";
  }
  return "?";
}

/// Ordered nodes lambda_n = r_n e^{i theta_n} with the metadata of the generator
/// that produced them. Immutable once built.
class NodeSequence {
 public:
  NodeSequence(std::vector<Polar> nodes, NodeGenerator generator, ThetaRule rule,
               std::string table_digest = {})
      : nodes_(std::move(nodes)),
        generator_(generator),
        rule_(rule),
        table_digest_(std::move(table_digest)) {
    if (nodes_.empty()) throw config_error("node sequence must be nonempty");
    for (std::size_t n = 1; n < nodes_.size(); ++n) {
      const bool ok = generator_ == NodeGenerator::custom
                          ? nodes_[n].log_r >= nodes_[n - 1].log_r
                          : nodes_[n].log_r > nodes_[n - 1].log_r;
      if (!ok)
        throw numeric_error("node radii not increasing at index " + std::to_string(n) + " (" +
                            to_string(generator_) + ")");
    }
  }

  /// Arbitrary nodes, sorted by modulus (ties keep their relative order).
  static NodeSequence custom(std::vector<Polar> nodes) {
    std::stable_sort(nodes.begin(), nodes.end(),
                     [](const Polar& a, const Polar& b) { return a.log_r < b.log_r; });
    return {std::move(nodes), NodeGenerator::custom, ThetaRule::zeros()};
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const Polar& operator[](std::size_t n) const { return nodes_[n]; }
  const std::vector<Polar>& nodes() const noexcept { return nodes_; }
  NodeGenerator generator() const noexcept { return generator_; }
  const ThetaRule& theta_rule() const noexcept { return rule_; }
  const std::string& table_digest() const noexcept { return table_digest_; }

  /// First `count` nodes, same generator metadata.
  NodeSequence prefix(std::size_t count) const {
    if (count == 0 || count > nodes_.size()) throw config_error("prefix length out of range");
    return {{nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(count)}, generator_,
            rule_, table_digest_};
  }

  std::string digest() const {
    std::ostringstream os;
    os << to_string(generator_) << '|' << rule_.to_string() << '|' << table_digest_ << '\n';
    for (const auto& p : nodes_) os << format_g17(p.log_r) << ' ' << format_g17(p.theta) << '\n';
    return sha256_hex(os.str());
  }

  /// CSV with header `n,r,theta`. Radii beyond the double range are written in
  /// decimal scientific notation computed from log r.
  std::string to_csv() const {
    std::ostringstream os;
    os << "n,r,theta\r\n";
    for (std::size_t n = 0; n < nodes_.size(); ++n)
      os << n << ',' << format_radius(nodes_[n].log_r) << ',' << format_g17(nodes_[n].theta)
         << "\r\n";
    return os.str();
  }

  static std::string format_radius(double log_r) {
    if (log_r == neg_inf) return "0";
    const double r = std::exp(log_r);
    if (std::isfinite(r) && r > 0) return format_g17(r);
    const double l10 = log_r / std::numbers::ln10;
    const double e = std::floor(l10);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.16fe%.0f", std::pow(10.0, l10 - e), e);
    return buf;
  }

 private:
  std::vector<Polar> nodes_;
  NodeGenerator generator_;
  ThetaRule rule_;
  std::string table_digest_;
};

struct NearestNode {
  double distance;
  double log_distance;
  std::size_t index;
};

/// Exact nearest node by linear scan; ties go to the smaller index.
inline NearestNode dist_to_nodes(const NodeSequence& nodes, const Polar& z) {
  NearestNode best{std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity(), 0};
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const double ld = polar_log_distance(z, nodes[n]);
    if (ld < best.log_distance) best = {std::exp(ld), ld, n};
  }
  return best;
}

}  // namespace fockrb
