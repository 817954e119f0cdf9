#pragma once

// Experiment configuration: an INI file with nested sections, parsed by
// boost::property_tree. Every key is validated; unknown keys are rejected so a
// typo cannot silently fall back to a default.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fockrb/digest.hpp"
#include "fockrb/errors.hpp"
#include "fockrb/gram.hpp"
#include "fockrb/interpolation.hpp"
#include "fockrb/kernels.hpp"
#include "fockrb/node_sequence.hpp"
#include "fockrb/weights.hpp"

namespace fockrb {

/// Pilot-calibrated bands. Defaults mirror config/pilot.ini.
struct Thresholds {
  double growth_bound = 4.0;
  double product_max_width = 9.0;
  double product_max_drift = 2.0;
  double derivative_max_width = 4.5;
  double derivative_band_tol = 2.0;
  double kernel_max_width = 1.0;
  double kernel_max_drift = 0.5;
  double gram_stable_factor = 1.5;
  double gram_degenerate_factor = 10.0;
  double gram_interlace_tol = 1e-9;
  double bari_max_scaled_s1 = 2.0;
  double bari_flat_increment = 1e-3;
  std::size_t bari_flat_from = 10;
  double equivalence_max_spread = 40.0;
  double resample_tol = 1e-6;
  double basis_max_norm = 1500.0;
  double decay_min_rate = 0.0;
  double density_c_sep = 0.5;
  double density_c_dens = 2.75;

  TrendThresholds trend() const {
    return {gram_stable_factor, gram_degenerate_factor, gram_interlace_tol};
  }

  template <class F>
  void visit(F&& f) {
    f("growth_bound", growth_bound);
    f("product_max_width", product_max_width);
    f("product_max_drift", product_max_drift);
    f("derivative_max_width", derivative_max_width);
    f("derivative_band_tol", derivative_band_tol);
    f("kernel_max_width", kernel_max_width);
    f("kernel_max_drift", kernel_max_drift);
    f("gram_stable_factor", gram_stable_factor);
    f("gram_degenerate_factor", gram_degenerate_factor);
    f("gram_interlace_tol", gram_interlace_tol);
    f("bari_max_scaled_s1", bari_max_scaled_s1);
    f("bari_flat_increment", bari_flat_increment);
    f("bari_flat_from", bari_flat_from);
    f("equivalence_max_spread", equivalence_max_spread);
    f("resample_tol", resample_tol);
    f("basis_max_norm", basis_max_norm);
    f("decay_min_rate", decay_min_rate);
    f("density_c_sep", density_c_sep);
    f("density_c_dens", density_c_dens);
  }
  template <class F>
  void visit(F&& f) const {
    const_cast<Thresholds*>(this)->visit([&](const char* k, auto& v) { f(k, std::as_const(v)); });
  }

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

struct NodeSpec {
  std::string generator = "partB";  // partB | partC | lattice
  std::size_t count = 200;
  std::string theta = "zeros";  // zeros | seeded-uniform | alternating
  std::optional<std::uint64_t> theta_seed;
  double lattice_spacing = 1.7724538509055159;
  double lattice_radius = 15.0;
  double lattice_shift = 0.0;
};

struct ExperimentConfig {
  std::string weight_kind = "logpower";
  double weight_param = 2.0;
  std::size_t n_max = 300;
  double tol = 1e-12;
  NodeSpec nodes;
  PolarGridSpec grid;

  std::vector<std::size_t> n_list{16, 32, 64, 128, 200};
  std::string gram_expect = "stable";  // stable | degenerating | any

  double kernel_r_min = 10.0;
  double kernel_r_max = 1e5;
  unsigned kernel_points_per_decade = 16;
  std::string kernel_form = "auto";  // auto | rho | one_plus_r2

  double product_t_min = 2.0;
  double product_t_max = 2.0 + 4.0 * std::numbers::ln10;
  double product_t_step = 0.125;
  unsigned product_angles = 256;
  double product_eps = 1e-12;
  bool product_derivative = true;

  std::size_t support = 20;
  std::size_t trials = 50;
  std::size_t sparsity = 8;
  std::size_t m_first = 0;
  std::size_t m_last = 19;

  std::size_t bari_last = 60;

  std::optional<double> growth_delta;
  std::optional<std::size_t> gap_count;
  std::size_t gap_s_max = 300;

  bool density = false;
  unsigned density_rays = 16;
  double density_step = 0.25;
  std::string density_expect = "pass";  // pass | fail

  std::uint64_t seed = 1;
  Thresholds thresholds;

  /// The parsed key/value pairs in file order, echoed into manifests.
  std::vector<std::pair<std::string, std::string>> echo;

  RadialWeight weight() const { return RadialWeight::from_spec(weight_kind, weight_param); }

  ThetaRule theta_rule() const {
    if (nodes.theta == "zeros") return ThetaRule::zeros();
    if (nodes.theta == "alternating") return ThetaRule::alternating();
    return ThetaRule::seeded_uniform(nodes.theta_seed.value_or(seed));
  }

  KernelNormForm kernel_norm_form() const {
    if (kernel_form == "rho") return KernelNormForm::rho;
    if (kernel_form == "one_plus_r2") return KernelNormForm::one_plus_r2;
    return KernelNormForm::automatic;
  }
};

namespace detail {

namespace pt = boost::property_tree;

inline std::string field(const std::string& sec, const std::string& key) {
  return "[" + sec + "] " + key;
}

template <class T>
T parse_number(const std::string& sec, const std::string& key, const std::string& raw) {
  const std::string s = raw;
  T v{};
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || s.empty())
    throw config_error(field(sec, key) + ": expected a number, got '" + raw + "'");
  return v;
}

inline bool parse_bool(const std::string& sec, const std::string& key, const std::string& raw) {
  if (raw == "true" || raw == "1" || raw == "yes") return true;
  if (raw == "false" || raw == "0" || raw == "no") return false;
  throw config_error(field(sec, key) + ": expected true/false, got '" + raw + "'");
}

inline std::string parse_choice(const std::string& sec, const std::string& key,
                                const std::string& raw, std::initializer_list<const char*> allowed) {
  std::string list;
  for (const char* a : allowed) {
    if (raw == a) return raw;
    list += (list.empty() ? "" : ", ") + std::string(a);
  }
  throw config_error(field(sec, key) + ": '" + raw + "' is not one of " + list);
}

/// Reads one section, tracking which keys were consumed.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  bool present() const { return tree_ != nullptr; }

  std::optional<std::string> raw(const std::string& key) {
    seen_.insert(key);
    if (!tree_) return std::nullopt;
    auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    return it->second.data();
  }

  template <class T>
  void number(const std::string& key, T& out) {
    if (auto r = raw(key)) out = parse_number<T>(name_, key, *r);
  }
  template <class T>
  void number(const std::string& key, std::optional<T>& out) {
    if (auto r = raw(key)) out = parse_number<T>(name_, key, *r);
  }
  void boolean(const std::string& key, bool& out) {
    if (auto r = raw(key)) out = parse_bool(name_, key, *r);
  }
  void choice(const std::string& key, std::string& out, std::initializer_list<const char*> allowed) {
    if (auto r = raw(key)) out = parse_choice(name_, key, *r, allowed);
  }
  template <class T>
  void required(const std::string& key, T& out) {
    if (!raw(key)) throw config_error(field(name_, key) + ": missing required field");
    number(key, out);
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [k, v] : *tree_)
      if (!seen_.count(k)) throw config_error(field(name_, k) + ": unknown key");
  }

  const std::string& name() const { return name_; }

 private:
  std::string name_;
  const pt::ptree* tree_;
  std::set<std::string> seen_;
};

inline const pt::ptree* child(const pt::ptree& root, const std::string& name) {
  auto it = root.find(name);
  return it == root.not_found() ? nullptr : &it->second;
}

inline void check(bool ok, const std::string& sec, const std::string& key, const std::string& msg) {
  if (!ok) throw config_error(field(sec, key) + ": " + msg);
}

inline void read_thresholds(const pt::ptree* tree, Thresholds& th) {
  Section s("thresholds", tree);
  th.visit([&](const char* k, auto& v) {
    s.number(k, v);
    check(v >= 0, "thresholds", k, "must be >= 0");
  });
  s.reject_unknown();
}

inline pt::ptree read_ini_tree(std::istream& in, const std::string& source) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw config_error(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [k, v] : root)
    if (v.empty() && !v.data().empty())
      throw config_error(source + ": key '" + k + "' outside any section");
  return root;
}

}  // namespace detail

/// Thresholds from an INI stream containing a [thresholds] section.
inline Thresholds parse_thresholds(std::istream& in, const std::string& source) {
  const auto root = detail::read_ini_tree(in, source);
  for (const auto& [k, v] : root)
    if (k != "thresholds") throw config_error(source + ": unexpected section [" + k + "]");
  Thresholds th;
  detail::read_thresholds(detail::child(root, "thresholds"), th);
  return th;
}

inline Thresholds load_thresholds(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open threshold file " + path);
  return parse_thresholds(in, path);
}

/// Parses and validates a whole config. Nothing is returned unless every
/// field is valid.
inline ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  namespace d = detail;
  const auto root = d::read_ini_tree(in, source);
  static const std::set<std::string> known{"weight",  "table",       "nodes",   "grid",
                                           "gram",    "kernel",      "product", "interpolate",
                                           "bari",    "growth",      "gap",   "density",
                                           "run",     "thresholds"};
  for (const auto& [k, v] : root)
    if (!known.count(k)) throw config_error(source + ": unknown section [" + k + "]");

  ExperimentConfig c;
  for (const auto& [sec, tree] : root)
    for (const auto& [k, v] : tree) c.echo.emplace_back(sec + "." + k, v.data());

  {
    d::Section s("weight", d::child(root, "weight"));
    if (!s.raw("kind")) throw config_error("[weight] kind: missing required field");
    s.choice("kind", c.weight_kind, {"logpower", "power"});
    s.required("param", c.weight_param);
    s.reject_unknown();
    try {
      (void)c.weight();
    } catch (const error& e) {
      throw config_error(std::string("[weight] param: ") + e.what());
    }
  }
  {
    d::Section s("table", d::child(root, "table"));
    s.number("n_max", c.n_max);
    s.number("tol", c.tol);
    s.reject_unknown();
    d::check(c.n_max >= 2, "table", "n_max", "must be >= 2");
    d::check(c.tol > 0 && c.tol < 1e-3, "table", "tol", "must lie in (0, 1e-3)");
  }
  {
    d::Section s("nodes", d::child(root, "nodes"));
    s.choice("generator", c.nodes.generator, {"partB", "partC", "lattice"});
    s.number("count", c.nodes.count);
    s.choice("theta", c.nodes.theta, {"zeros", "seeded-uniform", "alternating"});
    s.number("theta_seed", c.nodes.theta_seed);
    s.number("lattice_spacing", c.nodes.lattice_spacing);
    s.number("lattice_radius", c.nodes.lattice_radius);
    s.number("lattice_shift", c.nodes.lattice_shift);
    s.reject_unknown();
    d::check(c.nodes.count >= 1, "nodes", "count", "must be >= 1");
    if (c.nodes.generator == "partC")
      d::check(c.n_max >= c.nodes.count + 1, "nodes", "count",
               "partC needs [table] n_max >= count + 1");
    if (c.nodes.generator == "lattice") {
      d::check(c.nodes.lattice_spacing > 0, "nodes", "lattice_spacing", "must be > 0");
      d::check(c.nodes.lattice_radius > 0, "nodes", "lattice_radius", "must be > 0");
    }
  }
  {
    d::Section s("grid", d::child(root, "grid"));
    s.number("r_min", c.grid.r_min);
    s.number("r_max", c.grid.r_max);
    s.number("panels_per_decade", c.grid.panels_per_decade);
    s.number("angles", c.grid.angles);
    s.reject_unknown();
    d::check(c.grid.r_min > 0, "grid", "r_min", "must be > 0");
    d::check(c.grid.r_max > c.grid.r_min, "grid", "r_max", "must exceed r_min");
    d::check(c.grid.panels_per_decade >= 1, "grid", "panels_per_decade", "must be >= 1");
    d::check(c.grid.angles >= 64 && (c.grid.angles & (c.grid.angles - 1)) == 0, "grid", "angles",
             "must be a power of two >= 64");
  }
  {
    d::Section s("gram", d::child(root, "gram"));
    if (auto r = s.raw("n_list")) {
      c.n_list.clear();
      std::stringstream ss(*r);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        const auto b = tok.find_first_not_of(' ');
        const auto e = tok.find_last_not_of(' ');
        c.n_list.push_back(d::parse_number<std::size_t>(
            "gram", "n_list", b == std::string::npos ? "" : tok.substr(b, e - b + 1)));
      }
    }
    s.choice("expect", c.gram_expect, {"stable", "degenerating", "any"});
    s.reject_unknown();
    d::check(!c.n_list.empty(), "gram", "n_list", "must not be empty");
    for (std::size_t i = 0; i < c.n_list.size(); ++i) {
      d::check(c.n_list[i] >= 1 && c.n_list[i] <= gram_max_n, "gram", "n_list",
               "entries must lie in 1.." + std::to_string(gram_max_n));
      if (i) d::check(c.n_list[i] > c.n_list[i - 1], "gram", "n_list", "must be increasing");
    }
  }
  {
    d::Section s("kernel", d::child(root, "kernel"));
    s.number("r_min", c.kernel_r_min);
    s.number("r_max", c.kernel_r_max);
    s.number("points_per_decade", c.kernel_points_per_decade);
    s.choice("form", c.kernel_form, {"auto", "rho", "one_plus_r2"});
    s.reject_unknown();
    d::check(c.kernel_r_min > 0, "kernel", "r_min", "must be > 0");
    d::check(c.kernel_r_max > c.kernel_r_min, "kernel", "r_max", "must exceed r_min");
    d::check(c.kernel_points_per_decade >= 1, "kernel", "points_per_decade", "must be >= 1");
  }
  {
    d::Section s("product", d::child(root, "product"));
    s.number("t_min", c.product_t_min);
    s.number("t_max", c.product_t_max);
    s.number("t_step", c.product_t_step);
    s.number("angles", c.product_angles);
    s.number("eps", c.product_eps);
    s.boolean("derivative", c.product_derivative);
    s.reject_unknown();
    d::check(c.product_t_max > c.product_t_min, "product", "t_max", "must exceed t_min");
    d::check(c.product_t_step > 0, "product", "t_step", "must be > 0");
    d::check(c.product_angles >= 1, "product", "angles", "must be >= 1");
  }
  {
    d::Section s("interpolate", d::child(root, "interpolate"));
    s.number("support", c.support);
    s.number("trials", c.trials);
    s.number("sparsity", c.sparsity);
    s.number("m_first", c.m_first);
    s.number("m_last", c.m_last);
    s.reject_unknown();
    d::check(c.support >= 1 && c.support <= c.nodes.count, "interpolate", "support",
             "must lie in 1..[nodes] count");
    d::check(c.sparsity >= 1 && c.sparsity <= c.support, "interpolate", "sparsity",
             "must lie in 1..support");
    d::check(c.trials >= 1, "interpolate", "trials", "must be >= 1");
    d::check(c.m_first <= c.m_last && c.m_last < c.nodes.count, "interpolate", "m_last",
             "need m_first <= m_last < [nodes] count");
  }
  {
    d::Section s("bari", d::child(root, "bari"));
    s.number("last", c.bari_last);
    s.reject_unknown();
    d::check(c.bari_last >= 1, "bari", "last", "must be >= 1");
  }
  {
    d::Section s("growth", d::child(root, "growth"));
    s.number("delta", c.growth_delta);
    s.reject_unknown();
    if (c.growth_delta) {
      d::check(*c.growth_delta > 0, "growth", "delta", "must be > 0");
      d::check(c.weight_kind == "logpower", "growth", "delta", "needs a logpower weight");
      d::check(c.n_max >= 50, "growth", "delta", "needs [table] n_max >= 50");
    }
  }
  {
    d::Section s("gap", d::child(root, "gap"));
    s.number("count", c.gap_count);
    s.number("s_max", c.gap_s_max);
    s.reject_unknown();
    if (c.gap_count) {
      d::check(*c.gap_count >= 1 && *c.gap_count + 1 <= c.n_max, "gap", "count",
               "must lie in 1..[table] n_max - 1");
      d::check(c.gap_s_max <= c.n_max, "gap", "s_max", "must not exceed [table] n_max");
    }
  }
  {
    d::Section s("density", d::child(root, "density"));
    s.boolean("enabled", c.density);
    s.number("rays", c.density_rays);
    s.number("step", c.density_step);
    s.choice("expect", c.density_expect, {"pass", "fail"});
    s.reject_unknown();
    d::check(c.density_rays >= 1, "density", "rays", "must be >= 1");
    d::check(c.density_step > 0, "density", "step", "must be > 0");
  }
  {
    d::Section s("run", d::child(root, "run"));
    s.number("seed", c.seed);
    s.reject_unknown();
  }
  d::read_thresholds(d::child(root, "thresholds"), c.thresholds);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path);
  return parse_config(in, path);
}

inline ExperimentConfig parse_config_string(const std::string& text,
                                            const std::string& source = "<string>") {
  std::istringstream in(text);
  return parse_config(in, source);
}

}  // namespace fockrb
