#pragma once

// Pipelines behind the CLI subcommands. Each run returns its artifacts as
// strings and its checks as flags; writing files is left to the caller so the
// same code drives the tests.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fockrb/config.hpp"
#include "fockrb/gram.hpp"
#include "fockrb/interpolation.hpp"
#include "fockrb/kernels.hpp"
#include "fockrb/moments.hpp"
#include "fockrb/nodes.hpp"
#include "fockrb/products.hpp"
#include "fockrb/weights.hpp"

namespace fockrb {

using ojson = nlohmann::ordered_json;

struct Artifact {
  std::string name;
  std::string content;
};

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

struct RunResult {
  std::vector<Artifact> artifacts;
  std::vector<Check> checks;
  ojson summary = ojson::object();
  std::string table_digest;
  std::string node_digest;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  void check(std::string name, bool ok, std::string detail) {
    checks.push_back({std::move(name), ok, std::move(detail)});
  }
  void add(std::string name, std::string content) {
    artifacts.push_back({std::move(name), std::move(content)});
  }
  void add_json(std::string name, const ojson& j) { add(std::move(name), j.dump(2) + "\n"); }
};

struct RunOptions {
  std::string cache_dir;  // empty: no cache
  unsigned jobs = 1;
};

// ---------------------------------------------------------------------------
// Moment cache: one rendered table per file, keyed by weight, n_max, tol and
// method.

inline std::string cache_key(const RadialWeight& w, std::size_t n_max, double tol) {
  const std::string id = w.descriptor() + "|" + std::to_string(n_max) + "|" + format_g17(tol) +
                         "|" + moment_method_id;
  return w.kind_name() + "-" + format_g17(w.param()) + "-n" + std::to_string(n_max) + "-" +
         sha256_hex(id).substr(0, 16) + ".wn";
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw config_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write " + p.string());
  out << s;
  if (!out) throw config_error("write failed for " + p.string());
}

/// Table from the cache when a valid entry exists, computed (and stored)
/// otherwise. A corrupt entry is never used; it is overwritten.
inline MomentTable get_table(const RadialWeight& w, std::size_t n_max, double tol,
                             const RunOptions& opt) {
  namespace fs = std::filesystem;
  fs::path entry;
  if (!opt.cache_dir.empty()) {
    fs::create_directories(opt.cache_dir);
    entry = fs::path(opt.cache_dir) / cache_key(w, n_max, tol);
    if (fs::exists(entry)) {
      try {
        auto p = MomentTable::parse_unverified(read_file(entry));
        if (p.digest_ok() && p.table.n_max() == n_max && p.table.method() == moment_method_id)
          return std::move(p.table);
      } catch (const error&) {
      }
    }
  }
  MomentTable t = build_moment_table(w, n_max, tol, opt.jobs);
  if (!entry.empty()) write_file(entry, t.render());
  return t;
}

struct CacheEntry {
  std::string file;
  std::string weight;
  std::size_t n_max = 0;
  std::string tol;
  std::string method;
  bool valid = false;
  std::string problem;
};

inline std::vector<CacheEntry> scan_cache(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw config_error("cache directory " + dir + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wn") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<CacheEntry> out;
  for (const auto& f : files) {
    CacheEntry c;
    c.file = f.filename().string();
    try {
      auto p = MomentTable::parse_unverified(read_file(f));
      c.weight = p.table.weight().descriptor();
      c.n_max = p.table.n_max();
      c.tol = format_g17(p.table.tol());
      c.method = p.table.method();
      c.valid = p.digest_ok();
      if (!c.valid) c.problem = "digest mismatch";
    } catch (const error& e) {
      c.problem = e.what();
    }
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace detail {

inline std::string check_detail(const char* what, double value, const char* op, double bound) {
  return std::string(what) + " = " + format_g17(value) + " " + op + " " + format_g17(bound);
}

inline NodeSequence build_nodes(const ExperimentConfig& c, const MomentTable* t) {
  if (c.nodes.generator == "partB") return nodes_partB(c.nodes.count, c.theta_rule());
  if (c.nodes.generator == "partC") {
    if (!t) throw config_error("partC nodes need a moment table");
    return nodes_partC(*t, c.nodes.count, c.theta_rule());
  }
  return square_lattice(c.nodes.lattice_spacing, c.nodes.lattice_radius, c.nodes.lattice_shift);
}

inline std::string ratio_csv(const RatioStat& s) {
  std::string out = "log_r,value\r\n";
  for (const auto& p : s.samples()) out += format_g17(p.log_r) + ',' + format_g17(p.value) + "\r\n";
  return out;
}

/// Probe points for the density check: `rays` directions, log r stepped over
/// the range the nodes cover.
inline std::vector<Polar> density_probes(const ExperimentConfig& c, const NodeSequence& nodes) {
  double lo, hi;
  if (c.nodes.generator == "lattice") {
    lo = std::log(0.5 * c.nodes.lattice_spacing);
    hi = std::log(c.nodes.lattice_radius - 2.0 * c.nodes.lattice_spacing);
  } else {
    lo = nodes[0].is_origin() && nodes.size() > 1 ? nodes[1].log_r : nodes[0].log_r;
    hi = nodes[nodes.size() - 1].log_r;
  }
  if (!(hi > lo)) throw config_error("[density] node coverage too small for probes");
  std::vector<Polar> out;
  for (double s = lo; s <= hi; s += c.density_step)
    for (unsigned j = 0; j < c.density_rays; ++j)
      out.push_back({s, wrap_phase(two_pi * (j + 0.5) / c.density_rays)});
  return out;
}

}  // namespace detail

inline RunResult run_moments(const ExperimentConfig& c, const RunOptions& opt) {
  RunResult r;
  const MomentTable t = get_table(c.weight(), c.n_max, c.tol, opt);
  r.table_digest = t.digest();
  std::string csv = "n,w_n\r\n";
  for (std::size_t n = 0; n <= t.n_max(); ++n)
    csv += std::to_string(n) + ',' + format_g17(t[n]) + "\r\n";
  r.add("moments.csv", csv);
  r.add("moments.wn", t.render());
  r.summary["weight"] = t.weight().descriptor();
  r.summary["n_max"] = t.n_max();
  r.summary["table_digest"] = t.digest();

  if (c.growth_delta) {
    const GrowthReport rep = verify_moment_growth(t, *c.growth_delta, c.thresholds.growth_bound);
    std::string l = "n,ratio\r\n";
    for (std::size_t n = 2; n < rep.ratio.size(); ++n)
      l += std::to_string(n) + ',' + format_g17(rep.ratio[n]) + "\r\n";
    r.add("growth.csv", l);
    r.add_json("growth.json", {{"delta", rep.delta},
                               {"c", rep.c},
                               {"max_ratio", rep.max_ratio},
                               {"argmax", rep.argmax},
                               {"bound", c.thresholds.growth_bound},
                               {"tail_nonincreasing", rep.tail_nonincreasing}});
    r.check("growth.bounded", rep.bounded,
            detail::check_detail("max ratio", rep.max_ratio, "<=", c.thresholds.growth_bound));
    r.check("growth.tail_nonincreasing", rep.tail_nonincreasing, "ratio over the last half");
  }
  return r;
}

inline RunResult run_nodes(const ExperimentConfig& c, const RunOptions& opt) {
  RunResult r;
  std::optional<MomentTable> t;
  if (c.nodes.generator == "partC" || c.gap_count)
    t = get_table(c.weight(), c.n_max, c.tol, opt);
  const NodeSequence nodes = detail::build_nodes(c, t ? &*t : nullptr);
  if (t) r.table_digest = t->digest();
  r.node_digest = nodes.digest();
  r.add("nodes.csv", nodes.to_csv());
  r.summary["generator"] = to_string(nodes.generator());
  r.summary["count"] = nodes.size();
  r.summary["theta"] = nodes.theta_rule().to_string();
  r.summary["node_digest"] = nodes.digest();

  if (c.gap_count) {
    const GapReport rep = verify_moment_gap(*t, *c.gap_count, c.gap_s_max);
    std::string csv = "n,min\r\n";
    for (std::size_t n = 1; n <= rep.per_n_min.size(); ++n)
      csv += std::to_string(n) + ',' + format_g17(rep.per_n_min[n - 1]) + "\r\n";
    r.add("gap.csv", csv);
    r.add_json("gap.json", {{"kappa", rep.kappa},
                              {"argmin_n", rep.argmin_n},
                              {"argmin_s", rep.argmin_s},
                              {"finite", rep.finite},
                              {"tail_nondecreasing", rep.tail_nondecreasing}});
    r.check("gap.finite", rep.finite, "kappa = " + format_g17(rep.kappa));
    r.check("gap.tail_nondecreasing", rep.tail_nondecreasing, "per-n minima over the final third");
  }

  if (c.density) {
    const auto probes = detail::density_probes(c, nodes);
    const auto rep = separation_density_check(c.weight(), nodes, c.thresholds.density_c_sep,
                                              c.thresholds.density_c_dens, probes);
    r.add_json("density.json", {{"c_sep", c.thresholds.density_c_sep},
                                {"c_dens", c.thresholds.density_c_dens},
                                {"min_separation_ratio", rep.min_separation_ratio},
                                {"max_density_ratio", rep.max_density_ratio},
                                {"separation_ok", rep.separation_ok},
                                {"density_ok", rep.density_ok},
                                {"probes", probes.size()}});
    const bool want = c.density_expect == "pass";
    // A sequence expected to fail density is not held to separation either.
    if (want)
      r.check("separation", rep.separation_ok,
              detail::check_detail("min dist/rho", rep.min_separation_ratio, ">=",
                                   c.thresholds.density_c_sep));
    r.check("density", rep.density_ok == want,
            detail::check_detail("max dist/rho", rep.max_density_ratio, want ? "<=" : ">",
                                 c.thresholds.density_c_dens));
  }
  return r;
}

inline ojson trend_json(const TrendReport& rep) {
  ojson rows = ojson::array();
  for (const auto& row : rep.rows)
    rows.push_back({{"N", row.N}, {"c_N", row.c}, {"C_N", row.C}, {"cond", row.cond}});
  return {{"classification", rep.classification()},
          {"stable", rep.stable},
          {"degenerating", rep.degenerating},
          {"interlacing_ok", rep.interlacing_ok},
          {"c_drop", rep.c_drop},
          {"cond_growth", rep.cond_growth},
          {"thresholds",
           {{"stable_factor", rep.thresholds.stable_factor},
            {"degenerate_factor", rep.thresholds.degenerate_factor},
            {"interlace_tol", rep.thresholds.interlace_tol}}},
          {"rows", rows}};
}

inline RunResult run_gram(const ExperimentConfig& c, const RunOptions& opt) {
  RunResult r;
  const MomentTable t = get_table(c.weight(), c.n_max, c.tol, opt);
  const NodeSequence nodes = detail::build_nodes(c, &t);
  r.table_digest = t.digest();
  r.node_digest = nodes.digest();
  const TrendReport rep = basis_trend(t, nodes, c.n_list, c.thresholds.trend(), opt.jobs);
  r.add("trend.csv", rep.to_csv());
  ojson j = trend_json(rep);
  j["node_digest"] = nodes.digest();
  j["table_digest"] = t.digest();
  r.add_json("trend.json", j);
  r.summary["classification"] = rep.classification();
  r.check("interlacing", rep.interlacing_ok, "nested sections");
  if (c.gram_expect != "any")
    r.check("classification", rep.classification() == c.gram_expect,
            rep.classification() + " (expected " + c.gram_expect + ")");
  return r;
}

inline RunResult run_interpolate(const ExperimentConfig& c, const RunOptions& opt) {
  RunResult r;
  const RadialWeight w = c.weight();
  const MomentTable t = get_table(w, c.n_max, c.tol, opt);
  const NodeSequence nodes = detail::build_nodes(c, &t);
  r.table_digest = t.digest();
  r.node_digest = nodes.digest();
  const PolarGrid grid(c.grid);
  const EquivalenceReport e = verify_norm_equivalence(t, nodes, w, grid, c.support, c.trials, c.sparsity, c.seed,
                                   opt.jobs);
  std::string csv = "trial,ratio\r\n";
  for (std::size_t i = 0; i < e.ratio.size(); ++i)
    csv += std::to_string(i) + ',' + format_g17(e.ratio[i]) + "\r\n";
  r.add("equivalence.csv", csv);
  r.add_json("equivalence.json", e.to_json());
  const auto& th = c.thresholds;
  r.check("resample", e.max_resample_error <= th.resample_tol,
          detail::check_detail("max relative error", e.max_resample_error, "<=",
                               th.resample_tol));
  r.check("spread", e.spread() <= th.equivalence_max_spread,
          detail::check_detail("C/c", e.spread(), "<=", th.equivalence_max_spread));
  double smax = 0;
  for (double s : e.singleton) smax = std::max(smax, std::sqrt(s));
  r.check("singleton_norm", smax <= th.basis_max_norm,
          detail::check_detail("max ||E||", smax, "<=", th.basis_max_norm));

  if (w.kind() == RadialWeight::Kind::log_power && w.param() == 2.0 &&
      nodes.generator() == NodeGenerator::part_b) {
    const DecayReport d = verify_basis_decay(t, nodes, w, grid, c.m_first, c.m_last, opt.jobs);
    r.add("decay.csv", d.to_csv());
    r.add_json("decay.json", d.to_json());
    r.check("decay_norm", d.max_norm <= th.basis_max_norm,
            detail::check_detail("max ||E||", d.max_norm, "<=", th.basis_max_norm));
    r.check("decay_rate", d.c_hat > th.decay_min_rate,
            detail::check_detail("c_hat", d.c_hat, ">", th.decay_min_rate));
  }
  return r;
}

inline RunResult run_product_check(const ExperimentConfig& c, const RunOptions&) {
  RunResult r;
  const RadialWeight w = c.weight();
  const NodeSequence nodes = detail::build_nodes(c, nullptr);
  r.node_digest = nodes.digest();
  std::vector<Polar> grid;
  const auto steps = static_cast<std::size_t>(
      std::floor((c.product_t_max - c.product_t_min) / c.product_t_step + 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) {
    const double s = c.product_t_min + static_cast<double>(i) * c.product_t_step;
    for (unsigned j = 0; j < c.product_angles; ++j)
      grid.push_back({s, wrap_phase(two_pi * j / c.product_angles)});
  }
  const RatioStat sp = verify_product_estimate(nodes, w, grid, c.product_eps);
  r.add("product.csv", detail::ratio_csv(sp));
  r.add_json("product.json", sp.to_json());
  const auto& th = c.thresholds;
  r.check("product.width", sp.width() <= th.product_max_width,
          detail::check_detail("width", sp.width(), "<=", th.product_max_width));
  r.check("product.drift", std::abs(sp.drift()) <= th.product_max_drift,
          detail::check_detail("|drift|", std::abs(sp.drift()), "<=", th.product_max_drift));
  if (c.product_derivative) {
    const RatioStat sd = verify_derivative_estimate(nodes, w, c.product_eps);
    r.add("derivative.csv", detail::ratio_csv(sd));
    r.add_json("derivative.json", sd.to_json());
    r.check("derivative.width", sd.width() <= th.derivative_max_width,
            detail::check_detail("width", sd.width(), "<=", th.derivative_max_width));
  }
  return r;
}

inline RunResult run_kernel_check(const ExperimentConfig& c, const RunOptions& opt) {
  RunResult r;
  const RadialWeight w = c.weight();
  const MomentTable t = get_table(w, c.n_max, c.tol, opt);
  r.table_digest = t.digest();
  const double decades = std::log10(c.kernel_r_max / c.kernel_r_min);
  const auto grid = geometric_grid(c.kernel_r_min, decades, c.kernel_points_per_decade);
  const RatioStat s = verify_kernel_norm_asymptotic(w, t, grid, c.kernel_norm_form());
  r.add("kernel.csv", detail::ratio_csv(s));
  r.add_json("kernel.json", s.to_json());
  const auto& th = c.thresholds;
  r.check("kernel.width", s.width() <= th.kernel_max_width,
          detail::check_detail("width", s.width(), "<=", th.kernel_max_width));
  r.check("kernel.drift", std::abs(s.drift()) <= th.kernel_max_drift,
          detail::check_detail("|drift|", std::abs(s.drift()), "<=", th.kernel_max_drift));
  return r;
}

struct BariSummary {
  std::vector<BariTerm> terms;
  std::vector<double> partial;  // partial[i] = sum_{k <= i} (S1 + S2)
  bool ordered = true;          // 0 <= S2 <= S1 <= 1
  double max_scaled_s1 = 0;     // max (n+1)^2 S1
  double max_late_increment = 0;
};

inline BariSummary bari_summary(const MomentTable& t, const NodeSequence& nodes, std::size_t last,
                                std::size_t flat_from) {
  BariSummary b;
  double acc = 0;
  for (std::size_t n = 1; n <= last; ++n) {
    const BariTerm term = bari_proximity(t, nodes, n);
    b.terms.push_back(term);
    acc += term.S1 + term.S2;
    b.partial.push_back(acc);
    if (!(term.S2 >= 0 && term.S2 <= term.S1 && term.S1 <= 1)) b.ordered = false;
    const double np1 = static_cast<double>(n) + 1.0;
    b.max_scaled_s1 = std::max(b.max_scaled_s1, np1 * np1 * term.S1);
    if (n >= flat_from) b.max_late_increment = std::max(b.max_late_increment, term.S1 + term.S2);
  }
  return b;
}

inline RunResult run_bari(const ExperimentConfig& c, const RunOptions& opt) {
  RunResult r;
  if (c.nodes.generator != "partC") throw config_error("[nodes] generator: bari needs partC");
  if (c.bari_last + 1 > c.nodes.count)
    throw config_error("[bari] last: must be below [nodes] count");
  const MomentTable t = get_table(c.weight(), c.n_max, c.tol, opt);
  const NodeSequence nodes = detail::build_nodes(c, &t);
  r.table_digest = t.digest();
  r.node_digest = nodes.digest();
  const auto& th = c.thresholds;
  const BariSummary b = bari_summary(t, nodes, c.bari_last, th.bari_flat_from);
  std::string csv = "n,S1,S2,partial\r\n";
  for (std::size_t i = 0; i < b.terms.size(); ++i)
    csv += std::to_string(b.terms[i].n) + ',' + format_g17(b.terms[i].S1) + ',' +
           format_g17(b.terms[i].S2) + ',' + format_g17(b.partial[i]) + "\r\n";
  r.add("bari.csv", csv);
  r.add_json("bari.json", {{"ordered", b.ordered},
                           {"max_scaled_S1", b.max_scaled_s1},
                           {"max_late_increment", b.max_late_increment},
                           {"flat_from", th.bari_flat_from},
                           {"sum", b.partial.back()}});
  r.check("bari.ordered", b.ordered, "0 <= S2 <= S1 <= 1");
  r.check("bari.scaled_s1", b.max_scaled_s1 <= th.bari_max_scaled_s1,
          detail::check_detail("max (n+1)^2 S1", b.max_scaled_s1, "<=", th.bari_max_scaled_s1));
  r.check("bari.flat", b.max_late_increment < th.bari_flat_increment,
          detail::check_detail("max increment", b.max_late_increment, "<",
                               th.bari_flat_increment));
  return r;
}

}  // namespace fockrb
