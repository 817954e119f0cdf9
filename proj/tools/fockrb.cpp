// fockrb: configuration-driven runs of the verification pipelines.
//
// Exit status: 0 all checks passed, 1 a check failed, 2 configuration or
// usage error, 3 a module error (error.json is written to the output dir).

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "json.hpp"

#include "fockrb/config.hpp"
#include "fockrb/runner.hpp"
#include "fockrb/testing/acceptance.hpp"

namespace fs = std::filesystem;
using fockrb::ojson;

namespace {

enum Exit { ok = 0, check_failed = 1, config_failed = 2, module_failed = 3 };

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::string cache;
};

ojson error_record(const fockrb::error& e) {
  ojson j{{"kind", e.kind()}, {"message", e.what()}};
  if (auto* t = dynamic_cast<const fockrb::truncation_error*>(&e))
    j["required_n_max"] = t->required_n_max();
  if (auto* r = dynamic_cast<const fockrb::range_error*>(&e))
    j["suggested_r_max"] = r->suggested_r_max();
  return j;
}

void write_error(const std::string& out, const ojson& rec) {
  if (out.empty()) return;
  try {
    fs::create_directories(out);
    fockrb::write_file(fs::path(out) / "error.json", rec.dump(2) + "\n");
  } catch (const std::exception&) {
  }
}

ojson manifest(const std::string& command, const Flags& f, const fockrb::ExperimentConfig& cfg,
               const std::string& config_text, const fockrb::RunResult& r, bool pass,
               double seconds) {
  ojson echo = ojson::object();
  for (const auto& [k, v] : cfg.echo) echo[k] = v;
  ojson checks = ojson::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  ojson artifacts = ojson::array();
  for (const auto& a : r.artifacts)
    artifacts.push_back(
        {{"file", a.name}, {"sha256", fockrb::sha256_hex(a.content)}, {"bytes", a.content.size()}});
  return {{"tool", "fockrb"},
          {"version", FOCKRB_VERSION},
          {"command", command},
          {"config_file", f.config.empty() ? ojson(nullptr) : ojson(f.config)},
          {"config_digest", fockrb::sha256_hex(config_text)},
          {"config", echo},
          {"seed", cfg.seed},
          {"jobs", f.jobs},
          {"digests", {{"table", r.table_digest}, {"nodes", r.node_digest}}},
          {"summary", r.summary},
          {"checks", checks},
          {"artifacts", artifacts},
          {"status", pass ? "pass" : "fail"},
          {"wall_time_s", seconds}};
}

using Pipeline = fockrb::RunResult (*)(const fockrb::ExperimentConfig&, const fockrb::RunOptions&);

int run_command(const std::string& command, const Flags& f, Pipeline pipeline) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string out = f.out.empty() ? "fockrb-out/" + command : f.out;
  fockrb::ExperimentConfig cfg;
  std::string config_text;
  try {
    if (!f.config.empty()) {
      config_text = fockrb::read_file(f.config);
      cfg = fockrb::parse_config_string(config_text, f.config);
    }
    if (f.seed) cfg.seed = *f.seed;
  } catch (const fockrb::error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    write_error(out, error_record(e));
    return config_failed;
  }

  const fockrb::RunOptions opt{f.cache, f.jobs};
  fockrb::RunResult r;
  bool pass;
  try {
    if (pipeline) {
      r = pipeline(cfg, opt);
      pass = r.pass();
    } else {
      const auto results = fockrb::acceptance::run_all(cfg.thresholds, f.jobs, std::cout);
      pass = true;
      for (const auto& x : results) {
        pass = pass && x.pass;
        r.check("criterion " + std::to_string(x.id), x.pass, x.detail);
      }
      r.add_json("acceptance.json", fockrb::acceptance::to_json(results));
    }
  } catch (const fockrb::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    write_error(out, error_record(e));
    return config_failed;
  } catch (const fockrb::error& e) {
    std::cerr << e.kind() << " error: " << e.what() << "\n";
    write_error(out, error_record(e));
    return module_failed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    write_error(out, {{"kind", "internal"}, {"message", e.what()}});
    return module_failed;
  }

  try {
    fs::create_directories(out);
    for (const auto& a : r.artifacts) fockrb::write_file(fs::path(out) / a.name, a.content);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fockrb::write_file(fs::path(out) / "manifest.json",
                       manifest(command, f, cfg, config_text, r, pass, secs).dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return module_failed;
  }
  if (pipeline)
    for (const auto& c : r.checks)
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  std::cout << (pass ? "ok" : "checks failed") << ", artifacts in " << out << "\n";
  return pass ? ok : check_failed;
}

int cache_command(const std::string& action, const std::string& dir) {
  if (dir.empty()) {
    std::cerr << "cache: give the directory with --cache or as the second argument\n";
    return config_failed;
  }
  std::vector<fockrb::CacheEntry> entries;
  try {
    entries = fockrb::scan_cache(dir);
  } catch (const fockrb::error& e) {
    std::cerr << "cache: " << e.what() << "\n";
    return config_failed;
  }
  int bad = 0;
  for (const auto& e : entries) {
    if (!e.valid) ++bad;
    if (action == "list") {
      std::cout << e.file << "  " << e.weight << "  n_max=" << e.n_max << "  tol=" << e.tol << "  "
                << e.method << "  " << (e.valid ? "ok" : "CORRUPT") << "\n";
    } else if (action == "verify") {
      std::cout << (e.valid ? "ok       " : "CORRUPT  ") << e.file
                << (e.valid ? "" : "  (" + e.problem + ")") << "\n";
    } else if (!e.valid) {
      fs::remove(fs::path(dir) / e.file);
      std::cout << "removed " << e.file << "\n";
    }
  }
  if (action == "verify") {
    std::cout << entries.size() - bad << " valid, " << bad << " corrupt\n";
    return bad ? check_failed : ok;
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fockrb: kernel systems and node sequences for radial weights"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", FOCKRB_VERSION);

  Flags f;
  app.add_option("--config", f.config, "experiment config (INI)")->check(CLI::ExistingFile);
  app.add_option("--out", f.out, "output directory (default fockrb-out/<command>)");
  app.add_option("--seed", f.seed, "seed for theta draws and random data");
  app.add_option("--jobs", f.jobs, "worker threads (0: all cores)");
  app.add_option("--cache", f.cache, "moment table cache directory");

  struct Sub {
    const char* name;
    const char* help;
    Pipeline pipeline;
  };
  const Sub subs[] = {
      {"moments", "moment table, optional growth check", fockrb::run_moments},
      {"nodes", "node sequence, optional gap and density checks", fockrb::run_nodes},
      {"gram", "finite-section Riesz bound trend", fockrb::run_gram},
      {"interpolate", "interpolation round trip and basis decay", fockrb::run_interpolate},
      {"product-check", "canonical product and derivative estimates", fockrb::run_product_check},
      {"kernel-check", "kernel norm asymptotics", fockrb::run_kernel_check},
      {"bari", "Bari proximity terms", fockrb::run_bari},
      {"verify", "full acceptance suite", nullptr},
  };
  std::string chosen;
  Pipeline pipeline = nullptr;
  for (const auto& s : subs) {
    app.add_subcommand(s.name, s.help)->callback([&chosen, &pipeline, s] {
      chosen = s.name;
      pipeline = s.pipeline;
    });
  }
  std::string cache_action, cache_dir;
  auto* cache = app.add_subcommand("cache", "list, verify or purge cached moment tables");
  cache->add_option("action", cache_action, "list | verify | purge")
      ->required()
      ->check(CLI::IsMember({"list", "verify", "purge"}));
  cache->add_option("path", cache_dir, "cache directory");
  cache->callback([&] { chosen = "cache"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_failed;
  }
  if (f.jobs == 0) f.jobs = std::max(1u, std::thread::hardware_concurrency());

  if (chosen == "cache") return cache_command(cache_action, cache_dir.empty() ? f.cache : cache_dir);
  return run_command(chosen, f, pipeline);
}
