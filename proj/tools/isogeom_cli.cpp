// Command-line front end: expect | simulate | bounds | selftest.
// Exit codes: 0 pass, 1 statistical failure, 2 config error, 3 internal error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "isogeom/harness.hpp"

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw isogeom::ConfigError("cannot write " + path);
  out << content;
}

struct CommonOpts {
  std::string config_path;
  std::string out;
  std::string format;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = -1;
};

isogeom::ExperimentConfig load(const CommonOpts& opts) {
  auto cfg = isogeom::ExperimentConfig::from_file(opts.config_path);
  if (opts.seed_set) cfg.master_seed = opts.seed;
  if (opts.threads >= 0) cfg.threads = opts.threads;
  if (!opts.out.empty()) cfg.output = opts.out;
  if (!opts.format.empty()) cfg.format = opts.format;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool need_config = true) {
  auto* c = cmd->add_option("--config", opts.config_path, "experiment config file");
  if (need_config) c->required();
  cmd->add_option("--seed", opts.seed, "override master_seed")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--threads", opts.threads, "worker threads (0 = auto)");
  cmd->add_option("--out", opts.out, "output path stem");
  cmd->add_option("--format", opts.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"closed-form expectations and Monte Carlo verification for "
               "random polynomials on the circle, torus, and sphere"};
  app.require_subcommand(1);

  CommonOpts expect_opts, sim_opts, bounds_opts;
  auto* cmd_expect = app.add_subcommand("expect", "print closed-form expectation table");
  add_common(cmd_expect, expect_opts);
  auto* cmd_sim = app.add_subcommand("simulate", "run Monte Carlo trials against closed forms");
  add_common(cmd_sim, sim_opts);
  auto* cmd_bounds = app.add_subcommand("bounds", "check the L^p / sup bound suite");
  add_common(cmd_bounds, bounds_opts);
  app.add_subcommand("selftest", "run reduced invariant suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_expect->parsed()) {
      const auto cfg = load(expect_opts);
      const auto rows = isogeom::cmd_expect(cfg);
      const std::string body = cfg.format == "csv" ? isogeom::expect_to_csv(rows)
                                                   : isogeom::expect_to_json(rows);
      std::cout << isogeom::expect_to_text(rows);
      if (!cfg.output.empty()) {
        write_file(cfg.output + (cfg.format == "csv" ? ".csv" : ".json"), body);
        std::cout << "wrote " << cfg.output
                  << (cfg.format == "csv" ? ".csv" : ".json") << "\n";
      }
      return 0;
    }
    if (cmd_sim->parsed()) {
      const auto cfg = load(sim_opts);
      const auto reports = isogeom::cmd_simulate(cfg);
      bool all_pass = true;
      for (const auto& r : reports) {
        all_pass = all_pass && r.pass;
        std::printf("%-14s t=%-8.4g n=%-8ld mean=%-14.8g se=%-12.6g ref=%-14.8g z=%-10.4g %s%s\n",
                    isogeom::quantity_name(r.quantity), r.t_scaled,
                    r.estimate.n, r.estimate.mean, r.estimate.stderr_val,
                    r.closed_form.value, r.z, r.pass ? "PASS" : "FAIL",
                    r.retried ? " (retried 4x)" : "");
      }
      const std::string json = isogeom::reports_to_json(reports, cfg, true);
      const std::string csv = isogeom::reports_to_csv(reports, cfg);
      if (!cfg.output.empty()) {
        write_file(cfg.output + ".json", json);
        write_file(cfg.output + ".csv", csv);
        std::cout << "wrote " << cfg.output << ".json and " << cfg.output
                  << ".csv\n";
      } else if (cfg.format == "csv") {
        std::cout << csv;
      } else {
        std::cout << json;
      }
      return all_pass ? 0 : 1;
    }
    if (cmd_bounds->parsed()) {
      const auto cfg = load(bounds_opts);
      bool all_pass = false;
      const std::string report = isogeom::cmd_bounds(cfg, all_pass);
      std::cout << report;
      if (!cfg.output.empty()) write_file(cfg.output + ".txt", report);
      return all_pass ? 0 : 1;
    }
    // selftest
    return isogeom::cmd_selftest(std::cout) == 0 ? 0 : 1;
  } catch (const isogeom::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
