// fcstokes: finite cell Stokes solver with an adaptive geometric multigrid
// method and a restricted additive smoother.
//
// Subcommands: solve | mms | policy-bench | partition-check | mesh-dump |
// export-operator. Every config key is also a CLI flag of the same name;
// flags override the config file.
//
// Exit codes: 0 success/converged, 2 verification failure, 1 error.

#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "fcs/bench.hpp"
#include "fcs/config.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

void add_config_flags(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path, "config file (key = value)");
  for (const std::string& key : fcs::bench::RunConfig::keys()) {
    sub->add_option_function<std::string>(
        "--" + key,
        [&opts, key](const std::string& v) { opts.overrides[key] = v; },
        "override config key " + key);
  }
}

fcs::bench::RunConfig make_config(const CommonOpts& opts,
                                  const fcs::bench::RunConfig& defaults) {
  fcs::bench::RunConfig cfg = opts.config_path.empty()
                                  ? defaults
                                  : fcs::bench::RunConfig::load(opts.config_path);
  for (const auto& [key, value] : opts.overrides) cfg.set(key, value);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite cell Stokes solver: adaptive geometric multigrid with a "
               "restricted additive smoother"};
  app.require_subcommand(1);

  CommonOpts solve_opts, mms_opts, bench_opts, part_opts, dump_opts, exp_opts;

  CLI::App* solve = app.add_subcommand("solve", "run the configured benchmark");
  add_config_flags(solve, solve_opts);
  int family = 0;
  solve->add_option("--family", family,
                    "channel family member 3|4|5 (sets base_level/r_max/levels)");

  CLI::App* mms = app.add_subcommand(
      "mms", "manufactured-solution convergence verification");
  add_config_flags(mms, mms_opts);

  CLI::App* pbench =
      app.add_subcommand("policy-bench", "time the smoother cache policies");
  add_config_flags(pbench, bench_opts);
  int sweeps = 20;
  std::string bench_csv = "policy_bench.csv";
  pbench->add_option("--sweeps", sweeps, "timed sweeps per policy (>= 20)");
  pbench->add_option("--csv", bench_csv, "output CSV path");

  CLI::App* pcheck = app.add_subcommand(
      "partition-check", "verify bitwise replication across simulated ranks");
  add_config_flags(pcheck, part_opts);
  bool negative = false;
  pcheck->add_flag("--negative-control", negative,
                   "defeat deterministic accumulation; the check must fail");

  CLI::App* dump = app.add_subcommand("mesh-dump", "write the leaf tiling as CSV");
  add_config_flags(dump, dump_opts);
  std::string leaves_csv = "mesh.csv", cut_csv;
  dump->add_option("--leaves", leaves_csv, "leaf CSV path");
  dump->add_option("--cut-stats", cut_csv,
                   "also write per-cell cut statistics to this path");

  CLI::App* expop = app.add_subcommand(
      "export-operator", "write operator/rhs in coordinate ASCII form");
  add_config_flags(expop, exp_opts);
  std::string prefix = "operator";
  expop->add_option("--prefix", prefix, "output path prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      fcs::bench::RunConfig defaults;
      if (family != 0) defaults.apply_channel_family(family);
      fcs::bench::RunConfig cfg = make_config(solve_opts, defaults);
      if (family != 0 && !solve_opts.config_path.empty())
        cfg.apply_channel_family(family);
      return fcs::bench::cmd_solve(cfg, std::cout);
    }
    if (mms->parsed()) {
      fcs::bench::RunConfig defaults;
      defaults.case_name = "mms";
      defaults.base_level = 4;  // three runs: 1/16, 1/32, 1/64
      return fcs::bench::cmd_mms(make_config(mms_opts, defaults), std::cout);
    }
    if (pbench->parsed()) {
      if (sweeps < 20) sweeps = 20;
      return fcs::bench::cmd_policy_bench(make_config(bench_opts, {}), sweeps,
                                          bench_csv, std::cout);
    }
    if (pcheck->parsed()) {
      return fcs::bench::cmd_partition_check(make_config(part_opts, {}),
                                             negative, std::cout);
    }
    if (dump->parsed()) {
      return fcs::bench::cmd_mesh_dump(make_config(dump_opts, {}), leaves_csv,
                                       cut_csv, std::cout);
    }
    if (expop->parsed()) {
      return fcs::bench::cmd_export_operator(make_config(exp_opts, {}), prefix,
                                             std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
