// risbench: batch experiment runner for the transmissive-surface sum-rate
// optimizer.  Each subcommand runs one experiment kind and writes a result
// table (CSV or JSON lines); `converge` additionally writes the per-iteration
// trace of the proposed scheme next to the table.

#include "risopt/bench.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  std::string scheme = "all";
  std::uint64_t seed = 0;
  int seeds = 0;
  int threads = 0;
  bool timing = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON run-configuration file");
  cmd->add_option("--seed", args.seed, "master seed (overrides config)");
  cmd->add_option("--seeds", args.seeds, "number of Monte-Carlo seeds (overrides config)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", args.out_path, "output file (default: stdout)");
  cmd->add_option("--format", args.format, "output format")
      ->check(CLI::IsMember({"csv", "jsonl"}));
  cmd->add_option("--scheme", args.scheme, "scheme selection")
      ->check(CLI::IsMember({"all", "proposed", "miso", "equal-power", "random-phase"}));
  cmd->add_option("--threads", args.threads, "worker threads (0 = hardware concurrency)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--timing", args.timing,
                "record wall-clock times (leaving this off keeps output byte-reproducible)");
}

std::vector<risopt::Scheme> parse_schemes(const std::string& name) {
  using risopt::Scheme;
  if (name == "all") {
    return {Scheme::proposed, Scheme::miso, Scheme::equal_power, Scheme::random_phase};
  }
  if (name == "proposed") return {Scheme::proposed};
  if (name == "miso") return {Scheme::miso};
  if (name == "equal-power") return {Scheme::equal_power};
  if (name == "random-phase") return {Scheme::random_phase};
  throw std::invalid_argument("unknown scheme: " + name);
}

// results.csv -> results.trace.csv (the trace format is always CSV).
std::string trace_path_for(const std::string& out) {
  const auto slash = out.find_last_of("/\\");
  const auto dot = out.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return out + ".trace.csv";
  }
  return out.substr(0, dot) + ".trace.csv";
}

void write_table(const risopt::ResultTable& table, const CommonArgs& args) {
  if (!args.out_path.empty()) {
    risopt::emit_file(table, args.out_path, args.format);
  } else if (args.format == "csv") {
    risopt::emit_csv(table, std::cout);
  } else {
    risopt::emit_jsonl(table, std::cout);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sum-rate experiments for a transmissive-surface multi-user downlink"};
  app.require_subcommand(1);
  CommonArgs args;

  CLI::App* converge = app.add_subcommand(
      "converge", "fixed scenario: per-iteration convergence trace plus final table");
  CLI::App* sweep_power =
      app.add_subcommand("sweep-power", "sum rate vs transmit power budget");
  CLI::App* sweep_elements =
      app.add_subcommand("sweep-elements", "sum rate vs number of surface elements");
  CLI::App* single = app.add_subcommand("single", "one scenario, every scheme x seed");
  for (CLI::App* cmd : {converge, sweep_power, sweep_elements, single}) {
    add_common(cmd, args);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    risopt::RunConfig config =
        args.config_path.empty() ? risopt::RunConfig{} : risopt::load_run_config(args.config_path);
    CLI::App* cmd = app.get_subcommands().front();
    if (cmd->count("--seed") > 0) config.master_seed = args.seed;
    if (cmd->count("--seeds") > 0) config.num_seeds = args.seeds;
    if (cmd->count("--threads") > 0) config.threads = args.threads;
    if (cmd->count("--scheme") > 0) config.schemes = parse_schemes(args.scheme);
    if (args.timing) config.ao.record_wall_time = true;

    if (cmd == converge) {
      if (args.out_path.empty()) {
        throw std::runtime_error("converge requires --out <path> (the trace file is written "
                                 "next to it)");
      }
      config.experiment = risopt::ExperimentKind::convergence;
      const risopt::ConvergenceOutput out = risopt::run_convergence(config);
      write_table(out.table, args);
      const std::string trace_path = trace_path_for(args.out_path);
      std::ofstream trace_file(trace_path, std::ios::binary);
      if (!trace_file) throw std::runtime_error("cannot open for writing: " + trace_path);
      risopt::emit_trace_csv(out.trace, config.scenario.users, trace_file);
      trace_file.flush();
      if (!trace_file) throw std::runtime_error("write failed: " + trace_path);
    } else if (cmd == sweep_power) {
      config.experiment = risopt::ExperimentKind::power_sweep;
      write_table(risopt::run_power_sweep(config), args);
    } else if (cmd == sweep_elements) {
      config.experiment = risopt::ExperimentKind::element_sweep;
      write_table(risopt::run_element_sweep(config), args);
    } else {
      config.experiment = risopt::ExperimentKind::single;
      write_table(risopt::run_single(config), args);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "risbench: %s\n", e.what());
    return 1;
  }
  return 0;
}
