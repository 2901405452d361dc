#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tmsim/errors.hpp"
#include "tmsim/scenario.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tmsim::IoError("cannot open spec file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string default_out_dir() {
  if (const char* env = std::getenv("TMSIM_OUT_DIR")) return env;
  return "out";
}

int cmd_run(const std::string& spec_path, uint64_t seed, bool seed_set,
            std::string out_root) {
  const std::string source = slurp(spec_path);
  tmsim::ScenarioSpec spec = tmsim::parse_scenario(source);
  if (seed_set) spec.seed = seed;

  if (auto violations = tmsim::validate_scenario(spec); !violations.empty()) {
    std::cerr << "invalid scenario " << spec_path << ":\n";
    for (const auto& v : violations) std::cerr << "  - " << v << '\n';
    return 2;
  }

  if (out_root.empty()) out_root = default_out_dir();
  const std::string out_dir = out_root + "/" + spec.name;
  const tmsim::RunResult result = tmsim::run_scenario(spec, out_dir, source);

  std::cout << result.name << ": simulated " << result.end_time.sec()
            << " s in " << result.wall_seconds << " s wall, " << result.events
            << " events, delivered " << result.delivered_pkts << ", dropped "
            << result.dropped_pkts << "\n"
            << "exports written to " << out_dir << '\n';
  if (!result.ok) {
    std::cerr << "invariant violations:\n";
    for (const auto& v : result.violations) std::cerr << "  - " << v << '\n';
    return 1;
  }
  return 0;
}

int cmd_validate(const std::string& spec_path) {
  const tmsim::ScenarioSpec spec = tmsim::parse_scenario(slurp(spec_path));
  const auto violations = tmsim::validate_scenario(spec);
  if (violations.empty()) {
    std::cout << spec_path << ": OK\n";
    return 0;
  }
  std::cerr << spec_path << ": " << violations.size() << " violation(s)\n";
  for (const auto& v : violations) std::cerr << "  - " << v << '\n';
  return 2;
}

tmsim::CommandMode parse_mode(const std::string& s) {
  if (s == "STRICT_FULL") return tmsim::CommandMode::StrictFull;
  if (s == "STRICT_PROACTIVE_ADJUST")
    return tmsim::CommandMode::StrictProactiveAdjust;
  if (s == "RL_SP_DRR") return tmsim::CommandMode::RlSpDrr;
  throw tmsim::ConfigError("unknown cmdcount mode '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tmsim — deterministic switch traffic-management simulator"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string out_dir;
  uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "run a scenario spec and export metrics");
  run->add_option("spec", spec_path, "scenario spec (JSON)")->required();
  auto* seed_opt = run->add_option("--seed", seed, "override the spec seed");
  run->add_option("--out", out_dir,
                  "output root (default $TMSIM_OUT_DIR or ./out)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a scenario spec");
  validate->add_option("spec", validate_path, "scenario spec (JSON)")->required();

  long long n_switches = 1, procs = 1, prio = 0;
  std::string mode = "STRICT_FULL";
  auto* cmdcount = app.add_subcommand(
      "cmdcount", "control-plane commands needed for a bandwidth allocation");
  cmdcount->add_option("--switches", n_switches, "virtual switches (N)")->required();
  cmdcount->add_option("--procs", procs, "leaf processes per switch (M)")->required();
  cmdcount->add_option("--prio", prio, "prioritized processes (P)")->required();
  cmdcount->add_option("--mode", mode,
                       "STRICT_FULL | STRICT_PROACTIVE_ADJUST | RL_SP_DRR");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(spec_path, seed, seed_opt->count() > 0, out_dir);
    if (validate->parsed()) return cmd_validate(validate_path);
    if (cmdcount->parsed()) {
      tmsim::CommandCountQuery q{n_switches, procs, prio, parse_mode(mode)};
      std::cout << tmsim::command_count(q) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
