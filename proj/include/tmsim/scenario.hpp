#ifndef TMSIM_SCENARIO_HPP
#define TMSIM_SCENARIO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tmsim/metrics.hpp"
#include "tmsim/scheduler.hpp"
#include "tmsim/traffic.hpp"
#include "tmsim/types.hpp"

namespace tmsim {

enum class ScenarioKind { Proactive, Mpi, Custom };

struct PingPongConfig {
  int src_host = 1;
  int dst_host = 7;
  std::vector<int> message_sizes = {64,   128,  256,  512, 1024,
                                    2048, 4096, 8192, 16384};
  int iterations_per_size = 100;
  double timeout_s = 10.0;
  double start_s = 3.0;
};

struct CustomFlow {
  int src_host = 0;
  int dst_host = 0;
  int priority = 1;
  double rate_bytes_per_sec = 0.0;
  int packet_size_bytes = kDefaultMtu;
  double start_s = 0.0;
  double stop_s = 0.0;
  int quantum_bytes = 0;  // DRR weight of this flow's queue; 0 = scenario default
};

// Declarative run description. PROACTIVE: low-priority flows saturate one
// shared egress link for the whole run while a high-priority flow is
// injected mid-run. MPI: low-priority flows congest the tree uplinks while a
// ping-pong workload measures high-priority latency. CUSTOM: explicit flows.
struct ScenarioSpec {
  std::string name = "scenario";
  uint64_t seed = 1;
  ScenarioKind kind = ScenarioKind::Proactive;
  Policy policy = Policy::BestEffort;
  std::string topology;  // "single" or "tree12"; defaulted by kind

  double link_capacity_bytes_per_sec = 1.25e6;  // 10 Mbps
  double duration_s = 270.0;

  double hp_start_s = 90.0;  // PROACTIVE injection window
  double hp_stop_s = 180.0;
  double hp_share = 0.6;     // high-priority fraction of each link
  int lp_flows = 6;
  double lp_rate_bytes_per_sec = 0.0;  // 0 = kind default
  double hp_rate_bytes_per_sec = 0.0;  // 0 = kind default
  int packet_size_bytes = kDefaultMtu;

  PingPongConfig pingpong;        // MPI
  std::vector<CustomFlow> flows;  // CUSTOM

  int mtu = kDefaultMtu;
  int overhead_bytes = 42;   // per-packet goodput deduction in throughput
  int quantum_bytes = kDefaultMtu;
  int egress_capacity_pkts = 64;   // per egress queue
  int output_capacity_pkts = 64;   // per port
  int host_tx_capacity_pkts = 1024;
  bool clamp_idle_burst = true;
  double cbr_jitter_frac = 0.25;
  bool start_jitter = true;
  double throughput_window_s = 1.0;
  double occupancy_period_s = 0.01;
  uint64_t max_events = 500000000ULL;
};

// Parses the JSON text; throws ConfigError with a position-annotated message
// on malformed input. Structural invariants are checked by
// validate_scenario, not here.
ScenarioSpec parse_scenario(const std::string& json_text);
ScenarioSpec load_scenario_file(const std::string& path);

// Canonical resolved form (embedded in the run manifest).
std::string scenario_to_json(const ScenarioSpec& spec);

// Every violated invariant, one message each; empty means the spec is valid.
std::vector<std::string> validate_scenario(const ScenarioSpec& spec);

struct BufferPeak {
  std::string node;
  std::string buffer;
  int peak = 0;
  int capacity = 0;
};

struct RunResult {
  std::string name;
  SimTime end_time;
  uint64_t events = 0;
  bool ok = false;
  std::vector<std::string> violations;
  MetricsSink metrics;
  std::vector<LatencySample> latency;
  std::vector<std::pair<int, int>> latency_timeouts;  // (size, iteration)
  std::vector<BufferPeak> output_peaks;
  std::vector<BufferPeak> egress_peaks;  // per queue
  uint64_t generated_pkts = 0;
  uint64_t delivered_pkts = 0;
  uint64_t dropped_pkts = 0;
  double wall_seconds = 0.0;

  RunResult() : metrics(SimTime::from_sec(1.0), 0) {}
};

// Builds the topology, installs flow tables and queue configs, runs the
// engine and (when out_dir is non-empty) exports CSVs plus manifest.json.
// spec_source, when given, is the raw spec file text used for the manifest
// hash; otherwise the canonical form is hashed.
RunResult run_scenario(const ScenarioSpec& spec, const std::string& out_dir = "",
                       const std::string& spec_source = "");

enum class CommandMode { StrictFull, StrictProactiveAdjust, RlSpDrr };

struct CommandCountQuery {
  long long n_switches = 1;        // N
  long long procs_per_switch = 1;  // M
  long long prioritized = 0;       // P
  CommandMode mode = CommandMode::StrictFull;
};

// Control-plane commands needed to establish the bandwidth allocation:
// N*M for fully rate-limited strict priority, N*(M-P) when only the
// low-priority rates must be adjusted, N*P for RL-SP-DRR.
long long command_count(const CommandCountQuery& q);

}  // namespace tmsim

#endif
