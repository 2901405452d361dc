#include "tmsim/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tmsim/engine.hpp"
#include "tmsim/errors.hpp"
#include "tmsim/sha256.hpp"
#include "tmsim/switch.hpp"

namespace tmsim {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

const char* kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Proactive: return "PROACTIVE";
    case ScenarioKind::Mpi: return "MPI";
    case ScenarioKind::Custom: return "CUSTOM";
  }
  return "?";
}

ScenarioKind parse_kind(const std::string& s) {
  if (s == "PROACTIVE") return ScenarioKind::Proactive;
  if (s == "MPI") return ScenarioKind::Mpi;
  if (s == "CUSTOM") return ScenarioKind::Custom;
  throw ConfigError("unknown scenario kind '" + s + "'");
}

Policy parse_policy(const std::string& s) {
  if (s == "NO") return Policy::BestEffort;
  if (s == "STRICT" || s == "STRICT_BPS") return Policy::StrictBps;
  if (s == "STRICT_PPS") return Policy::StrictPps;
  if (s == "RL_SP_DRR") return Policy::RlSpDrr;
  throw ConfigError("unknown policy '" + s + "'");
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

void finalize_defaults(ScenarioSpec& spec) {
  if (spec.topology.empty())
    spec.topology = spec.kind == ScenarioKind::Mpi ? "tree12" : "single";
  const double link = spec.link_capacity_bytes_per_sec;
  // Offered loads sit just under the access-link rate so the sending host's
  // serializer stays empty and generator jitter survives to the contended
  // switch port; the shared bottleneck is still heavily oversubscribed.
  if (spec.lp_rate_bytes_per_sec <= 0.0)
    spec.lp_rate_bytes_per_sec =
        spec.kind == ScenarioKind::Mpi ? 0.8 * link : 0.98 * link;
  if (spec.hp_rate_bytes_per_sec <= 0.0)
    spec.hp_rate_bytes_per_sec = 0.98 * link;
}

}  // namespace

ScenarioSpec parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("spec parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("spec must be a JSON object");

  check_keys(j,
             {"name", "seed", "kind", "policy", "topology",
              "link_capacity_bytes_per_sec", "duration_s", "hp_window_s",
              "hp_share", "lp_flows", "lp_rate_bytes_per_sec",
              "hp_rate_bytes_per_sec", "packet_size_bytes", "pingpong", "flows",
              "mtu", "overhead_bytes", "quantum_bytes", "egress_capacity_pkts",
              "output_capacity_pkts", "host_tx_capacity_pkts",
              "clamp_idle_burst", "cbr_jitter_frac", "start_jitter",
              "throughput_window_s", "occupancy_period_s", "max_events"},
             "scenario");

  ScenarioSpec spec;
  spec.name = get_or<std::string>(j, "name", "scenario");
  spec.seed = get_or<uint64_t>(j, "seed", 1);
  spec.kind = parse_kind(get_or<std::string>(j, "kind", "PROACTIVE"));
  spec.policy = parse_policy(get_or<std::string>(j, "policy", "NO"));
  spec.topology = get_or<std::string>(j, "topology", "");
  spec.link_capacity_bytes_per_sec =
      get_or<double>(j, "link_capacity_bytes_per_sec", 1.25e6);
  spec.duration_s = get_or<double>(j, "duration_s", 270.0);
  if (j.contains("hp_window_s")) {
    const auto& w = j.at("hp_window_s");
    if (!w.is_array() || w.size() != 2)
      throw ConfigError("hp_window_s must be [start, stop]");
    spec.hp_start_s = w.at(0).get<double>();
    spec.hp_stop_s = w.at(1).get<double>();
  }
  spec.hp_share = get_or<double>(j, "hp_share", 0.6);
  spec.lp_flows = get_or<int>(j, "lp_flows", 6);
  spec.lp_rate_bytes_per_sec = get_or<double>(j, "lp_rate_bytes_per_sec", 0.0);
  spec.hp_rate_bytes_per_sec = get_or<double>(j, "hp_rate_bytes_per_sec", 0.0);
  spec.packet_size_bytes = get_or<int>(j, "packet_size_bytes", kDefaultMtu);

  if (j.contains("pingpong")) {
    const json& p = j.at("pingpong");
    check_keys(p,
               {"src_host", "dst_host", "message_sizes", "iterations_per_size",
                "timeout_s", "start_s"},
               "pingpong");
    spec.pingpong.src_host = get_or<int>(p, "src_host", 1);
    spec.pingpong.dst_host = get_or<int>(p, "dst_host", 7);
    spec.pingpong.message_sizes =
        get_or<std::vector<int>>(p, "message_sizes", spec.pingpong.message_sizes);
    spec.pingpong.iterations_per_size = get_or<int>(p, "iterations_per_size", 100);
    spec.pingpong.timeout_s = get_or<double>(p, "timeout_s", 10.0);
    spec.pingpong.start_s = get_or<double>(p, "start_s", 3.0);
  }

  if (j.contains("flows")) {
    for (const json& f : j.at("flows")) {
      check_keys(f,
                 {"src_host", "dst_host", "priority", "rate_bytes_per_sec",
                  "packet_size_bytes", "start_s", "stop_s", "quantum_bytes"},
                 "flows[]");
      CustomFlow cf;
      cf.src_host = get_or<int>(f, "src_host", 0);
      cf.dst_host = get_or<int>(f, "dst_host", 0);
      cf.priority = get_or<int>(f, "priority", 1);
      cf.rate_bytes_per_sec = get_or<double>(f, "rate_bytes_per_sec", 0.0);
      cf.packet_size_bytes = get_or<int>(f, "packet_size_bytes", kDefaultMtu);
      cf.start_s = get_or<double>(f, "start_s", 0.0);
      cf.stop_s = get_or<double>(f, "stop_s", 0.0);
      cf.quantum_bytes = get_or<int>(f, "quantum_bytes", 0);
      spec.flows.push_back(cf);
    }
  }

  spec.mtu = get_or<int>(j, "mtu", kDefaultMtu);
  spec.overhead_bytes = get_or<int>(j, "overhead_bytes", 42);
  spec.quantum_bytes = get_or<int>(j, "quantum_bytes", kDefaultMtu);
  spec.egress_capacity_pkts = get_or<int>(j, "egress_capacity_pkts", 64);
  spec.output_capacity_pkts = get_or<int>(j, "output_capacity_pkts", 64);
  spec.host_tx_capacity_pkts = get_or<int>(j, "host_tx_capacity_pkts", 1024);
  spec.clamp_idle_burst = get_or<bool>(j, "clamp_idle_burst", true);
  spec.cbr_jitter_frac = get_or<double>(j, "cbr_jitter_frac", 0.25);
  spec.start_jitter = get_or<bool>(j, "start_jitter", true);
  spec.throughput_window_s = get_or<double>(j, "throughput_window_s", 1.0);
  spec.occupancy_period_s = get_or<double>(j, "occupancy_period_s", 0.01);
  spec.max_events = get_or<uint64_t>(j, "max_events", 500000000ULL);

  finalize_defaults(spec);
  return spec;
}

ScenarioSpec load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const ScenarioSpec& in) {
  ScenarioSpec spec = in;
  finalize_defaults(spec);
  json j;
  j["name"] = spec.name;
  j["seed"] = spec.seed;
  j["kind"] = kind_name(spec.kind);
  j["policy"] = policy_name(spec.policy);
  j["topology"] = spec.topology;
  j["link_capacity_bytes_per_sec"] = spec.link_capacity_bytes_per_sec;
  j["duration_s"] = spec.duration_s;
  j["hp_window_s"] = {spec.hp_start_s, spec.hp_stop_s};
  j["hp_share"] = spec.hp_share;
  j["lp_flows"] = spec.lp_flows;
  j["lp_rate_bytes_per_sec"] = spec.lp_rate_bytes_per_sec;
  j["hp_rate_bytes_per_sec"] = spec.hp_rate_bytes_per_sec;
  j["packet_size_bytes"] = spec.packet_size_bytes;
  if (spec.kind == ScenarioKind::Mpi) {
    j["pingpong"] = {{"src_host", spec.pingpong.src_host},
                     {"dst_host", spec.pingpong.dst_host},
                     {"message_sizes", spec.pingpong.message_sizes},
                     {"iterations_per_size", spec.pingpong.iterations_per_size},
                     {"timeout_s", spec.pingpong.timeout_s},
                     {"start_s", spec.pingpong.start_s}};
  }
  if (spec.kind == ScenarioKind::Custom) {
    json flows = json::array();
    for (const auto& f : spec.flows)
      flows.push_back({{"src_host", f.src_host},
                       {"dst_host", f.dst_host},
                       {"priority", f.priority},
                       {"rate_bytes_per_sec", f.rate_bytes_per_sec},
                       {"packet_size_bytes", f.packet_size_bytes},
                       {"start_s", f.start_s},
                       {"stop_s", f.stop_s},
                       {"quantum_bytes", f.quantum_bytes}});
    j["flows"] = flows;
  }
  j["mtu"] = spec.mtu;
  j["overhead_bytes"] = spec.overhead_bytes;
  j["quantum_bytes"] = spec.quantum_bytes;
  j["egress_capacity_pkts"] = spec.egress_capacity_pkts;
  j["output_capacity_pkts"] = spec.output_capacity_pkts;
  j["host_tx_capacity_pkts"] = spec.host_tx_capacity_pkts;
  j["clamp_idle_burst"] = spec.clamp_idle_burst;
  j["cbr_jitter_frac"] = spec.cbr_jitter_frac;
  j["start_jitter"] = spec.start_jitter;
  j["throughput_window_s"] = spec.throughput_window_s;
  j["occupancy_period_s"] = spec.occupancy_period_s;
  j["max_events"] = spec.max_events;
  return j.dump(2);
}

namespace {

// Abstract per-port flow grouping shared by validation and the builder:
// port key -> flows crossing it, in deterministic order.
struct PortKeyFlows {
  std::map<std::string, std::vector<FlowId>> flows;
};

std::vector<std::string> port_keys_for(const ScenarioSpec& spec, const FlowId& f) {
  std::vector<std::string> keys;
  if (spec.topology == "single") {
    keys.push_back("SW1->H" + std::to_string(f.dst_host));
  } else {  // tree12
    const int ts = (f.src_host - 1) / 3;
    const int td = (f.dst_host - 1) / 3;
    const std::string last =
        "ToR" + std::to_string(td + 1) + "->H" + std::to_string(f.dst_host);
    if (ts == td) {
      keys.push_back(last);
    } else {
      keys.push_back("ToR" + std::to_string(ts + 1) + "->Agg");
      keys.push_back("Agg->ToR" + std::to_string(td + 1));
      keys.push_back(last);
    }
  }
  return keys;
}

std::vector<FlowId> scenario_flow_ids(const ScenarioSpec& spec) {
  std::vector<FlowId> flows;
  switch (spec.kind) {
    case ScenarioKind::Proactive: {
      const int sink_host = spec.lp_flows + 2;
      for (int i = 1; i <= spec.lp_flows; ++i)
        flows.push_back(FlowId{i, sink_host, i});
      flows.push_back(FlowId{spec.lp_flows + 1, sink_host, 0});
      break;
    }
    case ScenarioKind::Mpi: {
      // All iperf flows are plain low priority (class 1): a flow's class
      // must index into every egress buffer it crosses, and the last tree
      // hop has a single low-priority queue. DRR queues are per flow.
      for (int i = 1; i <= spec.lp_flows; ++i)
        flows.push_back(FlowId{i, i + 6, 1});
      flows.push_back(FlowId{spec.pingpong.src_host, spec.pingpong.dst_host, 0});
      flows.push_back(FlowId{spec.pingpong.dst_host, spec.pingpong.src_host, 0});
      break;
    }
    case ScenarioKind::Custom:
      for (const auto& f : spec.flows)
        flows.push_back(FlowId{f.src_host, f.dst_host, f.priority});
      break;
  }
  return flows;
}

int single_switch_hosts(const ScenarioSpec& spec) {
  if (spec.kind == ScenarioKind::Proactive) return spec.lp_flows + 2;
  int n = 2;
  for (const auto& f : spec.flows) n = std::max({n, f.src_host, f.dst_host});
  return n;
}

}  // namespace

std::vector<std::string> validate_scenario(const ScenarioSpec& in) {
  ScenarioSpec spec = in;
  finalize_defaults(spec);
  std::vector<std::string> v;
  const auto bad = [&v](const std::string& msg) { v.push_back(msg); };

  if (spec.name.empty() || spec.name.find('/') != std::string::npos)
    bad("name must be non-empty and contain no '/'");
  if (spec.topology != "single" && spec.topology != "tree12")
    bad("topology must be 'single' or 'tree12'");
  if (spec.link_capacity_bytes_per_sec <= 0.0)
    bad("link_capacity_bytes_per_sec must be positive");
  if (spec.duration_s <= 0.0) bad("duration_s must be positive");
  if (spec.mtu < 1) bad("mtu must be >= 1");
  if (spec.packet_size_bytes < 1 || spec.packet_size_bytes > spec.mtu)
    bad("packet_size_bytes must be in [1, mtu]");
  if (spec.overhead_bytes < 0) bad("overhead_bytes must be >= 0");
  if (spec.quantum_bytes < 1) bad("quantum_bytes must be >= 1");
  if (spec.egress_capacity_pkts < 1) bad("egress_capacity_pkts must be >= 1");
  if (spec.output_capacity_pkts < 1) bad("output_capacity_pkts must be >= 1");
  if (spec.host_tx_capacity_pkts < 1) bad("host_tx_capacity_pkts must be >= 1");
  if (spec.hp_share <= 0.0 || spec.hp_share >= 1.0)
    bad("hp_share must be in (0, 1)");
  if (spec.cbr_jitter_frac < 0.0 || spec.cbr_jitter_frac >= 1.0)
    bad("cbr_jitter_frac must be in [0, 1)");
  if (spec.throughput_window_s <= 0.0) bad("throughput_window_s must be positive");
  if (spec.occupancy_period_s <= 0.0) bad("occupancy_period_s must be positive");
  if (spec.max_events < 1) bad("max_events must be >= 1");
  if (spec.lp_rate_bytes_per_sec <= 0.0) bad("lp_rate_bytes_per_sec must be positive");
  if (spec.hp_rate_bytes_per_sec <= 0.0) bad("hp_rate_bytes_per_sec must be positive");

  const int max_host = spec.topology == "tree12" ? 12 : single_switch_hosts(spec);
  const auto check_host = [&](int h, const std::string& what) {
    if (h < 1 || h > max_host)
      bad(what + ": host H" + std::to_string(h) + " outside topology (1.." +
          std::to_string(max_host) + ")");
  };

  switch (spec.kind) {
    case ScenarioKind::Proactive:
      if (spec.lp_flows < 1 || spec.lp_flows > 16)
        bad("PROACTIVE needs lp_flows in [1, 16]");
      if (spec.topology != "single")
        bad("PROACTIVE runs on the 'single' shared-bottleneck topology");
      if (!(0.0 <= spec.hp_start_s && spec.hp_start_s < spec.hp_stop_s &&
            spec.hp_stop_s <= spec.duration_s))
        bad("hp_window_s must satisfy 0 <= start < stop <= duration");
      break;
    case ScenarioKind::Mpi: {
      if (spec.topology != "tree12") bad("MPI runs on the 'tree12' topology");
      if (spec.lp_flows < 0 || spec.lp_flows > 6)
        bad("MPI needs lp_flows in [0, 6]");
      check_host(spec.pingpong.src_host, "pingpong");
      check_host(spec.pingpong.dst_host, "pingpong");
      if (spec.pingpong.src_host == spec.pingpong.dst_host)
        bad("pingpong endpoints must differ");
      if (spec.pingpong.message_sizes.empty())
        bad("pingpong.message_sizes must be non-empty");
      for (int s : spec.pingpong.message_sizes) {
        if (s < 1) bad("pingpong message size must be >= 1");
        else if ((s + spec.mtu - 1) / spec.mtu > spec.host_tx_capacity_pkts)
          bad("message of " + std::to_string(s) +
              " bytes does not fit the host tx queue");
      }
      if (spec.pingpong.iterations_per_size < 1)
        bad("pingpong.iterations_per_size must be >= 1");
      if (spec.pingpong.timeout_s <= 0.0) bad("pingpong.timeout_s must be positive");
      if (spec.pingpong.start_s < 0.0 || spec.pingpong.start_s >= spec.duration_s)
        bad("pingpong.start_s must lie inside [0, duration)");
      break;
    }
    case ScenarioKind::Custom: {
      if (spec.flows.empty()) bad("CUSTOM needs at least one flow");
      std::set<FlowId> seen;
      for (const auto& f : spec.flows) {
        check_host(f.src_host, "flow");
        check_host(f.dst_host, "flow");
        if (f.src_host == f.dst_host) bad("flow endpoints must differ");
        if (f.priority < 0) bad("flow priority must be >= 0");
        if (f.rate_bytes_per_sec <= 0.0) bad("flow rate must be positive");
        if (f.packet_size_bytes < 1 || f.packet_size_bytes > spec.mtu)
          bad("flow packet size must be in [1, mtu]");
        if (f.quantum_bytes < 0) bad("flow quantum_bytes must be >= 0");
        if (f.start_s < 0.0 || f.stop_s <= f.start_s)
          bad("flow needs 0 <= start_s < stop_s");
        if (!seen.insert(FlowId{f.src_host, f.dst_host, f.priority}).second)
          bad("duplicate flow " +
              flow_label(FlowId{f.src_host, f.dst_host, f.priority}));
      }
      break;
    }
  }

  // Priority classes must index into each egress buffer they cross:
  // class 0 is the HPQ, low-priority classes may not exceed the number of
  // low-priority queues (one per competing flow) on any shared port.
  if (v.empty()) {
    PortKeyFlows groups;
    for (const FlowId& f : scenario_flow_ids(spec))
      for (const std::string& key : port_keys_for(spec, f))
        groups.flows[key].push_back(f);
    for (const auto& [key, flows] : groups.flows) {
      int lp = 0;
      for (const FlowId& f : flows) lp += f.priority_class > 0 ? 1 : 0;
      for (const FlowId& f : flows)
        if (f.priority_class > lp)
          bad("flow " + flow_label(f) + ": priority class exceeds the " +
              std::to_string(lp) + " low-priority queues at port " + key);
    }
  }
  return v;
}

namespace {

// Everything a materialized run needs, wired together.
struct Runner {
  explicit Runner(const ScenarioSpec& s)
      : spec(s),
        engine(s.seed),
        sink(SimTime::from_sec(s.throughput_window_s), s.overhead_bytes) {}

  const ScenarioSpec& spec;
  Engine engine;
  PacketFactory ids;
  MetricsSink sink;
  std::unique_ptr<Topology> topo;
  std::vector<std::unique_ptr<CbrSource>> sources;
  std::unique_ptr<PingPong> pingpong;
  uint64_t misroutes = 0;
  // ports carrying flows, per switch: (port, egress label, output label)
  std::vector<std::vector<std::tuple<int, std::string, std::string>>> sampled_ports;

  void build();
  void occupancy_tick();
  void sample_occupancy_now();
};

void Runner::build() {
  const double link = spec.link_capacity_bytes_per_sec;
  if (spec.topology == "single")
    topo = build_single_switch(engine, single_switch_hosts(spec), link,
                               spec.output_capacity_pkts,
                               spec.host_tx_capacity_pkts);
  else
    topo = build_tree_depth2(engine, link, spec.output_capacity_pkts,
                             spec.host_tx_capacity_pkts);

  struct Plan {
    FlowId flow;
    double rate;
    int size;
    SimTime start, stop;
  };
  std::vector<Plan> plans;
  const SimTime duration = SimTime::from_sec(spec.duration_s);
  switch (spec.kind) {
    case ScenarioKind::Proactive: {
      const int sink_host = spec.lp_flows + 2;
      for (int i = 1; i <= spec.lp_flows; ++i)
        plans.push_back({FlowId{i, sink_host, i}, spec.lp_rate_bytes_per_sec,
                         spec.packet_size_bytes, SimTime{}, duration});
      plans.push_back({FlowId{spec.lp_flows + 1, sink_host, 0},
                       spec.hp_rate_bytes_per_sec, spec.packet_size_bytes,
                       SimTime::from_sec(spec.hp_start_s),
                       SimTime::from_sec(spec.hp_stop_s)});
      break;
    }
    case ScenarioKind::Mpi:
      for (int i = 1; i <= spec.lp_flows; ++i)
        plans.push_back({FlowId{i, i + 6, 1}, spec.lp_rate_bytes_per_sec,
                         spec.packet_size_bytes, SimTime{}, duration});
      break;
    case ScenarioKind::Custom:
      for (const auto& f : spec.flows)
        plans.push_back({FlowId{f.src_host, f.dst_host, f.priority},
                         f.rate_bytes_per_sec, f.packet_size_bytes,
                         SimTime::from_sec(f.start_s),
                         SimTime::from_sec(f.stop_s)});
      break;
  }

  std::vector<FlowId> all_flows = scenario_flow_ids(spec);

  std::map<FlowId, int> quantum_override;
  for (const auto& f : spec.flows)
    if (f.quantum_bytes > 0)
      quantum_override[FlowId{f.src_host, f.dst_host, f.priority}] =
          f.quantum_bytes;

  // Group flows by (switch, port) along their paths.
  std::map<std::pair<int, int>, std::vector<FlowId>> port_flows;
  for (const FlowId& f : all_flows)
    for (const auto& hop : topo->path(f.src_host, f.dst_host))
      port_flows[hop].push_back(f);

  const EgressOptions options{spec.clamp_idle_burst};
  sampled_ports.resize(topo->switch_count());
  for (const auto& [hop, flows] : port_flows) {
    const auto [si, port] = hop;
    SwitchNode& sw = topo->sw(si);
    const double cap = sw.port_link(port).capacity_bytes_per_sec;
    const std::string dst = topo->node_name(sw.port_link(port).to_node);
    sampled_ports[si].emplace_back(port, "egress:" + dst, "output:" + dst);

    std::vector<FlowId> lp;
    for (const FlowId& f : flows)
      if (f.priority_class > 0) lp.push_back(f);
    std::sort(lp.begin(), lp.end());

    std::vector<QueueConfig> configs;
    if (spec.policy == Policy::BestEffort) {
      configs.push_back(QueueConfig{0, {}, {}, spec.quantum_bytes,
                                    spec.egress_capacity_pkts});
    } else {
      QueueConfig hpq{0, {}, {}, spec.quantum_bytes, spec.egress_capacity_pkts};
      if (spec.policy == Policy::StrictPps)
        hpq.rate_pkts_per_sec = spec.hp_share * cap / spec.mtu;
      else
        hpq.rate_bytes_per_sec = spec.hp_share * cap;
      configs.push_back(hpq);
      for (size_t q = 0; q < lp.size(); ++q) {
        QueueConfig lpq{static_cast<int>(q) + 1, {}, {}, spec.quantum_bytes,
                        spec.egress_capacity_pkts};
        if (auto it = quantum_override.find(lp[q]); it != quantum_override.end())
          lpq.quantum_bytes = it->second;
        if (spec.policy == Policy::StrictBps)
          lpq.rate_bytes_per_sec =
              (1.0 - spec.hp_share) * cap / static_cast<double>(lp.size());
        else if (spec.policy == Policy::StrictPps)
          lpq.rate_pkts_per_sec = (1.0 - spec.hp_share) * cap /
                                  static_cast<double>(lp.size()) / spec.mtu;
        configs.push_back(lpq);
      }
    }
    sw.configure_port(port, spec.policy, std::move(configs), options);

    for (const FlowId& f : flows) {
      int queue = 0;
      if (spec.policy != Policy::BestEffort && f.priority_class > 0)
        queue = static_cast<int>(std::lower_bound(lp.begin(), lp.end(), f) -
                                 lp.begin()) +
                1;
      sw.install_route(f, port, queue);
    }
  }

  // Ports no flow crosses still need a discipline.
  for (int si = 0; si < topo->switch_count(); ++si) {
    SwitchNode& sw = topo->sw(si);
    for (int p = 0; p < sw.port_count(); ++p)
      if (!sw.port_configured(p))
        sw.configure_port(p, Policy::BestEffort,
                          {QueueConfig{0, {}, {}, spec.quantum_bytes,
                                       spec.egress_capacity_pkts}},
                          options);
  }

  for (const FlowId& f : all_flows) sink.register_flow(f);

  // Delivery and drop recording.
  for (int h = 1; h <= topo->host_count(); ++h) {
    HostNode& host = topo->host(h);
    host.sinks.push_back([this, h](const Packet& p, SimTime now) {
      if (p.flow.dst_host != h) {
        ++misroutes;
        return;
      }
      sink.record_delivery(p, now);
    });
    host.on_tx_drop = [this, name = host.name()](const Packet&, SimTime now) {
      sink.record_drop(name, "host_tx", -1, now);
    };
  }
  for (int si = 0; si < topo->switch_count(); ++si) {
    SwitchNode& sw = topo->sw(si);
    std::vector<std::string> labels(sw.port_count());
    for (int p = 0; p < sw.port_count(); ++p)
      labels[p] = "egress:" + topo->node_name(sw.port_link(p).to_node);
    sw.on_drop = [this, si, labels](int port, int queue, const Packet&,
                                    SimTime now) {
      sink.record_drop(topo->sw(si).name(), labels[port], queue, now);
    };
  }

  // Workloads.
  for (const auto& plan : plans) {
    CbrFlowSpec cf;
    cf.flow = plan.flow;
    cf.rate_bytes_per_sec = plan.rate;
    cf.packet_size_bytes = plan.size;
    cf.start = plan.start;
    cf.stop = plan.stop;
    cf.jitter_frac = spec.cbr_jitter_frac;
    SimTime phase;
    if (spec.start_jitter) {
      const SimTime spacing = transmission_time(plan.size, plan.rate);
      phase = SimTime::from_ns(static_cast<int64_t>(
          engine.rng().uniform01() * static_cast<double>(spacing.ns())));
    }
    sources.push_back(std::make_unique<CbrSource>(
        engine, ids, topo->host(plan.flow.src_host), cf, phase));
    sources.back()->start();
  }
  if (spec.kind == ScenarioKind::Mpi) {
    PingPongSpec pp;
    pp.src_host = spec.pingpong.src_host;
    pp.dst_host = spec.pingpong.dst_host;
    pp.message_sizes_bytes = spec.pingpong.message_sizes;
    pp.iterations_per_size = spec.pingpong.iterations_per_size;
    pp.timeout = SimTime::from_sec(spec.pingpong.timeout_s);
    pp.start = SimTime::from_sec(spec.pingpong.start_s);
    pp.mtu = spec.mtu;
    pingpong = std::make_unique<PingPong>(engine, ids, topo->host(pp.src_host),
                                          topo->host(pp.dst_host), pp);
    pingpong->on_complete = [this] { engine.request_stop(); };
    pingpong->start();
  }

  engine.schedule_at(SimTime{}, [this] { occupancy_tick(); });
}

void Runner::sample_occupancy_now() {
  const SimTime now = engine.now();
  for (int si = 0; si < topo->switch_count(); ++si) {
    const SwitchNode& sw = topo->sw(si);
    const SwitchOccupancy snap = sw.sample_occupancy();
    sink.record_occupancy(now, sw.name(), "input", -1, snap.input);
    for (const auto& [port, egress_label, output_label] : sampled_ports[si]) {
      const PortOccupancy& po = snap.ports[port];
      for (size_t q = 0; q < po.egress_per_queue.size(); ++q)
        sink.record_occupancy(now, sw.name(), egress_label, static_cast<int>(q),
                              po.egress_per_queue[q]);
      sink.record_occupancy(now, sw.name(), output_label, -1, po.output);
    }
  }
}

void Runner::occupancy_tick() {
  sample_occupancy_now();
  const SimTime next = engine.now() + SimTime::from_sec(spec.occupancy_period_s);
  if (next <= SimTime::from_sec(spec.duration_s))
    engine.schedule_at(next, [this] { occupancy_tick(); });
}

}  // namespace

RunResult run_scenario(const ScenarioSpec& in, const std::string& out_dir,
                       const std::string& spec_source) {
  ScenarioSpec spec = in;
  finalize_defaults(spec);
  if (auto violations = validate_scenario(spec); !violations.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ConfigError(msg);
  }

  const auto wall_start = std::chrono::steady_clock::now();
  Runner runner(spec);
  runner.build();

  RunResult result;
  result.name = spec.name;

  const Engine::RunStats stats =
      runner.engine.run_until(SimTime::from_sec(spec.duration_s), spec.max_events);
  result.end_time = stats.final_now;
  result.events = stats.dispatched;
  runner.sink.set_end_time(stats.final_now);

  if (runner.pingpong) {
    for (const auto& s : runner.pingpong->samples())
      runner.sink.add_latency_sample(s);
    for (const auto& [size, iter] : runner.pingpong->timeouts())
      runner.sink.add_latency_timeout(size, iter);
    result.latency = runner.pingpong->samples();
    result.latency_timeouts = runner.pingpong->timeouts();
  }

  // Invariant sweep: the simulator doubles as its own property harness, so
  // violations fail the run rather than warn.
  auto& violations = result.violations;
  if (stats.event_limit_hit)
    violations.push_back("event limit hit before the scenario completed");
  if (runner.misroutes > 0)
    violations.push_back(std::to_string(runner.misroutes) +
                         " packets delivered to the wrong host");
  if (runner.pingpong && !runner.pingpong->finished())
    violations.push_back("ping-pong workload did not complete within duration");

  uint64_t generated = 0;
  for (const auto& src : runner.sources) generated += src->generated();
  if (runner.pingpong) generated += runner.pingpong->generated();
  uint64_t resident = 0;
  for (int h = 1; h <= runner.topo->host_count(); ++h)
    resident += static_cast<uint64_t>(runner.topo->host(h).tx_occupancy());

  for (int si = 0; si < runner.topo->switch_count(); ++si) {
    const SwitchNode& sw = runner.topo->sw(si);
    for (int p = 0; p < sw.port_count(); ++p) {
      const std::string dst = runner.topo->node_name(sw.port_link(p).to_node);
      const OutputBuffer& out = sw.output(p);
      resident += out.fifo.size();
      result.output_peaks.push_back(BufferPeak{sw.name(), "output:" + dst,
                                               out.peak_occupancy,
                                               out.capacity_pkts});
      if (out.peak_occupancy > out.capacity_pkts)
        violations.push_back(sw.name() + " output:" + dst + " exceeded capacity");
      if (out.enqueued_pkts != out.served_pkts + out.fifo.size())
        violations.push_back(sw.name() + " output:" + dst +
                             " failed conservation");
      const EgressBuffer& egress = sw.egress(p);
      for (int q = 0; q < egress.queue_count(); ++q) {
        const SchedQueue& sq = egress.queue(q);
        resident += sq.fifo.size();
        result.egress_peaks.push_back(BufferPeak{
            sw.name(), "egress:" + dst + ":q" + std::to_string(q),
            sq.peak_occupancy, sq.config.capacity_pkts});
        if (sq.peak_occupancy > sq.config.capacity_pkts)
          violations.push_back(sw.name() + " egress:" + dst + " q" +
                               std::to_string(q) + " exceeded capacity");
        if (sq.enqueued_pkts != sq.served_pkts + sq.dropped_pkts + sq.fifo.size())
          violations.push_back(sw.name() + " egress:" + dst + " q" +
                               std::to_string(q) + " failed conservation");
        if (sq.fifo.empty() && sq.deficit_bytes != 0)
          violations.push_back(sw.name() + " egress:" + dst + " q" +
                               std::to_string(q) + " kept deficit while empty");
      }
    }
  }

  result.generated_pkts = generated;
  result.delivered_pkts = runner.sink.delivered_pkts();
  result.dropped_pkts = runner.sink.total_drops();
  if (generated != result.delivered_pkts + result.dropped_pkts + resident)
    violations.push_back(
        "packet conservation failed: generated " + std::to_string(generated) +
        " != delivered " + std::to_string(result.delivered_pkts) + " + dropped " +
        std::to_string(result.dropped_pkts) + " + resident " +
        std::to_string(resident));

  result.ok = violations.empty();
  result.metrics = std::move(runner.sink);

  if (!out_dir.empty()) {
    result.metrics.export_csvs(out_dir);
    json manifest;
    manifest["name"] = spec.name;
    manifest["version"] = kVersion;
    manifest["seed"] = spec.seed;
    manifest["kind"] = kind_name(spec.kind);
    manifest["policy"] = policy_name(spec.policy);
    const std::string canonical = scenario_to_json(spec);
    manifest["spec_sha256"] =
        sha256_hex(spec_source.empty() ? canonical : spec_source);
    manifest["spec"] = json::parse(canonical);
    manifest["end_time_s"] = result.end_time.sec();
    manifest["events"] = result.events;
    manifest["generated_pkts"] = result.generated_pkts;
    manifest["delivered_pkts"] = result.delivered_pkts;
    manifest["dropped_pkts"] = result.dropped_pkts;
    manifest["ok"] = result.ok;
    manifest["violations"] = result.violations;
    json files;
    for (const char* f :
         {"throughput.csv", "latency.csv", "occupancy.csv", "drops.csv"})
      files[f] = sha256_file_hex(out_dir + "/" + std::string(f));
    manifest["files"] = files;
    std::ofstream out(out_dir + "/manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + out_dir + "/manifest.json");
    out << manifest.dump(2) << '\n';
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
          .count();
  return result;
}

long long command_count(const CommandCountQuery& q) {
  if (q.n_switches < 1) throw ConfigError("cmdcount: N must be >= 1");
  if (q.procs_per_switch < 1) throw ConfigError("cmdcount: M must be >= 1");
  if (q.prioritized < 0 || q.prioritized > q.procs_per_switch)
    throw ConfigError("cmdcount: P must satisfy 0 <= P <= M");
  switch (q.mode) {
    case CommandMode::StrictFull:
      return q.n_switches * q.procs_per_switch;
    case CommandMode::StrictProactiveAdjust:
      return q.n_switches * (q.procs_per_switch - q.prioritized);
    case CommandMode::RlSpDrr:
      return q.n_switches * q.prioritized;
  }
  return 0;
}

}  // namespace tmsim
