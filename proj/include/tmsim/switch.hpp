#ifndef TMSIM_SWITCH_HPP
#define TMSIM_SWITCH_HPP

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tmsim/engine.hpp"
#include "tmsim/scheduler.hpp"
#include "tmsim/types.hpp"

namespace tmsim {

// Node ids in LinkSpec: hosts are positive (1-based: H1, H2, ...), switches
// are negative.
inline constexpr int host_node_id(int host) { return host; }
inline constexpr int switch_node_id(int sw) { return -(sw + 1); }
inline constexpr bool is_switch_node(int node_id) { return node_id < 0; }
inline constexpr int switch_index(int node_id) { return -node_id - 1; }

// Per-port FIFO drained strictly at link rate. Packets enter from the egress
// scheduler; when full, egress dequeueing is suspended (backpressure).
struct OutputBuffer {
  std::deque<Packet> fifo;
  int capacity_pkts = 64;
  LinkSpec link;
  SimTime busy_until;
  bool transmitting = false;

  uint64_t enqueued_pkts = 0;
  uint64_t served_pkts = 0;
  uint64_t served_bytes = 0;
  int peak_occupancy = 0;

  bool full() const { return static_cast<int>(fifo.size()) >= capacity_pkts; }
};

struct PortOccupancy {
  std::vector<int> egress_per_queue;
  int output = 0;
};

struct SwitchOccupancy {
  int input = 0;  // ingress is zero-latency pass-through, occupancy stays 0
  std::vector<PortOccupancy> ports;
};

class SwitchNode {
 public:
  SwitchNode(int index, std::string name, Engine& engine)
      : index_(index), name_(std::move(name)), engine_(engine) {}

  int add_port(LinkSpec link, int out_capacity);
  void configure_port(int port, Policy policy, std::vector<QueueConfig> configs,
                      EgressOptions options = {});
  void install_route(const FlowId& flow, int port, int queue_index);
  bool has_route(const FlowId& flow) const { return flow_table_.count(flow) > 0; }

  // Classify to the mapped egress queue and kick the port drain. Ingress
  // processing itself adds no delay.
  EnqueueResult ingress(const Packet& p, SimTime now);

  // Move eligible packets from the egress scheduler into the output buffer
  // until it fills or nothing is due; schedules a wake-up for future
  // departure times and transmit completions for the output head.
  void drain(int port, SimTime now);

  SwitchOccupancy sample_occupancy() const;

  int id() const { return switch_node_id(index_); }
  const std::string& name() const { return name_; }
  int port_count() const { return static_cast<int>(ports_.size()); }
  bool port_configured(int port) const { return ports_.at(port).egress != nullptr; }
  EgressBuffer& egress(int port) { return *ports_.at(port).egress; }
  const EgressBuffer& egress(int port) const { return *ports_.at(port).egress; }
  const OutputBuffer& output(int port) const { return ports_.at(port).out; }
  const LinkSpec& port_link(int port) const { return ports_.at(port).link; }
  const std::map<FlowId, std::pair<int, int>>& flow_table() const { return flow_table_; }

  // deliver(dst_node_id, packet, now): wired by the topology.
  std::function<void(int, const Packet&, SimTime)> deliver;
  // on_drop(port, queue, packet, now): egress tail drops.
  std::function<void(int, int, const Packet&, SimTime)> on_drop;

 private:
  struct Port {
    LinkSpec link;
    std::unique_ptr<EgressBuffer> egress;
    OutputBuffer out;
    std::optional<SimTime> pending_wake;
  };

  void schedule_wake(int port, SimTime at);
  void maybe_start_tx(int port, SimTime now);
  void complete_tx(int port);

  int index_;
  std::string name_;
  Engine& engine_;
  std::vector<Port> ports_;
  std::map<FlowId, std::pair<int, int>> flow_table_;
  uint64_t input_passed_ = 0;
};

// Endpoint: a transmit FIFO serialized at the access-link rate plus a
// delivery fan-out. Hosts sink traffic with zero delay; any reply logic
// (ping-pong) hangs off the sink callbacks.
class HostNode {
 public:
  HostNode(int host, std::string name, Engine& engine)
      : host_(host), name_(std::move(name)), engine_(engine) {}

  void attach_uplink(LinkSpec link, int tx_capacity = 1024);

  void send(Packet p, SimTime now);
  void deliver(const Packet& p, SimTime now);

  int id() const { return host_node_id(host_); }
  int host() const { return host_; }
  const std::string& name() const { return name_; }
  int tx_occupancy() const { return static_cast<int>(tx_.size()); }
  uint64_t tx_drops() const { return tx_drops_; }
  uint64_t sent_pkts() const { return sent_pkts_; }
  uint64_t delivered_pkts() const { return delivered_pkts_; }
  const LinkSpec& uplink() const { return uplink_; }

  std::function<void(const Packet&, SimTime)> forward;  // to the access switch
  std::vector<std::function<void(const Packet&, SimTime)>> sinks;
  std::function<void(const Packet&, SimTime)> on_tx_drop;

 private:
  void maybe_start_tx(SimTime now);

  int host_;
  std::string name_;
  Engine& engine_;
  LinkSpec uplink_;
  std::deque<Packet> tx_;
  int tx_capacity_ = 1024;
  bool transmitting_ = false;
  uint64_t tx_drops_ = 0;
  uint64_t sent_pkts_ = 0;
  uint64_t delivered_pkts_ = 0;
};

// A set of hosts and switches owned by one engine, with precomputed paths.
class Topology {
 public:
  explicit Topology(Engine& engine) : engine_(engine) {}

  HostNode& add_host(int host, const std::string& name);
  SwitchNode& add_switch(const std::string& name);
  void connect_host(int host, int sw, double capacity, int host_tx_capacity = 1024);
  int connect_port(int sw, int dst_node, double capacity, int out_capacity);

  // hops: (switch index, port index) from source host to destination host.
  void set_path(int src_host, int dst_host, std::vector<std::pair<int, int>> hops);
  const std::vector<std::pair<int, int>>& path(int src_host, int dst_host) const;

  HostNode& host(int host);
  const HostNode& host(int host) const;
  SwitchNode& sw(int i) { return *switches_.at(i); }
  const SwitchNode& sw(int i) const { return *switches_.at(i); }
  int host_count() const { return static_cast<int>(hosts_.size()); }
  int switch_count() const { return static_cast<int>(switches_.size()); }
  const std::vector<LinkSpec>& links() const { return links_; }
  Engine& engine() { return engine_; }

  std::string node_name(int node_id) const;

 private:
  void deliver(int node_id, const Packet& p, SimTime now);

  Engine& engine_;
  std::vector<std::unique_ptr<HostNode>> hosts_;  // index = host - 1
  std::vector<std::unique_ptr<SwitchNode>> switches_;
  std::vector<LinkSpec> links_;
  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> paths_;
};

// Two-level tree: 12 hosts, four ToR switches with three hosts each, one
// aggregation switch. Host<->ToR links run at link_capacity, the
// ToR<->aggregation links at twice that.
std::unique_ptr<Topology> build_tree_depth2(Engine& engine, double link_capacity,
                                            int out_capacity = 64,
                                            int host_tx_capacity = 1024);

// One switch, n_hosts hosts, every link at link_capacity. Any egress port
// shared by several flows is a contended bottleneck.
std::unique_ptr<Topology> build_single_switch(Engine& engine, int n_hosts,
                                              double link_capacity,
                                              int out_capacity = 64,
                                              int host_tx_capacity = 1024);

}  // namespace tmsim

#endif
