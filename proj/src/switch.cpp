#include "tmsim/switch.hpp"

#include <algorithm>
#include <string>

#include "tmsim/errors.hpp"

namespace tmsim {

int SwitchNode::add_port(LinkSpec link, int out_capacity) {
  if (out_capacity < 1) throw ConfigError("output buffer capacity must be >= 1");
  Port port;
  port.link = link;
  port.out.capacity_pkts = out_capacity;
  port.out.link = link;
  ports_.push_back(std::move(port));
  return static_cast<int>(ports_.size()) - 1;
}

void SwitchNode::configure_port(int port, Policy policy,
                                std::vector<QueueConfig> configs,
                                EgressOptions options) {
  Port& p = ports_.at(port);
  p.egress = std::make_unique<EgressBuffer>(policy, std::move(configs), options);
  p.egress->on_drop = [this, port](int queue, const Packet& pkt, SimTime now) {
    if (on_drop) on_drop(port, queue, pkt, now);
  };
}

void SwitchNode::install_route(const FlowId& flow, int port, int queue_index) {
  if (port < 0 || port >= port_count())
    throw ConfigError(name_ + ": route to unknown port");
  flow_table_[flow] = {port, queue_index};
}

EnqueueResult SwitchNode::ingress(const Packet& p, SimTime now) {
  ++input_passed_;
  auto it = flow_table_.find(p.flow);
  if (it == flow_table_.end())
    throw RoutingError(name_ + ": no flow-table entry for " + flow_label(p.flow));
  const auto [port, queue] = it->second;
  const EnqueueResult res = ports_[port].egress->enqueue(queue, p, now);
  if (res == EnqueueResult::Accepted) drain(port, now);
  return res;
}

void SwitchNode::drain(int port, SimTime now) {
  Port& p = ports_.at(port);
  if (!p.egress) return;
  while (!p.out.full()) {
    DequeueOutcome outcome = p.egress->dequeue(now);
    if (outcome.packet) {
      p.out.fifo.push_back(*outcome.packet);
      ++p.out.enqueued_pkts;
      p.out.peak_occupancy =
          std::max(p.out.peak_occupancy, static_cast<int>(p.out.fifo.size()));
      maybe_start_tx(port, now);
    } else {
      if (outcome.idle_until) schedule_wake(port, *outcome.idle_until);
      break;
    }
  }
  // Output buffer full: the next transmit completion resumes the drain.
}

void SwitchNode::schedule_wake(int port, SimTime at) {
  Port& p = ports_[port];
  if (p.pending_wake && *p.pending_wake <= at) return;
  p.pending_wake = at;
  engine_.schedule_at(at, [this, port, at] {
    Port& p = ports_[port];
    if (p.pending_wake && *p.pending_wake == at) p.pending_wake.reset();
    drain(port, engine_.now());
  });
}

void SwitchNode::maybe_start_tx(int port, SimTime now) {
  Port& p = ports_[port];
  if (p.out.transmitting || p.out.fifo.empty()) return;
  p.out.transmitting = true;
  const Packet& head = p.out.fifo.front();
  const SimTime done =
      now + transmission_time(head.size_bytes, p.link.capacity_bytes_per_sec);
  p.out.busy_until = done;
  engine_.schedule_at(done, [this, port] { complete_tx(port); });
}

void SwitchNode::complete_tx(int port) {
  const SimTime now = engine_.now();
  Port& p = ports_[port];
  Packet pkt = p.out.fifo.front();
  p.out.fifo.pop_front();
  ++p.out.served_pkts;
  p.out.served_bytes += static_cast<uint64_t>(pkt.size_bytes);
  p.out.transmitting = false;
  maybe_start_tx(port, now);
  deliver(p.link.to_node, pkt, now);
  drain(port, now);  // a slot was freed; egress may proceed
}

SwitchOccupancy SwitchNode::sample_occupancy() const {
  SwitchOccupancy snap;
  snap.input = 0;
  snap.ports.reserve(ports_.size());
  for (const Port& p : ports_) {
    PortOccupancy po;
    if (p.egress) {
      po.egress_per_queue.reserve(p.egress->queue_count());
      for (int q = 0; q < p.egress->queue_count(); ++q)
        po.egress_per_queue.push_back(static_cast<int>(p.egress->queue(q).fifo.size()));
    }
    po.output = static_cast<int>(p.out.fifo.size());
    snap.ports.push_back(std::move(po));
  }
  return snap;
}

void HostNode::attach_uplink(LinkSpec link, int tx_capacity) {
  uplink_ = link;
  tx_capacity_ = tx_capacity;
}

void HostNode::send(Packet p, SimTime now) {
  ++sent_pkts_;
  if (static_cast<int>(tx_.size()) >= tx_capacity_) {
    ++tx_drops_;
    if (on_tx_drop) on_tx_drop(p, now);
    return;
  }
  tx_.push_back(p);
  maybe_start_tx(now);
}

void HostNode::maybe_start_tx(SimTime now) {
  if (transmitting_ || tx_.empty()) return;
  transmitting_ = true;
  const SimTime done =
      now + transmission_time(tx_.front().size_bytes, uplink_.capacity_bytes_per_sec);
  engine_.schedule_at(done, [this] {
    const SimTime t = engine_.now();
    Packet pkt = tx_.front();
    tx_.pop_front();
    transmitting_ = false;
    maybe_start_tx(t);
    forward(pkt, t);
  });
}

void HostNode::deliver(const Packet& p, SimTime now) {
  ++delivered_pkts_;
  for (auto& sink : sinks) sink(p, now);
}

HostNode& Topology::add_host(int host, const std::string& name) {
  if (host != static_cast<int>(hosts_.size()) + 1)
    throw ConfigError("hosts must be added in order starting at H1");
  hosts_.push_back(std::make_unique<HostNode>(host, name, engine_));
  return *hosts_.back();
}

SwitchNode& Topology::add_switch(const std::string& name) {
  const int idx = static_cast<int>(switches_.size());
  switches_.push_back(std::make_unique<SwitchNode>(idx, name, engine_));
  SwitchNode* sw = switches_.back().get();
  sw->deliver = [this](int node_id, const Packet& p, SimTime now) {
    deliver(node_id, p, now);
  };
  return *sw;
}

void Topology::connect_host(int host_id, int sw, double capacity,
                            int host_tx_capacity) {
  HostNode& h = host(host_id);
  LinkSpec up{capacity, host_node_id(host_id), switch_node_id(sw)};
  h.attach_uplink(up, host_tx_capacity);
  SwitchNode* s = switches_.at(sw).get();
  h.forward = [s](const Packet& p, SimTime now) { s->ingress(p, now); };
  links_.push_back(up);
}

int Topology::connect_port(int sw, int dst_node, double capacity,
                           int out_capacity) {
  LinkSpec link{capacity, switch_node_id(sw), dst_node};
  links_.push_back(link);
  return switches_.at(sw)->add_port(link, out_capacity);
}

void Topology::set_path(int src_host, int dst_host,
                        std::vector<std::pair<int, int>> hops) {
  paths_[{src_host, dst_host}] = std::move(hops);
}

const std::vector<std::pair<int, int>>& Topology::path(int src_host,
                                                       int dst_host) const {
  auto it = paths_.find({src_host, dst_host});
  if (it == paths_.end())
    throw RoutingError("no path from H" + std::to_string(src_host) + " to H" +
                       std::to_string(dst_host));
  return it->second;
}

HostNode& Topology::host(int host) { return *hosts_.at(host - 1); }
const HostNode& Topology::host(int host) const { return *hosts_.at(host - 1); }

std::string Topology::node_name(int node_id) const {
  if (is_switch_node(node_id)) return switches_.at(switch_index(node_id))->name();
  return hosts_.at(node_id - 1)->name();
}

void Topology::deliver(int node_id, const Packet& p, SimTime now) {
  if (is_switch_node(node_id))
    switches_.at(switch_index(node_id))->ingress(p, now);
  else
    hosts_.at(node_id - 1)->deliver(p, now);
}

std::unique_ptr<Topology> build_tree_depth2(Engine& engine, double link_capacity,
                                            int out_capacity,
                                            int host_tx_capacity) {
  auto topo = std::make_unique<Topology>(engine);
  const double uplink_capacity = 2.0 * link_capacity;

  for (int h = 1; h <= 12; ++h) topo->add_host(h, "H" + std::to_string(h));
  for (int t = 0; t < 4; ++t) topo->add_switch("ToR" + std::to_string(t + 1));
  topo->add_switch("Agg");
  const int agg = 4;

  // tor_host_port[t][k]: ToR t's port to its k-th host; tor_up[t]: to Agg.
  int tor_host_port[4][3];
  int tor_up[4];
  int agg_down[4];
  for (int t = 0; t < 4; ++t) {
    for (int k = 0; k < 3; ++k) {
      const int h = t * 3 + k + 1;
      topo->connect_host(h, t, link_capacity, host_tx_capacity);
      tor_host_port[t][k] =
          topo->connect_port(t, host_node_id(h), link_capacity, out_capacity);
    }
    tor_up[t] = topo->connect_port(t, switch_node_id(agg), uplink_capacity,
                                   out_capacity);
    agg_down[t] = topo->connect_port(agg, switch_node_id(t), uplink_capacity,
                                     out_capacity);
  }

  for (int src = 1; src <= 12; ++src) {
    const int ts = (src - 1) / 3;
    for (int dst = 1; dst <= 12; ++dst) {
      if (src == dst) continue;
      const int td = (dst - 1) / 3;
      std::vector<std::pair<int, int>> hops;
      if (ts == td) {
        hops = {{ts, tor_host_port[td][(dst - 1) % 3]}};
      } else {
        hops = {{ts, tor_up[ts]},
                {agg, agg_down[td]},
                {td, tor_host_port[td][(dst - 1) % 3]}};
      }
      topo->set_path(src, dst, std::move(hops));
    }
  }
  return topo;
}

std::unique_ptr<Topology> build_single_switch(Engine& engine, int n_hosts,
                                              double link_capacity,
                                              int out_capacity,
                                              int host_tx_capacity) {
  if (n_hosts < 2) throw ConfigError("single-switch topology needs >= 2 hosts");
  auto topo = std::make_unique<Topology>(engine);
  topo->add_switch("SW1");
  std::vector<int> host_port(n_hosts + 1);
  for (int h = 1; h <= n_hosts; ++h) {
    topo->add_host(h, "H" + std::to_string(h));
    topo->connect_host(h, 0, link_capacity, host_tx_capacity);
    host_port[h] =
        topo->connect_port(0, host_node_id(h), link_capacity, out_capacity);
  }
  for (int src = 1; src <= n_hosts; ++src)
    for (int dst = 1; dst <= n_hosts; ++dst)
      if (src != dst) topo->set_path(src, dst, {{0, host_port[dst]}});
  return topo;
}

}  // namespace tmsim
