#ifndef TMSIM_TYPES_HPP
#define TMSIM_TYPES_HPP

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

#include "tmsim/time.hpp"

namespace tmsim {

inline constexpr int kDefaultMtu = 1500;

// src/dst are host indices; priority_class 0 is the highest priority.
struct FlowId {
  int src_host = 0;
  int dst_host = 0;
  int priority_class = 0;

  constexpr auto operator<=>(const FlowId&) const = default;
};

enum class PacketKind { Data, Ping, Pong };

// Metadata-only packet: no headers or payload bytes are modeled.
struct Packet {
  uint64_t id = 0;
  FlowId flow;
  int size_bytes = 0;
  SimTime created_at;
  SimTime departure;          // assigned by enqueue, never by generators
  PacketKind kind = PacketKind::Data;
  int msg_id = -1;            // ping-pong correlation, -1 for plain data
};

// Per-queue scheduling parameters. Which rate field is required depends on
// the policy: RL-SP-DRR needs rate_bytes_per_sec on the high-priority queue
// only; STRICT needs the mode's rate on every queue.
struct QueueConfig {
  int priority = 0;                               // 0 = highest
  std::optional<double> rate_bytes_per_sec;
  std::optional<double> rate_pkts_per_sec;
  int quantum_bytes = kDefaultMtu;                // DRR weight; unused by the HPQ
  int capacity_pkts = 64;
};

struct LinkSpec {
  double capacity_bytes_per_sec = 0.0;
  int from_node = -1;
  int to_node = -1;
};

inline std::string flow_label(const FlowId& f) {
  return "H" + std::to_string(f.src_host) + "-H" + std::to_string(f.dst_host) +
         "-p" + std::to_string(f.priority_class);
}

}  // namespace tmsim

#endif
