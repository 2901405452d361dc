#ifndef TMSIM_TRAFFIC_HPP
#define TMSIM_TRAFFIC_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "tmsim/engine.hpp"
#include "tmsim/switch.hpp"
#include "tmsim/types.hpp"

namespace tmsim {

// Packet ids are unique per run; one factory per scenario.
class PacketFactory {
 public:
  uint64_t alloc() { return next_id_++; }
  uint64_t allocated() const { return next_id_; }

 private:
  uint64_t next_id_ = 0;
};

struct CbrFlowSpec {
  FlowId flow;
  double rate_bytes_per_sec = 0.0;
  int packet_size_bytes = kDefaultMtu;
  SimTime start;
  SimTime stop;
  // Per-gap spacing jitter as a fraction of the nominal spacing, drawn
  // uniformly in [-f, +f]. Zero keeps the contractual exact spacing; the
  // bundled scenarios use a nonzero value so that several equal-rate flows
  // sharing a drop-tail bottleneck do not phase-lock.
  double jitter_frac = 0.0;
};

// Constant-bit-rate source (iperf-style UDP stand-in). Packets of
// packet_size_bytes at spacing packet_size/rate, first at start + phase,
// none at or after stop.
class CbrSource {
 public:
  CbrSource(Engine& engine, PacketFactory& ids, HostNode& src, CbrFlowSpec spec,
            SimTime phase = SimTime{});

  void start();
  uint64_t generated() const { return generated_; }
  const CbrFlowSpec& spec() const { return spec_; }

 private:
  void emit();

  Engine& engine_;
  PacketFactory& ids_;
  HostNode& src_;
  CbrFlowSpec spec_;
  SimTime spacing_;
  SimTime first_at_;
  uint64_t generated_ = 0;
};

struct PingPongSpec {
  int src_host = 0;
  int dst_host = 0;                      // priority_class is always 0
  std::vector<int> message_sizes_bytes;  // measured in listed order
  int iterations_per_size = 100;
  SimTime timeout = SimTime::from_sec(10.0);
  SimTime start;
  int mtu = kDefaultMtu;
};

struct LatencySample {
  int message_size = 0;
  int iteration = 0;
  SimTime rtt;
};

// MTU-sized chunks, the last one carrying the remainder.
std::vector<int> segment_sizes(int message_bytes, int mtu);

// Ping-pong latency workload (MPI stand-in). Strictly serial: the sender
// transmits one message, the responder echoes an equal-sized reply upon full
// receipt, and the next iteration starts only once the reply completes or
// the iteration times out (possible, since segments share finite buffers).
class PingPong {
 public:
  PingPong(Engine& engine, PacketFactory& ids, HostNode& src, HostNode& dst,
           PingPongSpec spec);

  void start();

  const std::vector<LatencySample>& samples() const { return samples_; }
  const std::vector<std::pair<int, int>>& timeouts() const { return timeouts_; }
  bool finished() const { return finished_; }
  SimTime finished_at() const { return finished_at_; }
  uint64_t generated() const { return generated_; }

  std::function<void()> on_complete;

 private:
  void begin_iteration();
  void advance();
  void send_message(HostNode& from, const FlowId& flow, PacketKind kind,
                    int msg_id, int size_bytes);
  void on_at_responder(const Packet& p, SimTime now);
  void on_at_sender(const Packet& p, SimTime now);

  Engine& engine_;
  PacketFactory& ids_;
  HostNode& src_;
  HostNode& dst_;
  PingPongSpec spec_;
  FlowId ping_flow_;
  FlowId pong_flow_;

  size_t size_idx_ = 0;
  int iteration_ = 0;
  int current_msg_ = -1;
  int next_msg_ = 0;
  SimTime send_start_;
  int64_t ping_bytes_seen_ = 0;
  int64_t pong_bytes_seen_ = 0;
  std::optional<Engine::Handle> timeout_handle_;

  std::vector<LatencySample> samples_;
  std::vector<std::pair<int, int>> timeouts_;  // (size, iteration)
  bool finished_ = false;
  SimTime finished_at_;
  uint64_t generated_ = 0;
};

}  // namespace tmsim

#endif
