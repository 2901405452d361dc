#ifndef TMSIM_SCHEDULER_HPP
#define TMSIM_SCHEDULER_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "tmsim/types.hpp"

namespace tmsim {

// Egress traffic managers.
//
//   BestEffort - one shared FIFO, packets due immediately.
//   StrictPps/StrictBps - every queue rate-limited through per-packet
//       departure times; heads polled from queue 0 (highest) downwards and
//       served once their departure time has come. Pps mode spaces packets
//       by 1/rate regardless of size, Bps mode by size/rate.
//   RlSpDrr - queue 0 is the rate-limited high-priority queue (HPQ), served
//       strictly first whenever its head is due; the low-priority queues are
//       shared by deficit round-robin over an active-queue list, one packet
//       per dequeue so the HPQ is re-checked between any two LP packets.
enum class Policy { BestEffort, StrictPps, StrictBps, RlSpDrr };

const char* policy_name(Policy p);

enum class EnqueueResult { Accepted, DroppedTail };

// One priority queue inside an egress buffer.
struct SchedQueue {
  QueueConfig config;
  std::deque<Packet> fifo;
  SimTime last_sent;           // rate-limiter bookkeeping (HPQ / STRICT)
  int64_t deficit_bytes = 0;   // DRR counter; zero whenever fifo is empty
  bool in_active_list = false;
  bool quantum_granted = false;  // deficit already topped up for this visit

  // Conservation counters: enqueued == served + dropped + fifo.size().
  uint64_t enqueued_pkts = 0;
  uint64_t dropped_pkts = 0;
  uint64_t served_pkts = 0;
  uint64_t enqueued_bytes = 0;
  uint64_t served_bytes = 0;
  int peak_occupancy = 0;
};

// Result of one dequeue step. Exactly one of three shapes:
//   packet engaged            - a packet was served from queue_index;
//   idle_until engaged        - nothing due yet; earliest future departure
//                               among rate-limited heads;
//   neither (empty() == true) - the buffer holds no packets at all.
struct DequeueOutcome {
  std::optional<Packet> packet;
  int queue_index = -1;
  std::optional<SimTime> idle_until;

  bool empty() const { return !packet && !idle_until; }
};

struct EgressOptions {
  // Clamp the rate limiter to now on idle queues: departure =
  // max(last_sent, now) + size/rate. Without the clamp a queue that idled
  // accumulates unbounded burst credit (last_sent + size/rate with a stale
  // last_sent), which breaks the R*W + MTU service bound.
  bool clamp_idle_burst = true;
};

class EgressBuffer {
 public:
  EgressBuffer(Policy policy, std::vector<QueueConfig> configs,
               EgressOptions options = {});

  EnqueueResult enqueue(int queue_index, Packet p, SimTime now);
  DequeueOutcome dequeue(SimTime now);

  // One DRR selection step over the active list (RL-SP-DRR low-priority
  // side). Serves exactly one packet. Caller must ensure the active list is
  // non-empty; violating that is a logic error, not a config error.
  std::pair<int, Packet> drr_select();

  // Applies to packets enqueued or granted quantum after the call;
  // departure times already assigned are not recomputed.
  void set_queue_config(int queue_index, const QueueConfig& cfg);

  Policy policy() const { return policy_; }
  int queue_count() const { return static_cast<int>(queues_.size()); }
  const SchedQueue& queue(int i) const { return queues_.at(i); }
  const std::deque<int>& active_list() const { return active_; }

  int total_packets() const;
  bool all_empty() const { return total_packets() == 0; }

  // Invoked on every tail drop, before counters are visible to the caller.
  std::function<void(int queue_index, const Packet&, SimTime)> on_drop;

 private:
  void validate_config(int queue_index, const QueueConfig& cfg) const;
  SimTime rate_limited_departure(SchedQueue& q, const Packet& p, SimTime now) const;
  Packet pop_front(int queue_index);

  Policy policy_;
  std::vector<SchedQueue> queues_;
  std::deque<int> active_;  // low-priority queues with packets, FIFO by activation
  EgressOptions options_;
};

}  // namespace tmsim

#endif
