#include "tmsim/scheduler.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "tmsim/errors.hpp"

namespace tmsim {

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::BestEffort: return "NO";
    case Policy::StrictPps: return "STRICT_PPS";
    case Policy::StrictBps: return "STRICT_BPS";
    case Policy::RlSpDrr: return "RL_SP_DRR";
  }
  return "?";
}

EgressBuffer::EgressBuffer(Policy policy, std::vector<QueueConfig> configs,
                           EgressOptions options)
    : policy_(policy), options_(options) {
  if (configs.empty())
    throw ConfigError("egress buffer needs at least one queue");
  if (policy == Policy::BestEffort && configs.size() != 1)
    throw ConfigError("best-effort egress is a single FIFO");
  for (size_t i = 0; i < configs.size(); ++i)
    validate_config(static_cast<int>(i), configs[i]);
  queues_.resize(configs.size());
  for (size_t i = 0; i < configs.size(); ++i)
    queues_[i].config = configs[i];
}

void EgressBuffer::validate_config(int queue_index, const QueueConfig& cfg) const {
  const std::string where = "queue " + std::to_string(queue_index) + ": ";
  if (cfg.capacity_pkts < 1)
    throw ConfigError(where + "capacity_pkts must be >= 1");
  if (cfg.rate_bytes_per_sec && *cfg.rate_bytes_per_sec <= 0.0)
    throw ConfigError(where + "rate_bytes_per_sec must be positive");
  if (cfg.rate_pkts_per_sec && *cfg.rate_pkts_per_sec <= 0.0)
    throw ConfigError(where + "rate_pkts_per_sec must be positive");

  const bool rate_limited =
      policy_ == Policy::StrictPps || policy_ == Policy::StrictBps ||
      (policy_ == Policy::RlSpDrr && queue_index == 0);
  if (rate_limited && cfg.rate_bytes_per_sec && cfg.rate_pkts_per_sec)
    throw ConfigError(where + "set exactly one of Bps/pps rate");
  if (policy_ == Policy::StrictBps && !cfg.rate_bytes_per_sec)
    throw ConfigError(where + "STRICT Bps mode requires rate_bytes_per_sec");
  if (policy_ == Policy::StrictPps && !cfg.rate_pkts_per_sec)
    throw ConfigError(where + "STRICT pps mode requires rate_pkts_per_sec");
  if (policy_ == Policy::RlSpDrr && queue_index == 0 && !cfg.rate_bytes_per_sec)
    throw ConfigError(where + "RL-SP-DRR requires rate_bytes_per_sec on the HPQ");
  if (policy_ == Policy::RlSpDrr && queue_index > 0 && cfg.quantum_bytes < 1)
    throw ConfigError(where + "quantum_bytes must be >= 1");
}

SimTime EgressBuffer::rate_limited_departure(SchedQueue& q, const Packet& p,
                                             SimTime now) const {
  SimTime spacing;
  if (policy_ == Policy::StrictPps)
    spacing = pps_interval(*q.config.rate_pkts_per_sec);
  else
    spacing = transmission_time(p.size_bytes, *q.config.rate_bytes_per_sec);
  const SimTime base =
      options_.clamp_idle_burst ? std::max(q.last_sent, now) : q.last_sent;
  return base + spacing;
}

EnqueueResult EgressBuffer::enqueue(int queue_index, Packet p, SimTime now) {
  if (queue_index < 0 || queue_index >= queue_count())
    throw ConfigError("enqueue: invalid queue index " + std::to_string(queue_index));
  SchedQueue& q = queues_[queue_index];

  ++q.enqueued_pkts;  // counts offered packets, dropped ones included
  if (static_cast<int>(q.fifo.size()) >= q.config.capacity_pkts) {
    ++q.dropped_pkts;
    if (on_drop) on_drop(queue_index, p, now);
    return EnqueueResult::DroppedTail;
  }

  switch (policy_) {
    case Policy::BestEffort:
      p.departure = now;
      break;
    case Policy::StrictPps:
    case Policy::StrictBps:
      p.departure = rate_limited_departure(q, p, now);
      q.last_sent = p.departure;
      break;
    case Policy::RlSpDrr:
      if (queue_index == 0) {
        p.departure = rate_limited_departure(q, p, now);
        q.last_sent = p.departure;
      } else {
        p.departure = now;
        if (q.fifo.empty() && !q.in_active_list) {
          active_.push_back(queue_index);
          q.in_active_list = true;
        }
      }
      break;
  }

  q.enqueued_bytes += static_cast<uint64_t>(p.size_bytes);
  q.fifo.push_back(p);
  q.peak_occupancy = std::max(q.peak_occupancy, static_cast<int>(q.fifo.size()));
  return EnqueueResult::Accepted;
}

Packet EgressBuffer::pop_front(int queue_index) {
  SchedQueue& q = queues_[queue_index];
  Packet p = q.fifo.front();
  q.fifo.pop_front();
  ++q.served_pkts;
  q.served_bytes += static_cast<uint64_t>(p.size_bytes);
  return p;
}

std::pair<int, Packet> EgressBuffer::drr_select() {
  if (active_.empty())
    throw std::logic_error("drr_select: active list is empty");

  for (;;) {
    const int qidx = active_.front();
    SchedQueue& q = queues_[qidx];
    if (!q.quantum_granted) {
      q.deficit_bytes += q.config.quantum_bytes;
      q.quantum_granted = true;
    }
    if (static_cast<int64_t>(q.fifo.front().size_bytes) <= q.deficit_bytes) {
      Packet p = pop_front(qidx);
      q.deficit_bytes -= p.size_bytes;
      if (q.fifo.empty()) {
        // Queue goes idle: deficit resets and it leaves the round.
        q.deficit_bytes = 0;
        q.quantum_granted = false;
        q.in_active_list = false;
        active_.pop_front();
      }
      return {qidx, p};
    }
    // Head exceeds the remaining deficit: keep the deficit, move the cursor.
    q.quantum_granted = false;
    active_.pop_front();
    active_.push_back(qidx);
  }
}

DequeueOutcome EgressBuffer::dequeue(SimTime now) {
  DequeueOutcome out;
  switch (policy_) {
    case Policy::BestEffort: {
      SchedQueue& q = queues_[0];
      if (q.fifo.empty()) return out;
      out.packet = pop_front(0);
      out.queue_index = 0;
      return out;
    }
    case Policy::StrictPps:
    case Policy::StrictBps: {
      // Poll heads from the most prioritized queue to the least.
      std::optional<SimTime> earliest;
      for (int i = 0; i < queue_count(); ++i) {
        SchedQueue& q = queues_[i];
        if (q.fifo.empty()) continue;
        if (q.fifo.front().departure <= now) {
          out.packet = pop_front(i);
          out.queue_index = i;
          return out;
        }
        if (!earliest || q.fifo.front().departure < *earliest)
          earliest = q.fifo.front().departure;
      }
      out.idle_until = earliest;
      return out;
    }
    case Policy::RlSpDrr: {
      SchedQueue& hpq = queues_[0];
      if (!hpq.fifo.empty() && hpq.fifo.front().departure <= now) {
        out.packet = pop_front(0);
        out.queue_index = 0;
        return out;
      }
      if (!active_.empty()) {
        auto [qidx, p] = drr_select();
        out.packet = p;
        out.queue_index = qidx;
        return out;
      }
      if (!hpq.fifo.empty()) out.idle_until = hpq.fifo.front().departure;
      return out;
    }
  }
  return out;
}

void EgressBuffer::set_queue_config(int queue_index, const QueueConfig& cfg) {
  if (queue_index < 0 || queue_index >= queue_count())
    throw ConfigError("set_queue_config: invalid queue index " +
                      std::to_string(queue_index));
  validate_config(queue_index, cfg);
  queues_[queue_index].config = cfg;
}

int EgressBuffer::total_packets() const {
  int n = 0;
  for (const auto& q : queues_) n += static_cast<int>(q.fifo.size());
  return n;
}

}  // namespace tmsim
