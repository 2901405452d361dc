#ifndef TMSIM_METRICS_HPP
#define TMSIM_METRICS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tmsim/traffic.hpp"
#include "tmsim/types.hpp"

namespace tmsim {

// Per-size latency statistics; percentiles are nearest-rank over the
// non-timed-out samples, timeouts are counted separately.
struct LatencySummary {
  int message_size = 0;
  int count = 0;
  int timeouts = 0;
  SimTime mean, p50, p99, min, max;
};

LatencySummary summarize_latency(int message_size, std::vector<SimTime> rtts,
                                 int timeouts);

// Measurement plane for one run. Throughput is attributed to contiguous
// half-open windows [k*w, (k+1)*w); a delivery exactly on a boundary counts
// toward the later window. Throughput counts goodput: size minus the
// configured per-packet overhead.
class MetricsSink {
 public:
  explicit MetricsSink(SimTime throughput_window = SimTime::from_sec(1.0),
                       int overhead_bytes = 0);

  void register_flow(const FlowId& flow);
  void record_delivery(const Packet& p, SimTime at);
  void record_drop(const std::string& node, const std::string& buffer,
                   int queue, SimTime at);
  void record_occupancy(SimTime at, const std::string& node,
                        const std::string& buffer, int queue, int packets);

  void add_latency_sample(const LatencySample& s) { latency_.push_back(s); }
  void add_latency_timeout(int size, int iteration) {
    latency_timeouts_.emplace_back(size, iteration);
  }

  // Fixes the dense window range; must be called before export.
  void set_end_time(SimTime end) { end_time_ = end; }
  SimTime end_time() const { return end_time_; }

  // Mean goodput in bits/s over [from, to); bounds must lie on window edges.
  double mean_flow_bps(const FlowId& flow, SimTime from, SimTime to) const;
  uint64_t delivered_goodput_bytes(const FlowId& flow) const;
  uint64_t delivered_pkts() const { return delivered_pkts_; }
  uint64_t total_drops() const { return total_drops_; }

  std::vector<LatencySummary> latency_summaries() const;
  const std::vector<LatencySample>& latency_samples() const { return latency_; }

  // Writes throughput.csv, latency.csv, occupancy.csv and drops.csv into
  // dir. Byte-identical for identical (spec, seed); the caller adds the run
  // manifest alongside.
  void export_csvs(const std::string& dir) const;

  SimTime window() const { return window_; }
  int overhead_bytes() const { return overhead_; }

 private:
  int64_t window_index(SimTime at) const { return at.ns() / window_.ns(); }

  SimTime window_;
  int overhead_;
  SimTime end_time_;

  std::map<FlowId, std::map<int64_t, uint64_t>> window_bytes_;  // goodput
  std::map<FlowId, uint64_t> flow_bytes_;
  uint64_t delivered_pkts_ = 0;

  struct DropKey {
    int64_t window;
    std::string node;
    std::string buffer;
    int queue;
    auto operator<=>(const DropKey&) const = default;
  };
  std::map<DropKey, uint64_t> drops_;
  uint64_t total_drops_ = 0;

  struct OccRow {
    SimTime at;
    std::string node;
    std::string buffer;
    int queue;
    int packets;
  };
  std::vector<OccRow> occupancy_;

  std::vector<LatencySample> latency_;
  std::vector<std::pair<int, int>> latency_timeouts_;
};

}  // namespace tmsim

#endif
