#include "tmsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "tmsim/errors.hpp"

namespace tmsim {

LatencySummary summarize_latency(int message_size, std::vector<SimTime> rtts,
                                 int timeouts) {
  LatencySummary s;
  s.message_size = message_size;
  s.timeouts = timeouts;
  s.count = static_cast<int>(rtts.size());
  if (rtts.empty()) return s;
  std::sort(rtts.begin(), rtts.end());
  const auto rank = [&](double pct) {
    const int idx = static_cast<int>(std::ceil(pct / 100.0 * s.count));
    return rtts[static_cast<size_t>(std::max(idx, 1)) - 1];
  };
  int64_t sum = 0;
  for (SimTime t : rtts) sum += t.ns();
  s.mean = SimTime::from_ns(std::llround(static_cast<double>(sum) / s.count));
  s.p50 = rank(50.0);
  s.p99 = rank(99.0);
  s.min = rtts.front();
  s.max = rtts.back();
  return s;
}

MetricsSink::MetricsSink(SimTime throughput_window, int overhead_bytes)
    : window_(throughput_window), overhead_(overhead_bytes) {
  if (window_.ns() <= 0) throw ConfigError("throughput window must be positive");
  if (overhead_ < 0) throw ConfigError("overhead_bytes must be >= 0");
}

void MetricsSink::register_flow(const FlowId& flow) {
  window_bytes_[flow];
  flow_bytes_[flow];
}

void MetricsSink::record_delivery(const Packet& p, SimTime at) {
  const uint64_t goodput =
      static_cast<uint64_t>(std::max(0, p.size_bytes - overhead_));
  window_bytes_[p.flow][window_index(at)] += goodput;
  flow_bytes_[p.flow] += goodput;
  ++delivered_pkts_;
}

void MetricsSink::record_drop(const std::string& node, const std::string& buffer,
                              int queue, SimTime at) {
  ++drops_[DropKey{window_index(at), node, buffer, queue}];
  ++total_drops_;
}

void MetricsSink::record_occupancy(SimTime at, const std::string& node,
                                   const std::string& buffer, int queue,
                                   int packets) {
  occupancy_.push_back(OccRow{at, node, buffer, queue, packets});
}

double MetricsSink::mean_flow_bps(const FlowId& flow, SimTime from,
                                  SimTime to) const {
  auto it = window_bytes_.find(flow);
  if (it == window_bytes_.end() || to <= from) return 0.0;
  uint64_t bytes = 0;
  for (const auto& [w, b] : it->second) {
    const SimTime lo = window_ * w;
    const SimTime hi = window_ * (w + 1);
    if (lo >= from && hi <= to) bytes += b;
  }
  return static_cast<double>(bytes) * 8.0 / (to - from).sec();
}

uint64_t MetricsSink::delivered_goodput_bytes(const FlowId& flow) const {
  auto it = flow_bytes_.find(flow);
  return it == flow_bytes_.end() ? 0 : it->second;
}

std::vector<LatencySummary> MetricsSink::latency_summaries() const {
  std::map<int, std::vector<SimTime>> by_size;
  for (const auto& s : latency_) by_size[s.message_size].push_back(s.rtt);
  std::map<int, int> timeouts;
  for (const auto& [size, iter] : latency_timeouts_) ++timeouts[size];
  // A size whose every iteration timed out has no sample set to summarize.
  for (const auto& [size, n] : timeouts)
    if (!by_size.count(size))
      std::cerr << "warning: message size " << size
                << " has no completed iterations (" << n
                << " timeouts), omitted from summaries\n";

  std::vector<LatencySummary> out;
  for (const auto& [size, rtts] : by_size) {
    const auto t = timeouts.find(size);
    out.push_back(summarize_latency(size, rtts, t == timeouts.end() ? 0 : t->second));
  }
  return out;
}

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

}  // namespace

void MetricsSink::export_csvs(const std::string& dir) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());

  {
    auto out = open_out(dir + "/throughput.csv");
    out << "time_s,flow,bits_per_sec\n";
    const int64_t n_windows =
        (end_time_.ns() + window_.ns() - 1) / window_.ns();
    for (const auto& [flow, windows] : window_bytes_) {
      const std::string label = flow_label(flow);
      for (int64_t w = 0; w < n_windows; ++w) {
        const auto it = windows.find(w);
        const uint64_t bytes = it == windows.end() ? 0 : it->second;
        out << fmt("%.3f", (window_ * w).sec()) << ',' << label << ','
            << fmt("%.3f", static_cast<double>(bytes) * 8.0 / window_.sec())
            << '\n';
      }
    }
  }

  {
    auto out = open_out(dir + "/latency.csv");
    out << "msg_size_bytes,iteration,rtt_us\n";
    for (const auto& s : latency_)
      out << s.message_size << ',' << s.iteration << ','
          << fmt("%.3f", static_cast<double>(s.rtt.ns()) / 1000.0) << '\n';
  }

  {
    auto out = open_out(dir + "/occupancy.csv");
    out << "time_s,switch,buffer,queue,packets\n";
    for (const auto& row : occupancy_)
      out << fmt("%.3f", row.at.sec()) << ',' << row.node << ',' << row.buffer
          << ',' << row.queue << ',' << row.packets << '\n';
  }

  {
    auto out = open_out(dir + "/drops.csv");
    out << "time_s,switch,buffer,queue,count\n";
    for (const auto& [key, count] : drops_)
      out << fmt("%.3f", (window_ * key.window).sec()) << ',' << key.node << ','
          << key.buffer << ',' << key.queue << ',' << count << '\n';
  }
}

}  // namespace tmsim
