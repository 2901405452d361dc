#include "tmsim/traffic.hpp"

#include <algorithm>

#include "tmsim/errors.hpp"

namespace tmsim {

CbrSource::CbrSource(Engine& engine, PacketFactory& ids, HostNode& src,
                     CbrFlowSpec spec, SimTime phase)
    : engine_(engine), ids_(ids), src_(src), spec_(spec) {
  if (spec_.rate_bytes_per_sec <= 0.0)
    throw ConfigError("cbr: rate must be positive");
  if (spec_.packet_size_bytes < 1)
    throw ConfigError("cbr: packet size must be >= 1");
  if (spec_.jitter_frac < 0.0 || spec_.jitter_frac >= 1.0)
    throw ConfigError("cbr: jitter_frac must be in [0, 1)");
  spacing_ = transmission_time(spec_.packet_size_bytes, spec_.rate_bytes_per_sec);
  first_at_ = spec_.start + phase;
}

void CbrSource::start() {
  if (first_at_ >= spec_.stop) return;  // empty interval emits nothing
  engine_.schedule_at(first_at_, [this] { emit(); });
}

void CbrSource::emit() {
  const SimTime now = engine_.now();
  if (now >= spec_.stop) return;

  Packet p;
  p.id = ids_.alloc();
  p.flow = spec_.flow;
  p.size_bytes = spec_.packet_size_bytes;
  p.created_at = now;
  ++generated_;
  src_.send(p, now);

  SimTime gap = spacing_;
  if (spec_.jitter_frac > 0.0) {
    const double scale = 1.0 + spec_.jitter_frac * (2.0 * engine_.rng().uniform01() - 1.0);
    gap = SimTime::from_ns(std::llround(static_cast<double>(spacing_.ns()) * scale));
  }
  const SimTime next = now + gap;
  if (next < spec_.stop) engine_.schedule_at(next, [this] { emit(); });
}

std::vector<int> segment_sizes(int message_bytes, int mtu) {
  if (message_bytes < 1) throw ConfigError("message size must be >= 1");
  if (mtu < 1) throw ConfigError("mtu must be >= 1");
  std::vector<int> segs(static_cast<size_t>((message_bytes + mtu - 1) / mtu), mtu);
  if (const int rem = message_bytes % mtu; rem != 0) segs.back() = rem;
  return segs;
}

PingPong::PingPong(Engine& engine, PacketFactory& ids, HostNode& src,
                   HostNode& dst, PingPongSpec spec)
    : engine_(engine), ids_(ids), src_(src), dst_(dst), spec_(std::move(spec)) {
  if (spec_.iterations_per_size < 1)
    throw ConfigError("pingpong: iterations_per_size must be >= 1");
  if (spec_.message_sizes_bytes.empty())
    throw ConfigError("pingpong: need at least one message size");
  ping_flow_ = FlowId{spec_.src_host, spec_.dst_host, 0};
  pong_flow_ = FlowId{spec_.dst_host, spec_.src_host, 0};
}

void PingPong::start() {
  dst_.sinks.push_back(
      [this](const Packet& p, SimTime now) { on_at_responder(p, now); });
  src_.sinks.push_back(
      [this](const Packet& p, SimTime now) { on_at_sender(p, now); });
  engine_.schedule_at(spec_.start, [this] { begin_iteration(); });
}

void PingPong::begin_iteration() {
  const SimTime now = engine_.now();
  current_msg_ = next_msg_++;
  ping_bytes_seen_ = 0;
  pong_bytes_seen_ = 0;
  send_start_ = now;
  timeout_handle_ = engine_.schedule_in(spec_.timeout, [this] {
    timeouts_.emplace_back(spec_.message_sizes_bytes[size_idx_], iteration_);
    timeout_handle_.reset();
    advance();
  });
  send_message(src_, ping_flow_, PacketKind::Ping, current_msg_,
               spec_.message_sizes_bytes[size_idx_]);
}

void PingPong::send_message(HostNode& from, const FlowId& flow, PacketKind kind,
                            int msg_id, int size_bytes) {
  const SimTime now = engine_.now();
  for (int seg : segment_sizes(size_bytes, spec_.mtu)) {
    Packet p;
    p.id = ids_.alloc();
    p.flow = flow;
    p.size_bytes = seg;
    p.created_at = now;
    p.kind = kind;
    p.msg_id = msg_id;
    ++generated_;
    from.send(p, now);
  }
}

void PingPong::on_at_responder(const Packet& p, SimTime) {
  // Segments of abandoned (timed-out) messages are ignored.
  if (p.kind != PacketKind::Ping || p.msg_id != current_msg_) return;
  ping_bytes_seen_ += p.size_bytes;
  const int size = spec_.message_sizes_bytes[size_idx_];
  if (ping_bytes_seen_ == size)
    send_message(dst_, pong_flow_, PacketKind::Pong, p.msg_id, size);
}

void PingPong::on_at_sender(const Packet& p, SimTime now) {
  if (p.kind != PacketKind::Pong || p.msg_id != current_msg_) return;
  pong_bytes_seen_ += p.size_bytes;
  const int size = spec_.message_sizes_bytes[size_idx_];
  if (pong_bytes_seen_ != size) return;

  samples_.push_back(LatencySample{size, iteration_, now - send_start_});
  if (timeout_handle_) {
    engine_.cancel(*timeout_handle_);
    timeout_handle_.reset();
  }
  advance();
}

void PingPong::advance() {
  current_msg_ = -1;
  if (++iteration_ >= spec_.iterations_per_size) {
    iteration_ = 0;
    if (++size_idx_ >= spec_.message_sizes_bytes.size()) {
      finished_ = true;
      finished_at_ = engine_.now();
      if (on_complete) on_complete();
      return;
    }
  }
  begin_iteration();
}

}  // namespace tmsim
