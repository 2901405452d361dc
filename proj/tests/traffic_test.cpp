#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "tmsim/errors.hpp"
#include "tmsim/switch.hpp"
#include "tmsim/traffic.hpp"

using namespace tmsim;

namespace {

QueueConfig be_cfg(int capacity = 64) {
  QueueConfig c;
  c.capacity_pkts = capacity;
  return c;
}

QueueConfig hpq_cfg(double rate) {
  QueueConfig c;
  c.rate_bytes_per_sec = rate;
  return c;
}

QueueConfig lpq_cfg() {
  QueueConfig c;
  c.priority = 1;
  return c;
}

// Two hosts on one switch, best-effort unless told otherwise, with the
// ping/pong flows routed both ways.
struct Loop {
  Engine engine{1};
  std::unique_ptr<Topology> topo;
  PacketFactory ids;

  explicit Loop(Policy policy = Policy::BestEffort, double capacity = 1.25e6,
                int host_tx_capacity = 1024, int egress_capacity = 64) {
    topo = build_single_switch(engine, 2, capacity, 64, host_tx_capacity);
    SwitchNode& sw = topo->sw(0);
    for (int src = 1; src <= 2; ++src) {
      const int dst = 3 - src;
      const int port = topo->path(src, dst).front().second;
      if (policy == Policy::BestEffort) {
        sw.configure_port(port, policy, {be_cfg(egress_capacity)});
        sw.install_route(FlowId{src, dst, 0}, port, 0);
        sw.install_route(FlowId{src, dst, 1}, port, 0);
      } else {
        sw.configure_port(port, policy, {hpq_cfg(0.6 * capacity), lpq_cfg()});
        sw.install_route(FlowId{src, dst, 0}, port, 0);
        sw.install_route(FlowId{src, dst, 1}, port, 1);
      }
    }
  }
};

}  // namespace

TEST_CASE("cbr emits on the exact spacing grid") {
  Engine engine(1);
  auto topo = build_single_switch(engine, 2, 1.25e6);
  PacketFactory ids;
  std::vector<SimTime> forwarded;
  topo->host(1).forward = [&](const Packet&, SimTime now) {
    forwarded.push_back(now);
  };
  CbrFlowSpec spec;
  spec.flow = FlowId{1, 2, 1};
  spec.rate_bytes_per_sec = 1.25e6;
  spec.packet_size_bytes = 1500;
  spec.stop = SimTime::from_ms(6);
  CbrSource src(engine, ids, topo->host(1), spec);
  src.start();
  engine.run_until(SimTime::from_sec(1.0));

  CHECK(src.generated() == 5);
  REQUIRE(forwarded.size() == 5);
  // the 1.2 ms serialization shifts every arrival by a constant
  for (size_t i = 0; i < 5; ++i)
    CHECK(forwarded[i] == SimTime::from_ns(1200000) * static_cast<int64_t>(i + 1));
}

TEST_CASE("an empty emission interval yields no packets") {
  Engine engine(1);
  auto topo = build_single_switch(engine, 2, 1.25e6);
  PacketFactory ids;
  CbrFlowSpec spec;
  spec.flow = FlowId{1, 2, 1};
  spec.rate_bytes_per_sec = 1.25e6;
  spec.packet_size_bytes = 1500;
  spec.start = SimTime::from_ms(5);
  spec.stop = SimTime::from_ms(5);
  CbrSource src(engine, ids, topo->host(1), spec);
  src.start();
  engine.run_until(SimTime::from_sec(1.0));
  CHECK(src.generated() == 0);

  // a packet landing exactly on stop is excluded
  Engine engine2(1);
  auto topo2 = build_single_switch(engine2, 2, 1.25e6);
  topo2->host(1).forward = [](const Packet&, SimTime) {};
  CbrFlowSpec one = spec;
  one.stop = spec.start + SimTime::from_ns(1200000);
  CbrSource src2(engine2, ids, topo2->host(1), one);
  src2.start();
  engine2.run_until(SimTime::from_sec(2.0));
  CHECK(src2.generated() == 1);
}

TEST_CASE("offered load over whole spacing intervals equals the rate exactly") {
  Engine engine(1);
  auto topo = build_single_switch(engine, 2, 2.5e6);
  topo->host(1).forward = [](const Packet&, SimTime) {};
  PacketFactory ids;
  CbrFlowSpec spec;
  spec.flow = FlowId{1, 2, 1};
  spec.rate_bytes_per_sec = 1.0e6;
  spec.packet_size_bytes = 1000;
  spec.stop = SimTime::from_sec(3.0);  // 3000 spacing intervals of 1 ms
  CbrSource src(engine, ids, topo->host(1), spec);
  src.start();
  engine.run_until(SimTime::from_sec(4.0));
  CHECK(src.generated() * 1000 == 3000000);
}

TEST_CASE("segmentation splits at the MTU with a remainder tail") {
  const auto segs = segment_sizes(16384, 1500);
  REQUIRE(segs.size() == 11);
  for (int i = 0; i < 10; ++i) CHECK(segs[i] == 1500);
  CHECK(segs[10] == 1384);

  CHECK(segment_sizes(3000, 1500) == std::vector<int>{1500, 1500});
  CHECK(segment_sizes(1, 1500) == std::vector<int>{1});
  CHECK(segment_sizes(64, 1500) == std::vector<int>{64});
}

TEST_CASE("idle best-effort ping-pong takes four hop transmissions exactly") {
  Loop loop;
  PingPongSpec spec;
  spec.src_host = 1;
  spec.dst_host = 2;
  spec.message_sizes_bytes = {1500};
  spec.iterations_per_size = 3;
  PingPong pp(loop.engine, loop.ids, loop.topo->host(1), loop.topo->host(2), spec);
  pp.start();
  loop.engine.run_until(SimTime::from_sec(5.0));

  REQUIRE(pp.finished());
  REQUIRE(pp.samples().size() == 3);
  for (const auto& s : pp.samples())
    CHECK(s.rtt == SimTime::from_ns(4 * 1200000));
  CHECK(pp.timeouts().empty());
}

TEST_CASE("rate-limited HPQ pacing adds scheduling slack to the idle rtt") {
  Loop loop(Policy::RlSpDrr);
  PingPongSpec spec;
  spec.src_host = 1;
  spec.dst_host = 2;
  spec.message_sizes_bytes = {1500};
  spec.iterations_per_size = 1;
  PingPong pp(loop.engine, loop.ids, loop.topo->host(1), loop.topo->host(2), spec);
  pp.start();
  loop.engine.run_until(SimTime::from_sec(5.0));

  REQUIRE(pp.samples().size() == 1);
  // per direction: 1.2 ms in, 2 ms shaper wait at 0.6C, 1.2 ms out
  CHECK(pp.samples()[0].rtt == SimTime::from_ns(8800000));
}

TEST_CASE("multi-segment messages reassemble before the reply") {
  Loop loop;
  PingPongSpec spec;
  spec.src_host = 1;
  spec.dst_host = 2;
  spec.message_sizes_bytes = {16384};
  spec.iterations_per_size = 2;
  PingPong pp(loop.engine, loop.ids, loop.topo->host(1), loop.topo->host(2), spec);
  pp.start();
  loop.engine.run_until(SimTime::from_sec(5.0));

  REQUIRE(pp.finished());
  REQUIRE(pp.samples().size() == 2);
  // 11 segments pipeline each way; the short tail segment reaches the
  // switch while the previous full-size one is still on the wire, so each
  // direction costs 11 full serializations plus the tail's own
  const SimTime one_way =
      transmission_time(1500, 1.25e6) * 11 + transmission_time(1384, 1.25e6);
  CHECK(pp.samples()[0].rtt == one_way * 2);
  CHECK(pp.samples()[1].rtt == pp.samples()[0].rtt);
  CHECK(pp.generated() == 2 * 2 * 11);
}

TEST_CASE("lost segments time out, are recorded separately, and do not stall") {
  // The sender's access queue is saturated by a 2C-offered flow, so ping
  // segments are tail-dropped at the host and every iteration times out.
  Loop loop(Policy::BestEffort, 1.25e6, /*host_tx_capacity=*/8);
  CbrFlowSpec congest;
  congest.flow = FlowId{1, 2, 1};
  congest.rate_bytes_per_sec = 2.5e6;
  congest.packet_size_bytes = 1500;
  congest.stop = SimTime::from_sec(30.0);
  CbrSource src(loop.engine, loop.ids, loop.topo->host(1), congest);
  src.start();

  PingPongSpec spec;
  spec.src_host = 1;
  spec.dst_host = 2;
  spec.message_sizes_bytes = {1500};
  spec.iterations_per_size = 4;
  spec.timeout = SimTime::from_ms(50);
  spec.start = SimTime::from_ms(100);
  PingPong pp(loop.engine, loop.ids, loop.topo->host(1), loop.topo->host(2), spec);
  pp.start();
  loop.engine.run_until(SimTime::from_sec(10.0));

  REQUIRE(pp.finished());
  CHECK(pp.samples().empty());
  REQUIRE(pp.timeouts().size() == 4);
  CHECK(pp.timeouts()[0] == std::pair<int, int>{1500, 0});
  CHECK(pp.timeouts()[3] == std::pair<int, int>{1500, 3});
  // strictly serial: iterations are spaced by the timeout
  CHECK(pp.finished_at() == spec.start + spec.timeout * 4);
}

TEST_CASE("congested rtt dominates idle rtt for every size") {
  PingPongSpec spec;
  spec.src_host = 1;
  spec.dst_host = 2;
  spec.message_sizes_bytes = {1500, 4096};
  spec.iterations_per_size = 20;
  spec.timeout = SimTime::from_sec(5.0);

  auto median_rtt = [&](bool congested) {
    Loop loop;
    if (congested) {
      CbrFlowSpec lp;
      lp.flow = FlowId{1, 2, 1};
      lp.rate_bytes_per_sec = 1.2e6;  // just under the access link
      lp.packet_size_bytes = 1500;
      lp.stop = SimTime::from_sec(60.0);
      lp.jitter_frac = 0.2;
      static std::vector<std::unique_ptr<CbrSource>> keep;
      keep.push_back(std::make_unique<CbrSource>(loop.engine, loop.ids,
                                                 loop.topo->host(1), lp));
      keep.back()->start();
    }
    PingPongSpec s = spec;
    s.start = SimTime::from_sec(1.0);
    PingPong pp(loop.engine, loop.ids, loop.topo->host(1), loop.topo->host(2), s);
    pp.start();
    loop.engine.run_until(SimTime::from_sec(120.0));
    REQUIRE(pp.finished());
    std::vector<std::vector<SimTime>> by_size(2);
    for (const auto& sample : pp.samples())
      by_size[sample.message_size == 1500 ? 0 : 1].push_back(sample.rtt);
    std::vector<SimTime> medians;
    for (auto& v : by_size) {
      REQUIRE(!v.empty());
      std::sort(v.begin(), v.end());
      medians.push_back(v[(v.size() - 1) / 2]);
    }
    return medians;
  };

  const auto idle = median_rtt(false);
  const auto congested = median_rtt(true);
  CHECK(congested[0] >= idle[0]);
  CHECK(congested[1] >= idle[1]);
}

TEST_CASE("double-rate demand delivers half, the rest drops upstream") {
  Engine engine(1);
  auto topo = build_single_switch(engine, 2, 1.25e6, 64, /*host_tx=*/64);
  SwitchNode& sw = topo->sw(0);
  const int port = topo->path(1, 2).front().second;
  sw.configure_port(port, Policy::BestEffort, {be_cfg()});
  sw.install_route(FlowId{1, 2, 1}, port, 0);

  uint64_t delivered = 0;
  topo->host(2).sinks.push_back([&](const Packet&, SimTime) { ++delivered; });

  PacketFactory ids;
  CbrFlowSpec spec;
  spec.flow = FlowId{1, 2, 1};
  spec.rate_bytes_per_sec = 2.5e6;  // 2x the link
  spec.packet_size_bytes = 1500;
  spec.stop = SimTime::from_sec(30.0);
  CbrSource src(engine, ids, topo->host(1), spec);
  src.start();
  engine.run_until(SimTime::from_sec(31.0));

  const double ratio =
      static_cast<double>(delivered) / static_cast<double>(src.generated());
  CHECK(ratio == doctest::Approx(0.5).epsilon(0.02));
  CHECK(topo->host(1).tx_drops() + delivered +
            static_cast<uint64_t>(topo->host(1).tx_occupancy()) ==
        src.generated());
}

TEST_CASE("packet ids from one factory never collide") {
  Loop loop;
  CbrFlowSpec a;
  a.flow = FlowId{1, 2, 1};
  a.rate_bytes_per_sec = 2.0e5;
  a.packet_size_bytes = 400;
  a.stop = SimTime::from_sec(1.0);
  CbrFlowSpec b = a;
  b.flow = FlowId{2, 1, 1};
  CbrSource src_a(loop.engine, loop.ids, loop.topo->host(1), a);
  CbrSource src_b(loop.engine, loop.ids, loop.topo->host(2), b);
  src_a.start();
  src_b.start();
  PingPongSpec pp_spec;
  pp_spec.src_host = 1;
  pp_spec.dst_host = 2;
  pp_spec.message_sizes_bytes = {3000};
  pp_spec.iterations_per_size = 10;
  PingPong pp(loop.engine, loop.ids, loop.topo->host(1), loop.topo->host(2),
              pp_spec);
  pp.start();

  std::set<uint64_t> ids;
  uint64_t seen = 0;
  for (int h = 1; h <= 2; ++h)
    loop.topo->host(h).sinks.push_back([&](const Packet& p, SimTime) {
      ++seen;
      CHECK(ids.insert(p.id).second);
    });
  loop.engine.run_until(SimTime::from_sec(30.0));
  CHECK(seen == ids.size());
  CHECK(ids.size() > 400);
}

TEST_CASE("jittered gaps keep the mean rate") {
  Engine engine(7);
  auto topo = build_single_switch(engine, 2, 1.25e7);
  topo->host(1).forward = [](const Packet&, SimTime) {};
  PacketFactory ids;
  CbrFlowSpec spec;
  spec.flow = FlowId{1, 2, 1};
  spec.rate_bytes_per_sec = 1.25e6;
  spec.packet_size_bytes = 1500;
  spec.stop = SimTime::from_sec(120.0);
  spec.jitter_frac = 0.25;
  CbrSource src(engine, ids, topo->host(1), spec);
  src.start();
  engine.run_until(SimTime::from_sec(121.0));
  // 100000 nominal emissions over 120 s
  CHECK(static_cast<double>(src.generated()) ==
        doctest::Approx(100000.0).epsilon(0.01));
}
