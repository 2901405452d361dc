// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Scenario specs come from TMSIM_SCENARIO_DIR (the bundled files).
#include <algorithm>
#include <cstdarg>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tmsim/rng.hpp"
#include "tmsim/scenario.hpp"
#include "tmsim/scheduler.hpp"
#include "tmsim/sha256.hpp"

using namespace tmsim;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* format, ...) {
  va_list args;
  va_start(args, format);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

std::string scenario_dir() { return TMSIM_SCENARIO_DIR; }

RunResult run_bundled(const std::string& name, const std::string& out_dir) {
  const std::string path = scenario_dir() + "/" + name + ".json";
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return run_scenario(parse_scenario(buf.str()), out_dir, buf.str());
}

std::map<int, double> median_rtt_ms(const RunResult& r) {
  std::map<int, std::vector<SimTime>> by;
  for (const auto& s : r.latency) by[s.message_size].push_back(s.rtt);
  std::map<int, double> med;
  for (auto& [size, v] : by) {
    std::sort(v.begin(), v.end());
    med[size] = v[(v.size() - 1) / 2].sec() * 1e3;
  }
  return med;
}

// ---- criterion 1: PROACTIVE bandwidth shares -------------------------------

struct ProactiveStats {
  double hp_mid = 0, lp_pre = 0, lp_post = 0, min_mid = 1e18;
  double wall = 0;
  bool ok = false;
};

ProactiveStats proactive_stats(const RunResult& r) {
  ProactiveStats s;
  const SimTime t0, t90 = SimTime::from_sec(90), t180 = SimTime::from_sec(180),
                      t270 = SimTime::from_sec(270);
  s.hp_mid = r.metrics.mean_flow_bps(FlowId{7, 8, 0}, t90, t180);
  s.min_mid = s.hp_mid;
  for (int i = 1; i <= 6; ++i) {
    const FlowId f{i, 8, i};
    s.lp_pre += r.metrics.mean_flow_bps(f, t0, t90);
    s.lp_post += r.metrics.mean_flow_bps(f, t180, t270);
    s.min_mid = std::min(s.min_mid, r.metrics.mean_flow_bps(f, t90, t180));
  }
  s.wall = r.wall_seconds;
  s.ok = r.ok;
  return s;
}

void criterion1(const RunResult& no, const RunResult& strict,
                const RunResult& rlspdrr) {
  const double link = 1.25e6 * 8;  // 10 Mbps
  const ProactiveStats n = proactive_stats(no);
  const ProactiveStats s = proactive_stats(strict);
  const ProactiveStats d = proactive_stats(rlspdrr);

  bool pass = n.ok && s.ok && d.ok;
  // NO: fair FIFO share for the injected flow, nobody starves
  pass &= std::abs(n.hp_mid - link / 7) <= 0.10 * link / 7;
  pass &= n.min_mid >= 0.01 * link;
  // STRICT and RL-SP-DRR: measured high-priority share in [5.3 Mbps,
  // 6.0 Mbps + one packet]
  const double hp_hi = 0.6 * link + 1500 * 8;
  pass &= s.hp_mid >= 5.3e6 && s.hp_mid <= hp_hi;
  pass &= d.hp_mid >= 5.3e6 && d.hp_mid <= hp_hi;
  // RL-SP-DRR work conservation around the injection window
  pass &= d.lp_pre >= 0.95 * link && d.lp_post >= 0.95 * link;
  // STRICT underutilisation with the same static rates
  pass &= s.lp_pre <= (1.0 - 0.6 + 0.05) * link;
  // desk-scale runtime
  pass &= n.wall < 30.0 && s.wall < 30.0 && d.wall < 30.0;

  report(1, pass,
         fmt("PROACTIVE shares: NO hp=%.3f Mbps (link/7=%.3f +-10%%) min=%.2f; "
             "STRICT hp=%.3f, lp_pre=%.1f%%<=45%%; RL-SP-DRR hp=%.3f in "
             "[5.3,6.0], lp_pre=%.1f%% lp_post=%.1f%%>=95%%; wall %.1f/%.1f/%.1fs",
             n.hp_mid / 1e6, link / 7e6, n.min_mid / 1e6, s.hp_mid / 1e6,
             100 * s.lp_pre / link, d.hp_mid / 1e6, 100 * d.lp_pre / link,
             100 * d.lp_post / link, n.wall, s.wall, d.wall));
}

// ---- criterion 2: MPI latency ordering -------------------------------------

void criterion2(const RunResult& no, const RunResult& strict,
                const RunResult& rlspdrr) {
  const auto mn = median_rtt_ms(no);
  const auto ms = median_rtt_ms(strict);
  const auto md = median_rtt_ms(rlspdrr);
  bool pass = no.ok && strict.ok && rlspdrr.ok;
  double worst_sep = 1.0;
  std::string detail;
  for (const auto& [size, med_no] : mn) {
    if (size < 1024) continue;
    if (!ms.count(size) || !md.count(size)) {
      pass = false;
      continue;
    }
    const double med_s = ms.at(size), med_d = md.at(size);
    const double sep_sd = (med_d - med_s) / med_d;
    const double sep_dn = (med_no - med_d) / med_no;
    pass &= med_s < med_d && med_d < med_no;
    pass &= sep_sd >= 0.20 && sep_dn >= 0.20;
    worst_sep = std::min({worst_sep, sep_sd, sep_dn});
    if (size == 16384)
      detail = fmt("16384B medians %.1f < %.1f < %.1f ms", med_s, med_d, med_no);
  }
  report(2, pass,
         fmt("MPI latency ordering STRICT < RL-SP-DRR < NO for sizes >= 1024B, "
             "min separation %.0f%% (>=20%%); %s",
             100 * worst_sep, detail.c_str()));
}

// ---- criterion 3: buffer-occupancy contrast --------------------------------

void criterion3(const RunResult& strict, const RunResult& rlspdrr) {
  double strict_max_frac = 0.0;
  for (const auto& p : strict.output_peaks)
    strict_max_frac = std::max(
        strict_max_frac, static_cast<double>(p.peak) / p.capacity);
  bool rl_full = false;
  for (const auto& p : rlspdrr.output_peaks) rl_full |= p.peak == p.capacity;
  const bool pass = strict_max_frac <= 0.10 && rl_full;
  report(3, pass,
         fmt("MPI output buffers: STRICT peak %.1f%% of capacity (<=10%%), "
             "RL-SP-DRR reached 100%%: %s",
             100 * strict_max_frac, rl_full ? "yes" : "no"));
}

// ---- criterion 4: DRR oracle equivalence -----------------------------------

std::vector<std::pair<int, int>> reference_drr(std::vector<std::deque<int>> queues,
                                               const std::vector<int>& quanta) {
  std::vector<std::pair<int, int>> order;
  std::deque<int> active;
  for (size_t i = 0; i < queues.size(); ++i)
    if (!queues[i].empty()) active.push_back(static_cast<int>(i));
  std::vector<int64_t> deficit(queues.size(), 0);
  while (!active.empty()) {
    const int q = active.front();
    active.pop_front();
    deficit[q] += quanta[q];
    while (!queues[q].empty() && queues[q].front() <= deficit[q]) {
      deficit[q] -= queues[q].front();
      order.emplace_back(q, queues[q].front());
      queues[q].pop_front();
    }
    if (queues[q].empty())
      deficit[q] = 0;
    else
      active.push_back(q);
  }
  return order;
}

void criterion4() {
  Rng rng(0xD22);
  int instances = 0;
  bool order_ok = true;
  for (; instances < 1000; ++instances) {
    const int n_queues = static_cast<int>(rng.uniform_int(1, 4));
    std::vector<std::deque<int>> backlogs(n_queues);
    std::vector<int> quanta(n_queues);
    for (int q = 0; q < n_queues; ++q)
      quanta[q] = static_cast<int>(rng.uniform_int(1, 3000));
    const int total = static_cast<int>(rng.uniform_int(1, 50));
    for (int i = 0; i < total; ++i)
      backlogs[rng.uniform_int(0, n_queues - 1)].push_back(
          static_cast<int>(rng.uniform_int(1, kDefaultMtu)));

    std::vector<QueueConfig> cfgs(1);
    cfgs[0].rate_bytes_per_sec = 1e6;
    for (int q = 0; q < n_queues; ++q) {
      QueueConfig c;
      c.priority = q + 1;
      c.quantum_bytes = quanta[q];
      c.capacity_pkts = 64;
      cfgs.push_back(c);
    }
    EgressBuffer buf(Policy::RlSpDrr, cfgs);
    uint64_t id = 0;
    for (int q = 0; q < n_queues; ++q)
      for (int size : backlogs[q]) {
        Packet p;
        p.id = ++id;
        p.size_bytes = size;
        p.flow = FlowId{1, 2, q + 1};
        buf.enqueue(q + 1, p, SimTime{});
      }
    for (const auto& [queue, size] : reference_drr(backlogs, quanta)) {
      const DequeueOutcome oc = buf.dequeue(SimTime{});
      order_ok &= oc.packet && oc.queue_index - 1 == queue &&
                  oc.packet->size_bytes == size;
    }
    order_ok &= buf.dequeue(SimTime{}).empty();
    if (!order_ok) break;
  }

  // long-run byte shares proportional to quanta, one max packet per round
  bool shares_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const int n_queues = static_cast<int>(rng.uniform_int(2, 4));
    std::vector<QueueConfig> cfgs(1);
    cfgs[0].rate_bytes_per_sec = 1e6;
    std::vector<int> quanta(n_queues);
    for (int q = 0; q < n_queues; ++q) {
      quanta[q] = static_cast<int>(rng.uniform_int(kDefaultMtu, 3000));
      QueueConfig c;
      c.priority = q + 1;
      c.quantum_bytes = quanta[q];
      c.capacity_pkts = 6000;
      cfgs.push_back(c);
    }
    EgressBuffer buf(Policy::RlSpDrr, cfgs);
    uint64_t id = 0;
    for (int q = 0; q < n_queues; ++q)
      for (int i = 0; i < 5000; ++i) {
        Packet p;
        p.id = ++id;
        p.size_bytes = static_cast<int>(rng.uniform_int(64, kDefaultMtu));
        p.flow = FlowId{1, 2, q + 1};
        buf.enqueue(q + 1, p, SimTime{});
      }
    for (int k = 0; k < 6000; ++k) buf.drr_select();
    for (int q = 1; q <= n_queues; ++q) shares_ok &= !buf.queue(q).fifo.empty();
    for (int a = 1; a <= n_queues; ++a)
      for (int b = 1; b <= n_queues; ++b)
        shares_ok &=
            std::abs(static_cast<double>(buf.queue(a).served_bytes) / quanta[a - 1] -
                     static_cast<double>(buf.queue(b).served_bytes) / quanta[b - 1]) <=
            2.0 + 1e-9;
  }

  report(4, order_ok && shares_ok,
         fmt("DRR equivalence: %d randomized instances match the brute-force "
             "reference exactly; byte shares proportional to quanta (50 "
             "backlogged trials)",
             instances));
}

// ---- criterion 5: HPQ rate cap ---------------------------------------------

void criterion5() {
  const double R = 750000.0;
  bool pass = true;
  int seeds = 0;
  for (; seeds < 100; ++seeds) {
    Rng rng(1000 + seeds);
    EgressBuffer buf(Policy::RlSpDrr, [] {
      std::vector<QueueConfig> cfgs(2);
      cfgs[0].rate_bytes_per_sec = 750000.0;
      cfgs[0].capacity_pkts = 100000;
      cfgs[1].priority = 1;
      return cfgs;
    }());
    std::vector<std::pair<SimTime, int>> arrivals;
    SimTime t;
    for (int i = 0; i < 400; ++i) {
      const bool idle = rng.uniform01() < 0.05;
      t += SimTime::from_ns(
          static_cast<int64_t>(rng.uniform(0.0, idle ? 2e8 : 4e6)));
      arrivals.emplace_back(t, static_cast<int>(rng.uniform_int(64, 1500)));
    }
    std::vector<std::pair<SimTime, int>> served;
    SimTime now;
    size_t next = 0;
    uint64_t id = 0;
    for (;;) {
      while (next < arrivals.size() && arrivals[next].first <= now) {
        Packet p;
        p.id = ++id;
        p.size_bytes = arrivals[next].second;
        buf.enqueue(0, p, now);
        ++next;
      }
      const DequeueOutcome oc = buf.dequeue(now);
      if (oc.packet) {
        served.emplace_back(now, oc.packet->size_bytes);
        continue;
      }
      SimTime jump;
      bool have = false;
      if (oc.idle_until) {
        jump = *oc.idle_until;
        have = true;
      }
      if (next < arrivals.size() &&
          (!have || arrivals[next].first < jump)) {
        jump = arrivals[next].first;
        have = true;
      }
      if (!have) break;
      now = jump;
    }
    std::vector<uint64_t> prefix(served.size() + 1, 0);
    for (size_t i = 0; i < served.size(); ++i)
      prefix[i + 1] = prefix[i] + static_cast<uint64_t>(served[i].second);
    for (size_t i = 0; i < served.size() && pass; ++i)
      for (size_t j = i; j < served.size(); ++j) {
        const double w = (served[j].first - served[i].first).sec();
        if (w < 0.010) continue;
        pass &= static_cast<double>(prefix[j + 1] - prefix[i]) <=
                R * w + kDefaultMtu;
      }
    if (!pass) break;
  }
  report(5, pass,
         fmt("rate cap: HPQ service <= R*W + MTU over every window >= 10 ms "
             "(%d random arrival seeds)",
             seeds));
}

// ---- criterion 6: pps vs Bps accuracy --------------------------------------

void criterion6() {
  const double R = 1.25e6;
  const double horizon = 10.0;

  auto drain_bytes = [&](EgressBuffer& buf) {
    uint64_t bytes = 0;
    SimTime now;
    for (;;) {
      const DequeueOutcome oc = buf.dequeue(now);
      if (oc.packet) {
        bytes += static_cast<uint64_t>(oc.packet->size_bytes);
        continue;
      }
      if (oc.idle_until && oc.idle_until->sec() <= horizon) {
        now = *oc.idle_until;
        continue;
      }
      break;
    }
    return static_cast<double>(bytes) / horizon;
  };

  QueueConfig pps;
  pps.rate_pkts_per_sec = R / kDefaultMtu;
  pps.capacity_pkts = 30000;
  EgressBuffer pps_buf(Policy::StrictPps, {pps});
  QueueConfig bps;
  bps.rate_bytes_per_sec = R;
  bps.capacity_pkts = 30000;
  EgressBuffer bps_buf(Policy::StrictBps, {bps});
  for (uint64_t i = 0; i < 26000; ++i) {
    Packet p;
    p.id = i;
    p.size_bytes = 500;
    pps_buf.enqueue(0, p, SimTime{});
    bps_buf.enqueue(0, p, SimTime{});
  }
  const double pps_rate = drain_bytes(pps_buf);
  const double bps_rate = drain_bytes(bps_buf);
  const bool pass = std::abs(pps_rate - R / 3) <= 0.02 * (R / 3) &&
                    std::abs(bps_rate - R) <= 0.02 * R;
  report(6, pass,
         fmt("pps limiter at R/MTU with 500B packets achieves %.0f B/s "
             "(R/3=%.0f +-2%%); Bps limiter achieves %.0f (R=%.0f +-2%%)",
             pps_rate, R / 3, bps_rate, R));
}

// ---- criterion 7: command-count formulas -----------------------------------

void criterion7() {
  bool pass = true;
  for (long long n = 1; n <= 50 && pass; ++n)
    for (long long m = 1; m <= 50 && pass; ++m)
      for (long long p = 0; p <= m; ++p) {
        pass &= command_count({n, m, p, CommandMode::StrictFull}) == n * m;
        pass &= command_count({n, m, p, CommandMode::RlSpDrr}) == n * p;
        pass &= command_count({n, m, p, CommandMode::StrictProactiveAdjust}) ==
                n * (m - p);
      }
  // 30 processes per host, one prioritized: 30x fewer commands
  for (long long n : {1LL, 4LL, 50LL})
    pass &= command_count({n, 30, 1, CommandMode::StrictFull}) ==
            30 * command_count({n, 30, 1, CommandMode::RlSpDrr});
  report(7, pass,
         "command counts equal N*M, N*P, N*(M-P) on the 1..50 grid; "
         "STRICT/RL-SP-DRR ratio is 30 at M=30, P=1");
}

// ---- criterion 8: determinism ----------------------------------------------

std::string file_hash(const std::string& path) { return sha256_file_hex(path); }

void criterion8(const std::string& out_root) {
  const char* names[] = {"proactive_no", "proactive_strict", "proactive_rlspdrr",
                         "mpi_no",       "mpi_strict",       "mpi_rlspdrr"};
  const char* files[] = {"throughput.csv", "latency.csv", "occupancy.csv",
                         "drops.csv", "manifest.json"};
  bool pass = true;
  int compared = 0;
  for (const char* name : names) {
    const std::string a = out_root + "/a/" + name;
    const std::string b = out_root + "/b/" + name;
    run_bundled(name, b);
    for (const char* f : files) {
      pass &= file_hash(a + "/" + f) == file_hash(b + "/" + f);
      ++compared;
    }
  }
  report(8, pass,
         fmt("determinism: re-running all 6 bundled specs reproduced %d "
             "byte-identical export files",
             compared));
}

}  // namespace

int main() {
  const std::string out_root = "acceptance_out";
  std::filesystem::remove_all(out_root);

  const RunResult p_no = run_bundled("proactive_no", out_root + "/a/proactive_no");
  const RunResult p_st =
      run_bundled("proactive_strict", out_root + "/a/proactive_strict");
  const RunResult p_dr =
      run_bundled("proactive_rlspdrr", out_root + "/a/proactive_rlspdrr");
  const RunResult m_no = run_bundled("mpi_no", out_root + "/a/mpi_no");
  const RunResult m_st = run_bundled("mpi_strict", out_root + "/a/mpi_strict");
  const RunResult m_dr = run_bundled("mpi_rlspdrr", out_root + "/a/mpi_rlspdrr");

  criterion1(p_no, p_st, p_dr);
  criterion2(m_no, m_st, m_dr);
  criterion3(m_st, m_dr);
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8(out_root);

  if (g_failures == 0) {
    std::printf("all 8 acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d criteria failed\n", g_failures);
  return 1;
}
