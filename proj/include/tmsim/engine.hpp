#ifndef TMSIM_ENGINE_HPP
#define TMSIM_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <unordered_set>
#include <vector>

#include "tmsim/rng.hpp"
#include "tmsim/time.hpp"

namespace tmsim {

// Deterministic discrete-event engine. Events fire in (fire_at, seq) order;
// seq is a monotone counter, so events scheduled at the same instant run in
// schedule order regardless of heap internals. One engine per simulation;
// engines share no state and may run on separate threads.
class Engine {
 public:
  using Action = std::function<void()>;

  struct Handle {
    uint64_t seq = 0;
  };

  struct RunStats {
    uint64_t dispatched = 0;
    SimTime final_now;
    bool stopped = false;        // stop was requested before t_end
    bool event_limit_hit = false;
  };

  explicit Engine(uint64_t seed) : rng_(seed) {}

  SimTime now() const { return now_; }
  Rng& rng() { return rng_; }

  Handle schedule_at(SimTime fire_at, Action action);
  Handle schedule_in(SimTime delay, Action action) {
    return schedule_at(now_ + delay, std::move(action));
  }

  // True if the event existed and had not fired.
  bool cancel(Handle h);

  // Dispatches every event with fire_at <= t_end (closed bound), then sets
  // now to t_end. max_events guards runs that would otherwise not terminate.
  RunStats run_until(SimTime t_end, uint64_t max_events = kNoEventLimit);

  // Halts the dispatch loop after the current event completes.
  void request_stop() { stop_requested_ = true; }

  size_t pending_count() const { return heap_.size() - cancelled_.size(); }

  static constexpr uint64_t kNoEventLimit = UINT64_MAX;

 private:
  struct Item {
    SimTime at;
    uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Item& a, const Item& b) const {
      if (a.at != b.at) return b.at < a.at;
      return b.seq < a.seq;
    }
  };

  std::vector<Item> heap_;  // min-heap via std::push_heap/pop_heap with Later
  std::unordered_set<uint64_t> cancelled_;
  SimTime now_;
  uint64_t next_seq_ = 0;
  bool stop_requested_ = false;
  Rng rng_;
};

}  // namespace tmsim

#endif
