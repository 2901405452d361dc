#include "tmsim/engine.hpp"

#include <algorithm>
#include <string>

#include "tmsim/errors.hpp"

namespace tmsim {

Engine::Handle Engine::schedule_at(SimTime fire_at, Action action) {
  if (fire_at < now_)
    throw CausalityError("schedule_at: fire_at " + std::to_string(fire_at.ns()) +
                         "ns is before now " + std::to_string(now_.ns()) + "ns");
  Handle h{next_seq_++};
  heap_.push_back(Item{fire_at, h.seq, std::move(action)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
  return h;
}

bool Engine::cancel(Handle h) {
  if (h.seq >= next_seq_) return false;
  return cancelled_.insert(h.seq).second;
}

Engine::RunStats Engine::run_until(SimTime t_end, uint64_t max_events) {
  if (t_end < now_)
    throw CausalityError("run_until: t_end is before now");
  RunStats stats;
  stop_requested_ = false;
  while (!heap_.empty()) {
    if (heap_.front().at > t_end) break;
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Item item = std::move(heap_.back());
    heap_.pop_back();
    if (auto it = cancelled_.find(item.seq); it != cancelled_.end()) {
      cancelled_.erase(it);
      continue;
    }
    now_ = item.at;
    item.action();
    ++stats.dispatched;
    if (stop_requested_) {
      stats.stopped = true;
      break;
    }
    if (stats.dispatched >= max_events) {
      stats.event_limit_hit = true;
      break;
    }
  }
  if (!stats.stopped && !stats.event_limit_hit) now_ = t_end;
  stats.final_now = now_;
  return stats;
}

}  // namespace tmsim
