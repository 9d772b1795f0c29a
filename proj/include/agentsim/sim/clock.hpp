#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

namespace agentsim {

// Single-threaded virtual-time event loop. Events fire in (time, insertion
// sequence) order, so identical schedules replay identically.
class EventQueue {
 public:
  using Handler = std::function<void(double now)>;

  void schedule(double time, Handler fn) {
    if (time + 1e-12 < now_) throw std::logic_error("schedule in the past");
    heap_.push(Event{time, seq_++, std::move(fn)});
  }

  void schedule_in(double delay, Handler fn) { schedule(now_ + delay, std::move(fn)); }

  double now() const { return now_; }
  bool empty() const { return heap_.empty(); }
  std::size_t processed() const { return processed_; }

  // Runs every event (events may schedule more). Returns the final time.
  double run() {
    while (!heap_.empty()) {
      Event ev = heap_.top();
      heap_.pop();
      now_ = ev.time;
      ++processed_;
      ev.fn(now_);
    }
    return now_;
  }

 private:
  struct Event {
    double time;
    std::uint64_t seq;
    Handler fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t seq_ = 0;
  std::size_t processed_ = 0;
  double now_ = 0.0;
};

}  // namespace agentsim
