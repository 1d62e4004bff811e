#pragma once

#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace vanetsim {

/// Simulated time in seconds.
using SimTime = double;

using NodeId = std::uint32_t;

inline constexpr NodeId kBroadcast = std::numeric_limits<NodeId>::max();
inline constexpr NodeId kGlobal = std::numeric_limits<NodeId>::max() - 1;

/// Thrown when an event is scheduled in the past or time would run backwards.
class SchedulerMisuse : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class EventKind {
  kTimer,
  kFrameDelivery,
  kTxStart,
  kWaypointArrival,
  kMotionStart,
  kPeriodicUpdate,
  kAppSend,
  kLinkWatch,
};

inline const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kTimer: return "timer";
    case EventKind::kFrameDelivery: return "deliver";
    case EventKind::kTxStart: return "tx-start";
    case EventKind::kWaypointArrival: return "arrival";
    case EventKind::kMotionStart: return "motion";
    case EventKind::kPeriodicUpdate: return "periodic";
    case EventKind::kAppSend: return "app-send";
    case EventKind::kLinkWatch: return "link-watch";
  }
  return "unknown";
}

struct EventHandle {
  std::uint64_t seq = 0;
  bool valid() const { return seq != 0; }
};

/// Single-threaded discrete-event scheduler. Events are dispatched in
/// (fire_at, seq) order where seq is the insertion counter.
class Scheduler {
 public:
  using Action = std::function<void()>;

  EventHandle schedule(SimTime fire_at, EventKind kind, NodeId target, Action action) {
    if (!(fire_at >= now_)) {
      throw SchedulerMisuse("event scheduled at t=" + std::to_string(fire_at) +
                            " before current time t=" + std::to_string(now_));
    }
    const std::uint64_t seq = ++next_seq_;
    queue_.push(Key{fire_at, seq});
    pending_.emplace(seq, Pending{kind, target, std::move(action)});
    return EventHandle{seq};
  }

  EventHandle schedule_in(SimTime delay, EventKind kind, NodeId target, Action action) {
    return schedule(now_ + delay, kind, target, std::move(action));
  }

  /// Returns true iff the event was still pending.
  bool cancel(EventHandle handle) { return pending_.erase(handle.seq) > 0; }

  bool is_pending(EventHandle handle) const { return pending_.count(handle.seq) > 0; }

  /// Dispatches every pending event with fire_at <= t_end, then sets now to t_end.
  std::size_t run_until(SimTime t_end) {
    if (t_end < now_) {
      throw SchedulerMisuse("run_until target lies in the past");
    }
    std::size_t count = 0;
    while (!queue_.empty() && queue_.top().fire_at <= t_end) {
      const Key key = queue_.top();
      queue_.pop();
      auto it = pending_.find(key.seq);
      if (it == pending_.end()) continue;  // cancelled
      Pending event = std::move(it->second);
      pending_.erase(it);
      now_ = key.fire_at;
      ++count;
      ++dispatched_;
      if (log_ != nullptr) write_log_line(key, event);
      event.action();
      if (after_dispatch_) after_dispatch_();
    }
    now_ = t_end;
    return count;
  }

  SimTime now() const { return now_; }
  std::uint64_t dispatched() const { return dispatched_; }
  std::size_t pending_count() const { return pending_.size(); }

  /// Optional event log: `<time> <seq> <kind> <target>` per dispatched event.
  void set_event_log(std::ostream* out) { log_ = out; }

  /// Runs after every dispatched event; used by invariant checkers.
  void set_after_dispatch(std::function<void()> hook) { after_dispatch_ = std::move(hook); }

 private:
  struct Key {
    SimTime fire_at;
    std::uint64_t seq;
    bool operator>(const Key& o) const {
      return fire_at != o.fire_at ? fire_at > o.fire_at : seq > o.seq;
    }
  };
  struct Pending {
    EventKind kind;
    NodeId target;
    Action action;
  };

  void write_log_line(const Key& key, const Pending& event) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", key.fire_at);
    *log_ << buf << ' ' << key.seq << ' ' << to_string(event.kind) << ' ';
    if (event.target == kGlobal) {
      *log_ << "global";
    } else {
      *log_ << event.target;
    }
    *log_ << '\n';
  }

  SimTime now_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t dispatched_ = 0;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> queue_;
  std::unordered_map<std::uint64_t, Pending> pending_;
  std::ostream* log_ = nullptr;
  std::function<void()> after_dispatch_;
};

/// Portable random stream: std::mt19937_64 (output sequence fixed by the
/// C++ standard) with distributions implemented here, since the standard
/// library distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi]; returns lo when the interval is degenerate.
  double uniform(double lo, double hi) {
    if (!(hi > lo)) return lo;
    return lo + (hi - lo) * uniform01();
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vanetsim
