#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vanetsim/engine.hpp"

namespace vanetsim {

struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

inline double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct FieldConfig {
  double width = 3000.0;
  double height = 1600.0;

  bool contains(const Position& p) const {
    return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height;
  }
};

enum class MobilityMode { kStationary, kScripted, kRandomWaypoint };

inline const char* to_string(MobilityMode mode) {
  switch (mode) {
    case MobilityMode::kStationary: return "stationary";
    case MobilityMode::kScripted: return "scripted";
    case MobilityMode::kRandomWaypoint: return "random-waypoint";
  }
  return "unknown";
}

/// Snapshot of a node's current leg.
struct MobilityState {
  NodeId node = 0;
  Position origin;
  SimTime origin_time = 0.0;
  Position destination;
  double speed = 0.0;
  MobilityMode mode = MobilityMode::kStationary;
};

/// One straight-line leg. A leg with speed 0 is a stop.
struct Leg {
  SimTime start = 0.0;
  Position origin;
  Position destination;
  double speed = 0.0;

  double length() const { return distance(origin, destination); }
  SimTime arrival() const { return speed > 0.0 ? start + length() / speed : start; }

  Position at(SimTime t) const {
    if (speed <= 0.0 || t <= start) return origin;
    const double len = length();
    const double travelled = speed * (t - start);
    if (travelled >= len) return destination;
    const double f = travelled / len;
    return {origin.x + f * (destination.x - origin.x), origin.y + f * (destination.y - origin.y)};
  }

  /// Velocity while the leg is in progress.
  Position velocity() const {
    const double len = length();
    if (speed <= 0.0 || len == 0.0) return {0.0, 0.0};
    return {speed * (destination.x - origin.x) / len, speed * (destination.y - origin.y) / len};
  }
};

struct RandomWaypointParams {
  double v_min = 0.0;
  double v_max = 84.0;
  double pause = 0.0;
};

/// Piecewise-linear node motion over a rectangular field.
class MobilityModel {
 public:
  using MotionListener = std::function<void(const MobilityState&, SimTime)>;

  MobilityModel(FieldConfig field, Scheduler& scheduler) : field_(field), scheduler_(scheduler) {
    if (!(field.width > 0.0) || !(field.height > 0.0)) {
      throw std::invalid_argument("field dimensions must be positive");
    }
  }

  const FieldConfig& field() const { return field_; }
  std::size_t size() const { return nodes_.size(); }

  /// Adds the next node; ids are dense and assigned in order.
  NodeId add_node(Position at, MobilityMode mode = MobilityMode::kStationary) {
    if (!field_.contains(at)) {
      throw std::out_of_range("placement outside field for node " + std::to_string(nodes_.size()));
    }
    NodeRecord rec;
    rec.mode = mode;
    rec.legs.push_back(Leg{0.0, at, at, 0.0});
    nodes_.push_back(std::move(rec));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  void set_random_waypoint_params(RandomWaypointParams params) { rwp_ = params; }

  /// Invoked whenever a leg begins (and never for the initial placement).
  void set_motion_listener(MotionListener listener) { listener_ = std::move(listener); }

  Position position_at(NodeId node, SimTime t) const { return leg_at(node, t).at(t); }

  MobilityState state_at(NodeId node, SimTime t) const {
    const Leg& leg = leg_at(node, t);
    const auto& rec = record(node);
    MobilityState s;
    s.node = node;
    s.mode = rec.mode;
    if (leg.speed > 0.0 && t < leg.arrival()) {
      s.origin = leg.origin;
      s.origin_time = leg.start;
      s.destination = leg.destination;
      s.speed = leg.speed;
    } else {
      const Position p = leg.at(t);
      s.origin = p;
      s.destination = p;
      s.origin_time = std::max(leg.start, leg.arrival());
      s.speed = 0.0;
    }
    return s;
  }

  const std::vector<Leg>& legs(NodeId node) const { return record(node).legs; }

  /// Installs a scripted leg starting at start_t from wherever the node is
  /// then. Returns the arrival time.
  SimTime set_motion(NodeId node, Position destination, double speed, SimTime start_t) {
    auto& rec = record(node);
    if (!(speed > 0.0)) {
      throw std::invalid_argument("motion speed must be positive for node " + std::to_string(node));
    }
    if (!field_.contains(destination)) {
      throw std::out_of_range("motion destination outside field for node " + std::to_string(node));
    }
    if (rec.mode == MobilityMode::kStationary) rec.mode = MobilityMode::kScripted;
    return install_leg(node, destination, speed, start_t);
  }

  /// Draws the next random-waypoint leg starting at the current time (plus
  /// pause) and installs it.
  MobilityState random_waypoint_next(NodeId node, Rng& rng) {
    auto& rec = record(node);
    if (rec.mode != MobilityMode::kRandomWaypoint) {
      throw std::logic_error("node " + std::to_string(node) + " is not in random-waypoint mode");
    }
    const Position dest{rng.uniform(0.0, field_.width), rng.uniform(0.0, field_.height)};
    const double speed = rng.uniform(rwp_.v_min, rwp_.v_max);
    const SimTime start = scheduler_.now() + rwp_.pause;
    if (speed > 0.0) {
      rec.rng = &rng;
      install_leg(node, dest, speed, start);
    }
    // A zero speed draw parks the node for the rest of the run.
    return state_at(node, start);
  }

 private:
  struct Scheduled {
    SimTime at;
    EventHandle handle;
  };
  struct NodeRecord {
    MobilityMode mode = MobilityMode::kStationary;
    std::vector<Leg> legs;
    std::vector<Scheduled> arrivals;
    std::vector<Scheduled> starts;
    Rng* rng = nullptr;
  };

  NodeRecord& record(NodeId node) {
    if (node >= nodes_.size()) throw std::out_of_range("unknown node id " + std::to_string(node));
    return nodes_[node];
  }
  const NodeRecord& record(NodeId node) const {
    if (node >= nodes_.size()) throw std::out_of_range("unknown node id " + std::to_string(node));
    return nodes_[node];
  }

  const Leg& leg_at(NodeId node, SimTime t) const {
    const auto& legs = record(node).legs;
    auto it = std::upper_bound(legs.begin(), legs.end(), t,
                               [](SimTime v, const Leg& leg) { return v < leg.start; });
    if (it == legs.begin()) return legs.front();
    return *std::prev(it);
  }

  SimTime install_leg(NodeId node, Position destination, double speed, SimTime start_t) {
    if (start_t < scheduler_.now()) {
      throw SchedulerMisuse("motion start lies in the past");
    }
    auto& rec = nodes_[node];
    const Position origin = position_at(node, start_t);
    // Later legs are superseded.
    while (rec.legs.size() > 1 && rec.legs.back().start >= start_t) rec.legs.pop_back();
    cancel_after(rec.arrivals, start_t, false);
    cancel_after(rec.starts, start_t, true);

    Leg leg{start_t, origin, destination, speed};
    if (rec.legs.size() == 1 && rec.legs.front().start >= start_t) {
      rec.legs.front() = leg;
    } else {
      rec.legs.push_back(leg);
    }
    const SimTime arrival = leg.arrival();

    auto start_handle = scheduler_.schedule(start_t, EventKind::kMotionStart, node, [this, node] {
      if (listener_) listener_(state_at(node, scheduler_.now()), scheduler_.now());
    });
    rec.starts.push_back({start_t, start_handle});
    auto arrival_handle = scheduler_.schedule(arrival, EventKind::kWaypointArrival, node, [this, node] {
      auto& r = nodes_[node];
      if (r.mode == MobilityMode::kRandomWaypoint && r.rng != nullptr) {
        random_waypoint_next(node, *r.rng);
      }
    });
    rec.arrivals.push_back({arrival, arrival_handle});
    return arrival;
  }

  void cancel_after(std::vector<Scheduled>& list, SimTime t, bool inclusive) {
    std::erase_if(list, [&](const Scheduled& s) {
      const bool later = inclusive ? s.at >= t : s.at > t;
      if (later) scheduler_.cancel(s.handle);
      return later || !scheduler_.is_pending(s.handle);
    });
  }

  FieldConfig field_;
  Scheduler& scheduler_;
  RandomWaypointParams rwp_;
  std::vector<NodeRecord> nodes_;
  MotionListener listener_;
};

}  // namespace vanetsim
