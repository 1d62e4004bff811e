#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vanetsim/engine.hpp"
#include "vanetsim/mobility.hpp"

namespace vanetsim {

struct RadioConfig {
  double range = 250.0;           // meters
  double bandwidth = 10'000'000;  // bits per second
  double per_hop_overhead = 20e-6;
};

template <typename Payload>
struct Frame {
  NodeId src = 0;
  NodeId dst = kBroadcast;
  std::uint32_t size = 0;  // bytes
  Payload payload{};
  SimTime sent_at = 0.0;

  bool is_broadcast() const { return dst == kBroadcast; }
};

enum class LossReason { kOutOfRange, kNoNeighbors };

/// Earliest t >= from_t at which the separation of two piecewise-linear
/// trajectories first exceeds range; nullopt if it never does.
inline std::optional<SimTime> separation_exceeds(const std::vector<Leg>& a, const std::vector<Leg>& b,
                                                 double range, SimTime from_t) {
  std::vector<SimTime> cuts{from_t};
  for (const auto* legs : {&a, &b}) {
    for (const Leg& leg : *legs) {
      if (leg.start > from_t) cuts.push_back(leg.start);
      if (leg.arrival() > from_t) cuts.push_back(leg.arrival());
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto leg_at = [](const std::vector<Leg>& legs, SimTime t) -> const Leg& {
    auto it = std::upper_bound(legs.begin(), legs.end(), t,
                               [](SimTime v, const Leg& leg) { return v < leg.start; });
    return it == legs.begin() ? legs.front() : *std::prev(it);
  };
  auto moving = [](const Leg& leg, SimTime t) { return leg.speed > 0.0 && t >= leg.start && t < leg.arrival(); };

  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const SimTime t0 = cuts[i];
    const SimTime t1 = i + 1 < cuts.size() ? cuts[i + 1] : std::numeric_limits<double>::infinity();
    const Leg& la = leg_at(a, t0);
    const Leg& lb = leg_at(b, t0);
    const Position pa = la.at(t0);
    const Position pb = lb.at(t0);
    const Position va = moving(la, t0) ? la.velocity() : Position{};
    const Position vb = moving(lb, t0) ? lb.velocity() : Position{};
    const double px = pb.x - pa.x, py = pb.y - pa.y;
    const double vx = vb.x - va.x, vy = vb.y - va.y;
    const double c = px * px + py * py - range * range;
    if (c > 0.0) return t0;
    const double qa = vx * vx + vy * vy;
    if (qa == 0.0) continue;
    const double qb = 2.0 * (px * vx + py * vy);
    const double disc = qb * qb - 4.0 * qa * c;
    // c <= 0 guarantees a non-negative discriminant; the exit root is the larger one.
    const double s = (-qb + std::sqrt(std::max(0.0, disc))) / (2.0 * qa);
    if (t0 + s < t1) return t0 + s;
  }
  return std::nullopt;
}

/// Unit-disk broadcast channel with per-node FIFO transmit serialization.
/// Reachability is decided once, when a frame starts transmission.
template <typename Payload>
class RadioMedium {
 public:
  using FrameT = Frame<Payload>;
  using Receiver = std::function<void(NodeId receiver, const FrameT&)>;
  using FailureHandler = std::function<void(const FrameT&)>;

  struct Tap {
    std::function<void(NodeId receiver, const FrameT&, SimTime at)> delivered;
    std::function<void(const FrameT&, SimTime at, LossReason)> lost;
  };

  RadioMedium(RadioConfig config, MobilityModel& mobility, Scheduler& scheduler)
      : config_(config), mobility_(mobility), scheduler_(scheduler) {
    if (!(config.range > 0.0)) throw std::invalid_argument("radio range must be positive");
    if (!(config.bandwidth > 0.0)) throw std::invalid_argument("radio bandwidth must be positive");
    if (config.per_hop_overhead < 0.0) throw std::invalid_argument("per-hop overhead must be non-negative");
  }

  const RadioConfig& config() const { return config_; }

  void set_receiver(Receiver receiver) { receiver_ = std::move(receiver); }
  void set_unicast_failure_handler(FailureHandler handler) { failure_ = std::move(handler); }
  void set_promiscuous_tap(Tap tap) { tap_ = std::move(tap); }

  SimTime transmission_delay(std::uint32_t size) const { return size * 8.0 / config_.bandwidth; }
  SimTime hop_delay(std::uint32_t size) const { return transmission_delay(size) + config_.per_hop_overhead; }

  /// Queues the frame behind the sender's earlier frames.
  void transmit(FrameT frame) {
    if (frame.src >= mobility_.size()) throw std::out_of_range("unknown sender " + std::to_string(frame.src));
    if (frame.size == 0) throw std::invalid_argument("frame size must be positive");
    if (busy_until_.size() < mobility_.size()) busy_until_.resize(mobility_.size(), 0.0);
    const SimTime start = std::max(scheduler_.now(), busy_until_[frame.src]);
    busy_until_[frame.src] = start + transmission_delay(frame.size);
    scheduler_.schedule(start, EventKind::kTxStart, frame.src,
                        [this, f = std::move(frame)]() mutable { start_transmission(std::move(f)); });
  }

  bool in_range(NodeId a, NodeId b, SimTime t) const {
    return distance(mobility_.position_at(a, t), mobility_.position_at(b, t)) <= config_.range;
  }

  std::vector<NodeId> neighbors(NodeId node, SimTime t) const {
    std::vector<NodeId> out;
    const Position p = mobility_.position_at(node, t);
    for (NodeId other = 0; other < mobility_.size(); ++other) {
      if (other != node && distance(p, mobility_.position_at(other, t)) <= config_.range) out.push_back(other);
    }
    return out;
  }

  std::optional<SimTime> link_break_time(NodeId a, NodeId b, SimTime from_t) const {
    return separation_exceeds(mobility_.legs(a), mobility_.legs(b), config_.range, from_t);
  }

 private:
  void start_transmission(FrameT frame) {
    const SimTime now = scheduler_.now();
    frame.sent_at = now;
    const SimTime arrive = now + hop_delay(frame.size);
    if (frame.is_broadcast()) {
      const auto receivers = neighbors(frame.src, now);
      if (receivers.empty()) {
        if (tap_.lost) tap_.lost(frame, now, LossReason::kNoNeighbors);
        return;
      }
      for (NodeId r : receivers) deliver_later(r, frame, arrive);
      return;
    }
    if (frame.dst < mobility_.size() && frame.dst != frame.src && in_range(frame.src, frame.dst, now)) {
      deliver_later(frame.dst, std::move(frame), arrive);
      return;
    }
    if (tap_.lost) tap_.lost(frame, now, LossReason::kOutOfRange);
    if (failure_) failure_(frame);
  }

  void deliver_later(NodeId receiver, FrameT frame, SimTime at) {
    scheduler_.schedule(at, EventKind::kFrameDelivery, receiver, [this, receiver, f = std::move(frame)] {
      if (tap_.delivered) tap_.delivered(receiver, f, scheduler_.now());
      if (receiver_) receiver_(receiver, f);
    });
  }

  RadioConfig config_;
  MobilityModel& mobility_;
  Scheduler& scheduler_;
  Receiver receiver_;
  FailureHandler failure_;
  Tap tap_;
  std::vector<SimTime> busy_until_;
};

}  // namespace vanetsim
