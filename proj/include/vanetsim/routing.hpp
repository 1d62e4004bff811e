#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "vanetsim/engine.hpp"
#include "vanetsim/packets.hpp"

namespace vanetsim {

enum class DropReason { kNoRoute, kLinkBroken, kUnreachable, kBufferOverflow, kTtlExpired, kNoReverseRoute };

inline const char* to_string(DropReason r) {
  switch (r) {
    case DropReason::kNoRoute: return "no-route";
    case DropReason::kLinkBroken: return "link-broken";
    case DropReason::kUnreachable: return "unreachable";
    case DropReason::kBufferOverflow: return "buffer-overflow";
    case DropReason::kTtlExpired: return "ttl-expired";
    case DropReason::kNoReverseRoute: return "no-reverse-route";
  }
  return "unknown";
}

/// What a routing agent needs from the node stack around it.
class RoutingServices {
 public:
  virtual ~RoutingServices() = default;

  virtual Scheduler& scheduler() = 0;
  virtual Rng& rng() = 0;
  /// Hands a frame to the radio; `to` may be kBroadcast.
  virtual void send_frame(NodeId from, NodeId to, std::uint32_t size, Payload payload) = 0;
  /// A data segment reached its final destination.
  virtual void deliver_local(NodeId node, DataSegment segment) = 0;
  virtual void drop_data(NodeId node, const DataSegment& segment, DropReason reason) = 0;
  virtual void drop_control(NodeId /*node*/, TrafficClass /*cls*/, DropReason /*reason*/) {}
  virtual bool in_range(NodeId a, NodeId b) const = 0;
  virtual std::optional<SimTime> link_break_time(NodeId a, NodeId b, SimTime from_t) const = 0;
  /// Called after every mutation of a routing table entry.
  virtual void table_changed(NodeId /*node*/, NodeId /*dest*/) {}
  /// A source learned a route (used for the paths log).
  virtual void route_discovered(NodeId /*node*/, NodeId /*dest*/, NodeId /*next_hop*/, std::uint32_t /*hops*/) {}
};

/// Common per-node routing behavior: data forwarding entry points and
/// geometric watching of next hops.
class RoutingAgent {
 public:
  RoutingAgent(NodeId self, RoutingServices& services) : self_(self), services_(services) {}
  virtual ~RoutingAgent() = default;
  RoutingAgent(const RoutingAgent&) = delete;
  RoutingAgent& operator=(const RoutingAgent&) = delete;

  NodeId id() const { return self_; }

  virtual const char* protocol() const = 0;
  virtual void start() {}

  /// Routes a data segment that is at this node (locally originated or relayed).
  virtual void send_data(DataSegment segment) = 0;

  virtual std::optional<NodeId> route_lookup(NodeId dest, SimTime t) const = 0;

  /// Any frame delivered to this node by the radio.
  void receive(const NetFrame& frame) {
    if (const auto* seg = std::get_if<DataSegment>(&frame.payload)) {
      DataSegment copy = *seg;
      copy.trail.push_back(self_);
      if (copy.final_dst == self_) {
        services_.deliver_local(self_, std::move(copy));
        return;
      }
      if (--copy.ttl <= 0) {
        services_.drop_data(self_, copy, DropReason::kTtlExpired);
        return;
      }
      note_forwarding(copy, frame.src);
      send_data(std::move(copy));
      return;
    }
    handle_control(frame);
  }

  /// Link-layer feedback: a unicast from this node could not reach its target.
  virtual void link_failed(const NetFrame& frame) = 0;

 protected:
  virtual void handle_control(const NetFrame& frame) = 0;
  virtual void note_forwarding(const DataSegment& /*segment*/, NodeId /*prev_hop*/) {}
  /// True while some usable route points at the neighbor.
  virtual bool uses_next_hop(NodeId neighbor) const = 0;
  /// The neighbor left radio range while routes used it.
  virtual void neighbor_lost(NodeId neighbor) = 0;

  Scheduler& scheduler() { return services_.scheduler(); }
  SimTime now() const { return services_.scheduler().now(); }

  /// Schedules a check at the instant the neighbor is predicted to leave range.
  void watch_neighbor(NodeId neighbor) {
    if (neighbor == self_) return;
    auto it = watches_.find(neighbor);
    if (it != watches_.end() && services_.scheduler().is_pending(it->second)) return;
    const auto brk = services_.link_break_time(self_, neighbor, now());
    if (!brk) {
      watches_.erase(neighbor);
      return;
    }
    // Fire just past the boundary so the closed-disk test sees the break.
    const SimTime at = *brk + 1e-9;
    watches_[neighbor] = services_.scheduler().schedule(at, EventKind::kLinkWatch, self_, [this, neighbor] {
      watches_.erase(neighbor);
      if (!uses_next_hop(neighbor)) return;
      if (!services_.in_range(self_, neighbor)) {
        neighbor_lost(neighbor);
      } else {
        watch_neighbor(neighbor);
      }
    });
  }

  NodeId self_;
  RoutingServices& services_;

 private:
  std::map<NodeId, EventHandle> watches_;
};

}  // namespace vanetsim
