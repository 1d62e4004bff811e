#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "vanetsim/engine.hpp"
#include "vanetsim/mobility.hpp"
#include "vanetsim/packets.hpp"
#include "vanetsim/routing.hpp"
#include "vanetsim/scenario_config.hpp"

namespace vanetsim::testing {

inline constexpr double kTopologyRange = 250.0;

/// Hop distances from src over the unit-disk graph; -1 when unreachable.
inline std::vector<int> bfs_hops(const std::vector<Position>& nodes, double range, std::size_t src) {
  std::vector<int> dist(nodes.size(), -1);
  std::deque<std::size_t> queue{src};
  dist[src] = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v = 0; v < nodes.size(); ++v) {
      if (dist[v] >= 0) continue;
      const double dx = nodes[u].x - nodes[v].x;
      const double dy = nodes[u].y - nodes[v].y;
      if (dx * dx + dy * dy <= range * range) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

inline int diameter(const std::vector<Position>& nodes, double range) {
  int d = 0;
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    for (int h : bfs_hops(nodes, range, s)) d = std::max(d, h);
  }
  return d;
}

/// A connected random static topology with 2..max_nodes nodes. Nodes are
/// grown one at a time near an existing node so multi-hop shapes dominate.
inline std::vector<Position> random_topology(Rng& rng, std::size_t max_nodes, double field = 1500.0) {
  const auto n = static_cast<std::size_t>(2 + rng.next_u64() % (max_nodes - 1));
  for (;;) {
    std::vector<Position> nodes{{rng.uniform(0.0, field), rng.uniform(0.0, field)}};
    while (nodes.size() < n) {
      const Position& anchor = nodes[rng.next_u64() % nodes.size()];
      const Position p{anchor.x + rng.uniform(-kTopologyRange, kTopologyRange),
                       anchor.y + rng.uniform(-kTopologyRange, kTopologyRange)};
      if (p.x < 0.0 || p.y < 0.0 || p.x > field || p.y > field) continue;
      nodes.push_back(p);
    }
    const auto reach = bfs_hops(nodes, kTopologyRange, 0);
    if (std::none_of(reach.begin(), reach.end(), [](int h) { return h < 0; })) return nodes;
  }
}

inline ScenarioConfig static_config(const std::vector<Position>& nodes, Protocol protocol, double field = 1500.0) {
  ScenarioConfig c;
  c.name = "static";
  c.protocol = protocol;
  c.field = {field, field};
  c.radio.range = kTopologyRange;
  for (std::size_t i = 0; i < nodes.size(); ++i) c.placements.push_back({static_cast<NodeId>(i), nodes[i]});
  return c;
}

struct SentFrame {
  SimTime t;
  NodeId from;
  NodeId to;
  std::uint32_t size;
  Payload payload;
};

/// Routing services without a radio: frames are recorded, not delivered.
class FakeServices : public RoutingServices {
 public:
  Scheduler& scheduler() override { return sched; }
  Rng& rng() override { return random; }
  void send_frame(NodeId from, NodeId to, std::uint32_t size, Payload payload) override {
    sent.push_back({sched.now(), from, to, size, std::move(payload)});
  }
  void deliver_local(NodeId, DataSegment segment) override { delivered.push_back(std::move(segment)); }
  void drop_data(NodeId, const DataSegment& segment, DropReason reason) override { dropped.push_back({segment, reason}); }
  void drop_control(NodeId, TrafficClass cls, DropReason reason) override { control_drops.push_back({cls, reason}); }
  bool in_range(NodeId a, NodeId b) const override { return !cut.count({std::min(a, b), std::max(a, b)}); }
  std::optional<SimTime> link_break_time(NodeId, NodeId, SimTime) const override { return std::nullopt; }
  void table_changed(NodeId node, NodeId dest) override { changes.emplace_back(node, dest); }

  template <typename T>
  std::vector<SentFrame> sent_of() const {
    std::vector<SentFrame> out;
    for (const auto& f : sent) {
      if (std::holds_alternative<T>(f.payload)) out.push_back(f);
    }
    return out;
  }

  Scheduler sched;
  Rng random{7};
  std::vector<SentFrame> sent;
  std::vector<DataSegment> delivered;
  std::vector<std::pair<DataSegment, DropReason>> dropped;
  std::vector<std::pair<TrafficClass, DropReason>> control_drops;
  std::vector<std::pair<NodeId, NodeId>> changes;
  std::set<std::pair<NodeId, NodeId>> cut;
};

inline DataSegment data_segment(NodeId origin, NodeId dst, std::int64_t seq = 0) {
  DataSegment s;
  s.flow = 0;
  s.seq = seq;
  s.size = 512;
  s.origin = origin;
  s.final_dst = dst;
  s.trail = {origin};
  return s;
}

}  // namespace vanetsim::testing
