#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "vanetsim/aodv.hpp"
#include "vanetsim/dsdv.hpp"
#include "vanetsim/mobility.hpp"
#include "vanetsim/radio.hpp"
#include "vanetsim/transport.hpp"

namespace vanetsim {

enum class Protocol { kAodv, kDsdv };

inline const char* to_string(Protocol p) { return p == Protocol::kAodv ? "aodv" : "dsdv"; }

inline Protocol parse_protocol(const std::string& s) {
  if (s == "aodv" || s == "AODV") return Protocol::kAodv;
  if (s == "dsdv" || s == "DSDV") return Protocol::kDsdv;
  throw std::invalid_argument("unknown protocol '" + s + "' (expected aodv or dsdv)");
}

/// Validation failure; `path()` names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct Placement {
  NodeId node = 0;
  Position position;
  friend bool operator==(const Placement&, const Placement&) = default;
};

struct ScriptedMotion {
  NodeId node = 0;
  Position destination;
  double speed = 0.0;
  SimTime start_t = 0.0;
  friend bool operator==(const ScriptedMotion&, const ScriptedMotion&) = default;
};

struct BackgroundMobility {
  MobilityMode mode = MobilityMode::kStationary;  // kStationary or kRandomWaypoint
  RandomWaypointParams params;
};

struct ScenarioConfig {
  std::string name = "custom";
  Protocol protocol = Protocol::kAodv;
  double duration = 600.0;
  std::uint64_t seed = 1;
  double metric_window = 1.0;
  FieldConfig field;
  RadioConfig radio;
  std::vector<Placement> placements;
  std::vector<ScriptedMotion> motions;
  BackgroundMobility background;
  std::vector<FlowConfig> flows;
  AodvConfig aodv;
  DsdvConfig dsdv;
  TcpConfig tcp;

  std::size_t node_count() const { return placements.size(); }

  bool is_scripted(NodeId node) const {
    for (const auto& m : motions) {
      if (m.node == node) return true;
    }
    return false;
  }

  void validate() const {
    if (!(duration > 0.0)) throw ConfigError("duration", "must be positive");
    if (!(metric_window > 0.0)) throw ConfigError("metric_window", "must be positive");
    if (!(field.width > 0.0) || !(field.height > 0.0)) throw ConfigError("field", "width and height must be positive");
    if (!(radio.range > 0.0)) throw ConfigError("radio.range", "must be positive");
    if (!(radio.bandwidth > 0.0)) throw ConfigError("radio.bandwidth", "must be positive");
    if (radio.per_hop_overhead < 0.0) throw ConfigError("radio.per_hop_overhead", "must be non-negative");
    if (placements.empty()) throw ConfigError("nodes", "at least one node is required");
    std::set<NodeId> ids;
    for (std::size_t i = 0; i < placements.size(); ++i) {
      const auto& p = placements[i];
      const std::string path = "nodes[" + std::to_string(i) + "]";
      if (!ids.insert(p.node).second) throw ConfigError(path, "duplicate node id " + std::to_string(p.node));
      if (!field.contains(p.position)) throw ConfigError(path, "placement outside the field");
    }
    if (*ids.rbegin() != placements.size() - 1) {
      throw ConfigError("nodes", "node ids must be 0..N-1");
    }
    for (std::size_t i = 0; i < motions.size(); ++i) {
      const auto& m = motions[i];
      const std::string path = "motions[" + std::to_string(i) + "]";
      if (!ids.count(m.node)) throw ConfigError(path, "unknown node " + std::to_string(m.node));
      if (!(m.speed > 0.0)) throw ConfigError(path, "speed must be positive");
      if (!field.contains(m.destination)) throw ConfigError(path, "destination outside the field");
      if (m.start_t < 0.0) throw ConfigError(path, "start must be non-negative");
    }
    if (background.mode == MobilityMode::kRandomWaypoint) {
      const auto& p = background.params;
      if (p.v_min < 0.0 || p.v_max < p.v_min) throw ConfigError("background_mobility", "need 0 <= v_min <= v_max");
      if (p.pause < 0.0) throw ConfigError("background_mobility.pause", "must be non-negative");
    }
    for (std::size_t i = 0; i < flows.size(); ++i) {
      const auto& f = flows[i];
      const std::string path = "flows[" + std::to_string(i) + "]";
      if (!ids.count(f.src)) throw ConfigError(path, "unknown source node " + std::to_string(f.src));
      if (!ids.count(f.sink)) throw ConfigError(path, "unknown sink node " + std::to_string(f.sink));
      try {
        f.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
      }
    }
    if (aodv.max_retries < 1) throw ConfigError("aodv.max_retries", "must be at least 1");
    if (aodv.initial_ttl < 1) throw ConfigError("aodv.initial_ttl", "must be at least 1");
    if (!(dsdv.periodic_interval > 0.0)) throw ConfigError("dsdv.periodic_interval", "must be positive");
    if (!(tcp.min_rto > 0.0) || tcp.max_rto < tcp.min_rto) throw ConfigError("tcp", "need 0 < min_rto <= max_rto");
  }
};

}  // namespace vanetsim
