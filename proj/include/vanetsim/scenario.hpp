#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vanetsim/metrics.hpp"
#include "vanetsim/scenario_config.hpp"
#include "vanetsim/simulation.hpp"

namespace vanetsim {

/// Output or input file could not be handled.
class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Builtin grid

namespace grid {

inline constexpr int kColumns = 15;
inline constexpr NodeId kNodes = 100;

/// Column x coordinate. Columns 2..5 are the sampled ones; the rest keep
/// the ~200 m spacing.
inline double column_x(int c) {
  static const double kFirst[] = {140.0, 335.0, 550.0, 755.0, 960.0, 1150.0};
  if (c < 6) return kFirst[c];
  return 1350.0 + 200.0 * (c - 6);
}

/// (first y, step) for a column. Sampled columns cycle through four
/// patterns; column 0 uses a 150 m step.
inline std::pair<double, double> column_rows(int c) {
  if (c == 0) return {320.0, 150.0};
  if (c == 1) return {320.0, 120.0};
  switch (c % 4) {
    case 2: return {290.0, 140.0};
    case 3: return {360.0, 160.0};
    case 0: return {320.0, 170.0};
    default: return {320.0, 120.0};
  }
}

inline Position position(NodeId id) {
  if (id >= kNodes) throw std::out_of_range("grid node " + std::to_string(id));
  const int c = static_cast<int>(id % kColumns);
  const int r = static_cast<int>(id / kColumns);
  const auto [y0, step] = column_rows(c);
  return {column_x(c), y0 + step * r};
}

inline std::vector<Placement> placements() {
  std::vector<Placement> out;
  for (NodeId id = 0; id < kNodes; ++id) out.push_back({id, position(id)});
  return out;
}

}  // namespace grid

// ---------------------------------------------------------------------------
// Builtin scenarios

inline constexpr double kLongDistanceLeg = 2648.0;
inline constexpr double kLongDistanceSpeed = 12.97;
inline constexpr double kShortDistanceSpeed = 12.66;

/// Node 15's destination: 2648 m away, ending in the uncovered strip along
/// the bottom edge.
inline Position long_distance_destination() {
  const Position from = grid::position(15);
  const double dy = from.y - 20.0;
  return {from.x + std::sqrt(kLongDistanceLeg * kLongDistanceLeg - dy * dy), 20.0};
}

/// Where node 1's first leg ends: the bottom edge, on the ray pointing away
/// from node 15's start.
inline Position short_distance_turn_point() {
  const Position a = grid::position(15);
  const Position b = grid::position(1);
  const double ux = b.x - a.x;
  const double uy = b.y - a.y;
  const double s = -b.y / uy;
  return {b.x + ux * s, 0.0};
}

inline constexpr Position kShortDistanceRest{1150.0, 75.0};
inline constexpr double kShortDistanceArrival = 149.0;

inline std::vector<FlowConfig> builtin_flows() {
  auto flow = [](NodeId src, NodeId sink, double start) {
    FlowConfig f;
    f.src = src;
    f.sink = sink;
    f.start_t = start;
    f.send_interval = 0.25;
    return f;
  };
  return {flow(0, 15, 1.1), flow(1, 25, 48.0), flow(2, 80, 3.0), flow(47, 94, 4.0), flow(33, 65, 5.0)};
}

inline std::vector<std::string> builtin_names() { return {"long-distance", "short-distance"}; }

inline ScenarioConfig builtin_scenario(const std::string& name, Protocol protocol) {
  ScenarioConfig c;
  c.name = name;
  c.protocol = protocol;
  c.duration = 600.0;
  c.seed = 20150101;
  c.placements = grid::placements();
  c.flows = builtin_flows();
  if (name == "long-distance") {
    c.motions.push_back({0, grid::position(15), 75.0, 10.0});
    c.motions.push_back({15, long_distance_destination(), kLongDistanceSpeed, 10.0});
  } else if (name == "short-distance") {
    const Position turn = short_distance_turn_point();
    c.motions.push_back({1, turn, kShortDistanceSpeed, 10.0});
    const double back = distance(turn, kShortDistanceRest) / kShortDistanceSpeed;
    c.motions.push_back({1, kShortDistanceRest, kShortDistanceSpeed, kShortDistanceArrival - back});
  } else {
    throw std::invalid_argument("unknown builtin scenario '" + name + "' (expected long-distance or short-distance)");
  }
  c.validate();
  return c;
}

inline bool is_builtin(const std::string& name) {
  for (const auto& n : builtin_names()) {
    if (n == name) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Scenario documents (JSON)

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
  }
}

inline const json& object_at(const json& parent, const char* key, const std::string& path) {
  const json& v = parent.at(key);
  if (!v.is_object()) throw ConfigError(path, "expected an object");
  return v;
}

template <typename T>
void read(const json& obj, const char* key, const std::string& path, T& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  const std::string p = path.empty() ? key : path + "." + key;
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(p, "expected a string");
    out = v.get<std::string>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError(p, "expected a number");
    out = v.get<T>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(p, "expected an integer");
    if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
      throw ConfigError(p, "expected a non-negative integer");
    }
    out = v.get<T>();
  }
}

template <typename T>
void require(const json& obj, const char* key, const std::string& path, T& out) {
  if (!obj.contains(key)) throw ConfigError(path + "." + key, "missing required key");
  read(obj, key, path, out);
}

inline Position read_xy(const json& obj, const std::string& path) {
  Position p;
  require(obj, "x", path, p.x);
  require(obj, "y", path, p.y);
  return p;
}

}  // namespace detail

/// Parses and validates a scenario document. Missing optional keys take
/// their defaults.
inline ScenarioConfig load_config(const std::string& text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("document", std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("document", "expected an object at top level");
  detail::reject_unknown(doc, "", {"name", "protocol", "duration", "seed", "metric_window", "field", "radio", "nodes",
                                   "motions", "background_mobility", "flows", "aodv", "dsdv", "tcp"});
  ScenarioConfig c;
  detail::read(doc, "name", "", c.name);
  if (doc.contains("protocol")) {
    std::string p;
    detail::read(doc, "protocol", "", p);
    try {
      c.protocol = parse_protocol(p);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("protocol", e.what());
    }
  }
  detail::read(doc, "duration", "", c.duration);
  detail::read(doc, "seed", "", c.seed);
  detail::read(doc, "metric_window", "", c.metric_window);
  if (doc.contains("field")) {
    const auto& f = detail::object_at(doc, "field", "field");
    detail::reject_unknown(f, "field", {"width", "height"});
    detail::read(f, "width", "field", c.field.width);
    detail::read(f, "height", "field", c.field.height);
  }
  if (doc.contains("radio")) {
    const auto& r = detail::object_at(doc, "radio", "radio");
    detail::reject_unknown(r, "radio", {"range", "bandwidth", "per_hop_overhead"});
    detail::read(r, "range", "radio", c.radio.range);
    detail::read(r, "bandwidth", "radio", c.radio.bandwidth);
    detail::read(r, "per_hop_overhead", "radio", c.radio.per_hop_overhead);
  }
  if (!doc.contains("nodes") || !doc.at("nodes").is_array()) throw ConfigError("nodes", "expected an array");
  for (std::size_t i = 0; i < doc.at("nodes").size(); ++i) {
    const std::string path = "nodes[" + std::to_string(i) + "]";
    const auto& n = doc.at("nodes")[i];
    if (!n.is_object()) throw ConfigError(path, "expected an object");
    detail::reject_unknown(n, path, {"id", "x", "y"});
    Placement p;
    p.node = static_cast<NodeId>(i);
    detail::read(n, "id", path, p.node);
    p.position = detail::read_xy(n, path);
    c.placements.push_back(p);
  }
  if (doc.contains("motions")) {
    if (!doc.at("motions").is_array()) throw ConfigError("motions", "expected an array");
    for (std::size_t i = 0; i < doc.at("motions").size(); ++i) {
      const std::string path = "motions[" + std::to_string(i) + "]";
      const auto& m = doc.at("motions")[i];
      if (!m.is_object()) throw ConfigError(path, "expected an object");
      detail::reject_unknown(m, path, {"node", "x", "y", "speed", "start"});
      ScriptedMotion sm;
      detail::require(m, "node", path, sm.node);
      sm.destination = detail::read_xy(m, path);
      detail::require(m, "speed", path, sm.speed);
      detail::read(m, "start", path, sm.start_t);
      c.motions.push_back(sm);
    }
  }
  if (doc.contains("background_mobility")) {
    const auto& b = detail::object_at(doc, "background_mobility", "background_mobility");
    detail::reject_unknown(b, "background_mobility", {"mode", "v_min", "v_max", "pause"});
    std::string mode = "stationary";
    detail::read(b, "mode", "background_mobility", mode);
    if (mode == "stationary") {
      c.background.mode = MobilityMode::kStationary;
    } else if (mode == "random-waypoint") {
      c.background.mode = MobilityMode::kRandomWaypoint;
    } else {
      throw ConfigError("background_mobility.mode", "expected stationary or random-waypoint");
    }
    detail::read(b, "v_min", "background_mobility", c.background.params.v_min);
    detail::read(b, "v_max", "background_mobility", c.background.params.v_max);
    detail::read(b, "pause", "background_mobility", c.background.params.pause);
  }
  if (doc.contains("flows")) {
    if (!doc.at("flows").is_array()) throw ConfigError("flows", "expected an array");
    for (std::size_t i = 0; i < doc.at("flows").size(); ++i) {
      const std::string path = "flows[" + std::to_string(i) + "]";
      const auto& f = doc.at("flows")[i];
      if (!f.is_object()) throw ConfigError(path, "expected an object");
      detail::reject_unknown(f, path, {"src", "sink", "start", "packet_size", "ack_size", "max_packets", "send_interval"});
      FlowConfig fc;
      detail::require(f, "src", path, fc.src);
      detail::require(f, "sink", path, fc.sink);
      detail::read(f, "start", path, fc.start_t);
      detail::read(f, "packet_size", path, fc.data_packet_size);
      detail::read(f, "ack_size", path, fc.ack_size);
      detail::read(f, "max_packets", path, fc.max_packets);
      detail::read(f, "send_interval", path, fc.send_interval);
      c.flows.push_back(fc);
    }
  }
  if (doc.contains("aodv")) {
    const auto& a = detail::object_at(doc, "aodv", "aodv");
    detail::reject_unknown(a, "aodv", {"initial_ttl", "node_traversal_time", "net_diameter", "active_route_timeout",
                                       "max_retries", "max_buffered", "rreq_size", "rrep_size", "rerr_header_size",
                                       "rerr_entry_size"});
    detail::read(a, "initial_ttl", "aodv", c.aodv.initial_ttl);
    detail::read(a, "node_traversal_time", "aodv", c.aodv.node_traversal_time);
    detail::read(a, "net_diameter", "aodv", c.aodv.net_diameter);
    detail::read(a, "active_route_timeout", "aodv", c.aodv.active_route_timeout);
    detail::read(a, "max_retries", "aodv", c.aodv.max_retries);
    detail::read(a, "max_buffered", "aodv", c.aodv.max_buffered);
    detail::read(a, "rreq_size", "aodv", c.aodv.rreq_size);
    detail::read(a, "rrep_size", "aodv", c.aodv.rrep_size);
    detail::read(a, "rerr_header_size", "aodv", c.aodv.rerr_header_size);
    detail::read(a, "rerr_entry_size", "aodv", c.aodv.rerr_entry_size);
  }
  if (doc.contains("dsdv")) {
    const auto& d = detail::object_at(doc, "dsdv", "dsdv");
    detail::reject_unknown(d, "dsdv", {"periodic_interval", "full_dump_interval", "settling_time",
                                       "full_dump_dirty_fraction", "triggered_min_gap", "start_jitter", "header_size",
                                       "row_size"});
    detail::read(d, "periodic_interval", "dsdv", c.dsdv.periodic_interval);
    detail::read(d, "full_dump_interval", "dsdv", c.dsdv.full_dump_interval);
    detail::read(d, "settling_time", "dsdv", c.dsdv.settling_time);
    detail::read(d, "full_dump_dirty_fraction", "dsdv", c.dsdv.full_dump_dirty_fraction);
    detail::read(d, "triggered_min_gap", "dsdv", c.dsdv.triggered_min_gap);
    detail::read(d, "start_jitter", "dsdv", c.dsdv.start_jitter);
    detail::read(d, "header_size", "dsdv", c.dsdv.header_size);
    detail::read(d, "row_size", "dsdv", c.dsdv.row_size);
  }
  if (doc.contains("tcp")) {
    const auto& t = detail::object_at(doc, "tcp", "tcp");
    detail::reject_unknown(t, "tcp", {"initial_ssthresh", "initial_rto", "min_rto", "max_rto"});
    detail::read(t, "initial_ssthresh", "tcp", c.tcp.initial_ssthresh);
    detail::read(t, "initial_rto", "tcp", c.tcp.initial_rto);
    detail::read(t, "min_rto", "tcp", c.tcp.min_rto);
    detail::read(t, "max_rto", "tcp", c.tcp.max_rto);
  }
  c.validate();
  return c;
}

/// Writes every field, defaults included.
inline std::string serialize(const ScenarioConfig& c) {
  using detail::json;
  json doc;
  doc["name"] = c.name;
  doc["protocol"] = to_string(c.protocol);
  doc["duration"] = c.duration;
  doc["seed"] = c.seed;
  doc["metric_window"] = c.metric_window;
  doc["field"] = {{"width", c.field.width}, {"height", c.field.height}};
  doc["radio"] = {{"range", c.radio.range}, {"bandwidth", c.radio.bandwidth}, {"per_hop_overhead", c.radio.per_hop_overhead}};
  doc["nodes"] = json::array();
  for (const auto& p : c.placements) doc["nodes"].push_back({{"id", p.node}, {"x", p.position.x}, {"y", p.position.y}});
  doc["motions"] = json::array();
  for (const auto& m : c.motions) {
    doc["motions"].push_back(
        {{"node", m.node}, {"x", m.destination.x}, {"y", m.destination.y}, {"speed", m.speed}, {"start", m.start_t}});
  }
  doc["background_mobility"] = {
      {"mode", c.background.mode == MobilityMode::kRandomWaypoint ? "random-waypoint" : "stationary"},
      {"v_min", c.background.params.v_min},
      {"v_max", c.background.params.v_max},
      {"pause", c.background.params.pause}};
  doc["flows"] = json::array();
  for (const auto& f : c.flows) {
    doc["flows"].push_back({{"src", f.src},
                            {"sink", f.sink},
                            {"start", f.start_t},
                            {"packet_size", f.data_packet_size},
                            {"ack_size", f.ack_size},
                            {"max_packets", f.max_packets},
                            {"send_interval", f.send_interval}});
  }
  doc["aodv"] = {{"initial_ttl", c.aodv.initial_ttl},
                 {"node_traversal_time", c.aodv.node_traversal_time},
                 {"net_diameter", c.aodv.net_diameter},
                 {"active_route_timeout", c.aodv.active_route_timeout},
                 {"max_retries", c.aodv.max_retries},
                 {"max_buffered", c.aodv.max_buffered},
                 {"rreq_size", c.aodv.rreq_size},
                 {"rrep_size", c.aodv.rrep_size},
                 {"rerr_header_size", c.aodv.rerr_header_size},
                 {"rerr_entry_size", c.aodv.rerr_entry_size}};
  doc["dsdv"] = {{"periodic_interval", c.dsdv.periodic_interval},
                 {"full_dump_interval", c.dsdv.full_dump_interval},
                 {"settling_time", c.dsdv.settling_time},
                 {"full_dump_dirty_fraction", c.dsdv.full_dump_dirty_fraction},
                 {"triggered_min_gap", c.dsdv.triggered_min_gap},
                 {"start_jitter", c.dsdv.start_jitter},
                 {"header_size", c.dsdv.header_size},
                 {"row_size", c.dsdv.row_size}};
  doc["tcp"] = {{"initial_ssthresh", c.tcp.initial_ssthresh},
                {"initial_rto", c.tcp.initial_rto},
                {"min_rto", c.tcp.min_rto},
                {"max_rto", c.tcp.max_rto}};
  return doc.dump(2) + "\n";
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A builtin name or a path to a scenario document.
inline ScenarioConfig resolve_scenario(const std::string& name_or_file, std::optional<Protocol> protocol) {
  if (is_builtin(name_or_file)) return builtin_scenario(name_or_file, protocol.value_or(Protocol::kAodv));
  ScenarioConfig c = load_config(read_file(name_or_file));
  if (protocol) c.protocol = *protocol;
  return c;
}

// ---------------------------------------------------------------------------
// Running

struct FlowReport {
  FlowSummary summary;
  std::string directory;  // relative to the output directory
  std::optional<SimTime> first_delivery;
  std::vector<NodeId> first_trail;
};

struct RunReport {
  std::string scenario;
  Protocol protocol = Protocol::kAodv;
  std::uint64_t seed = 0;
  double duration = 0.0;
  std::uint64_t events = 0;
  std::vector<FlowReport> flows;
  std::vector<std::string> paths;
  std::vector<std::string> manifest;
  InvariantCounters invariants;
};

inline const char* const kMetricNames[] = {"throughput", "jitter", "delay", "cwnd", "bandwidth"};

inline std::string flow_directory(int index, const FlowConfig& f) {
  return std::to_string(index) + "_" + std::to_string(f.src) + "-" + std::to_string(f.sink);
}

/// All five series of one flow; bandwidth is measured at the sink.
inline std::map<std::string, MetricSeries> flow_metrics(const Simulation& sim, int flow) {
  const auto& cfg = sim.config();
  const auto& fc = cfg.flows.at(static_cast<std::size_t>(flow));
  std::map<std::string, MetricSeries> out;
  out["throughput"] = throughput_series(sim.records(), flow, cfg.metric_window, cfg.duration);
  out["jitter"] = jitter_series(sim.records(), flow, cfg.metric_window, cfg.duration);
  out["delay"] = delay_series(sim.records(), flow);
  std::vector<std::pair<SimTime, double>> cw;
  for (const auto& s : sim.sender(flow).cwnd_series()) cw.emplace_back(s.t, s.cwnd);
  out["cwnd"] = cwnd_to_series(cw);
  out["bandwidth"] = destination_bandwidth_series(sim.records(), fc.sink, cfg.metric_window, cfg.duration);
  return out;
}

inline RunReport make_report(const Simulation& sim, std::uint64_t events) {
  const auto& cfg = sim.config();
  RunReport rep;
  rep.scenario = cfg.name;
  rep.protocol = cfg.protocol;
  rep.seed = cfg.seed;
  rep.duration = cfg.duration;
  rep.events = events;
  rep.paths = sim.paths_log();
  rep.invariants = sim.invariants();
  for (std::size_t i = 0; i < cfg.flows.size(); ++i) {
    const int flow = static_cast<int>(i);
    FlowReport fr;
    fr.summary = summarize_flow(sim.records(), flow, cfg.flows[i].src, cfg.flows[i].sink, cfg.metric_window, cfg.duration);
    fr.directory = flow_directory(flow, cfg.flows[i]);
    for (const auto& d : sim.deliveries()) {
      if (d.flow == flow) {
        fr.first_delivery = d.t;
        fr.first_trail = d.trail;
        break;
      }
    }
    rep.flows.push_back(std::move(fr));
  }
  return rep;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

inline std::string join_chain(const std::vector<NodeId>& chain) {
  std::string s;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(chain[i]);
  }
  return s;
}

}  // namespace detail

inline std::string format_report(const RunReport& r) {
  std::ostringstream out;
  char buf[256];
  out << "scenario: " << r.scenario << '\n';
  out << "protocol: " << to_string(r.protocol) << '\n';
  out << "seed: " << r.seed << '\n';
  std::snprintf(buf, sizeof buf, "duration: %.6f\n", r.duration);
  out << buf;
  out << "events: " << r.events << '\n';
  out << "flows:\n";
  for (const auto& f : r.flows) {
    const auto& s = f.summary;
    std::snprintf(buf, sizeof buf, "  flow %d %u->%u delivered=%llu lost=%llu max_delay=%.9f max_jitter=%.9f mean_throughput=%.3f",
                  s.flow, s.src, s.sink, static_cast<unsigned long long>(s.delivered),
                  static_cast<unsigned long long>(s.lost), s.max_delay, s.max_jitter, s.mean_throughput);
    out << buf;
    if (f.first_delivery) {
      std::snprintf(buf, sizeof buf, " first_delivery=%.6f path=", *f.first_delivery);
      out << buf << detail::join_chain(f.first_trail);
    } else {
      out << " first_delivery=none";
    }
    out << '\n';
  }
  const auto& inv = r.invariants;
  out << "invariants: loop=" << inv.loop_violations << "/" << inv.loop_checks << " parity=" << inv.parity_violations
      << "/" << inv.parity_checks << " conservation=" << inv.conservation_violations << " window="
      << inv.window_violations << "/" << inv.transport_checks << '\n';
  out << "files:\n";
  for (const auto& m : r.manifest) out << "  " << m << '\n';
  return out.str();
}

/// Writes trace.txt, metrics/<flow>/<metric>.dat, summary.csv, paths.log and
/// report.txt under out_dir.
inline RunReport write_outputs(const Simulation& sim, std::uint64_t events, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "metrics", ec);
  if (ec) throw IoError(out_dir, "cannot create output directory: " + ec.message());

  RunReport rep = make_report(sim, events);
  detail::write_text(out_dir / "trace.txt", sim.trace_text());
  rep.manifest.push_back("trace.txt");

  const auto& cfg = sim.config();
  for (std::size_t i = 0; i < cfg.flows.size(); ++i) {
    const fs::path dir = out_dir / "metrics" / rep.flows[i].directory;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir, "cannot create directory: " + ec.message());
    for (const auto& [name, series] : flow_metrics(sim, static_cast<int>(i))) {
      std::ostringstream text;
      text << "# time(s) " << name << "(" << to_string(series.unit) << ")\n";
      write_plot_series(series, text);
      detail::write_text(dir / (name + ".dat"), text.str());
    }
    for (const char* name : kMetricNames) {
      rep.manifest.push_back("metrics/" + rep.flows[i].directory + "/" + name + ".dat");
    }
  }

  std::ostringstream csv;
  std::vector<FlowSummary> rows;
  for (const auto& f : rep.flows) rows.push_back(f.summary);
  write_summary_csv(rows, csv);
  detail::write_text(out_dir / "summary.csv", csv.str());
  rep.manifest.push_back("summary.csv");

  std::string paths;
  for (const auto& line : rep.paths) paths += line + '\n';
  detail::write_text(out_dir / "paths.log", paths);
  rep.manifest.push_back("paths.log");

  rep.manifest.push_back("report.txt");
  detail::write_text(out_dir / "report.txt", format_report(rep));
  return rep;
}

/// Builds and runs the simulation to its configured duration.
inline std::unique_ptr<Simulation> execute(const ScenarioConfig& config, Simulation::Options options = {}) {
  auto sim = std::make_unique<Simulation>(config, options);
  sim->run();
  return sim;
}

inline RunReport run(const ScenarioConfig& config, const std::filesystem::path& out_dir) {
  auto sim = std::make_unique<Simulation>(config);
  const auto events = sim->run();
  return write_outputs(*sim, events, out_dir);
}

// ---------------------------------------------------------------------------
// Comparison

struct Verdict {
  std::string name;
  std::string statement;
  bool holds = false;
};

struct FlowComparison {
  int flow = 0;
  NodeId src = 0;
  NodeId sink = 0;
  FlowSummary a;
  FlowSummary b;
};

struct Comparison {
  std::string scenario;
  Protocol protocol_a = Protocol::kAodv;
  Protocol protocol_b = Protocol::kDsdv;
  std::vector<FlowComparison> flows;
  std::vector<Verdict> verdicts;
};

/// The flow a builtin scenario is about.
inline int focus_flow(const std::string& scenario) { return scenario == "short-distance" ? 1 : 0; }

inline Comparison compare(const RunReport& a, const RunReport& b) {
  if (a.scenario != b.scenario) {
    throw std::invalid_argument("cannot compare different scenarios '" + a.scenario + "' and '" + b.scenario + "'");
  }
  if (a.flows.size() != b.flows.size()) throw std::invalid_argument("reports have different flow sets");
  Comparison c;
  c.scenario = a.scenario;
  c.protocol_a = a.protocol;
  c.protocol_b = b.protocol;
  for (std::size_t i = 0; i < a.flows.size(); ++i) {
    const auto& fa = a.flows[i].summary;
    const auto& fb = b.flows[i].summary;
    if (fa.src != fb.src || fa.sink != fb.sink) throw std::invalid_argument("reports have different flow sets");
    c.flows.push_back({fa.flow, fa.src, fa.sink, fa, fb});
  }
  if (a.protocol == b.protocol || c.flows.empty()) return c;

  const bool a_is_aodv = a.protocol == Protocol::kAodv;
  const std::size_t focus = std::min<std::size_t>(static_cast<std::size_t>(focus_flow(c.scenario)), c.flows.size() - 1);
  const FlowSummary& aodv = a_is_aodv ? c.flows[focus].a : c.flows[focus].b;
  const FlowSummary& dsdv = a_is_aodv ? c.flows[focus].b : c.flows[focus].a;
  const std::string tag = "flow " + std::to_string(aodv.src) + "->" + std::to_string(aodv.sink);

  c.verdicts.push_back({"reactive-delay-above-proactive", "max delay(AODV) > max delay(DSDV) on " + tag,
                        aodv.max_delay > dsdv.max_delay});
  c.verdicts.push_back({"proactive-jitter-below-reactive", "max jitter(DSDV) < max jitter(AODV) on " + tag,
                        dsdv.max_jitter < aodv.max_jitter});
  if (c.scenario == "short-distance") {
    c.verdicts.push_back({"short-proactive-throughput-at-least-reactive",
                          "mean throughput(DSDV) >= mean throughput(AODV) on " + tag,
                          dsdv.mean_throughput >= aodv.mean_throughput});
  } else {
    c.verdicts.push_back({"long-reactive-throughput-at-least-proactive",
                          "mean throughput(AODV) >= mean throughput(DSDV) on " + tag,
                          aodv.mean_throughput >= dsdv.mean_throughput});
  }
  return c;
}

inline std::string format_comparison(const Comparison& c) {
  std::ostringstream out;
  char buf[320];
  out << "scenario: " << c.scenario << '\n';
  std::snprintf(buf, sizeof buf, "%-5s %-9s %14s %14s %14s %14s %16s %16s\n", "flow", "pair", "max_delay_a", "max_delay_b",
                "max_jitter_a", "max_jitter_b", "mean_tput_a", "mean_tput_b");
  out << "a: " << to_string(c.protocol_a) << "  b: " << to_string(c.protocol_b) << '\n' << buf;
  for (const auto& f : c.flows) {
    const std::string pair = std::to_string(f.src) + "->" + std::to_string(f.sink);
    std::snprintf(buf, sizeof buf, "%-5d %-9s %14.9f %14.9f %14.9f %14.9f %16.3f %16.3f\n", f.flow, pair.c_str(),
                  f.a.max_delay, f.b.max_delay, f.a.max_jitter, f.b.max_jitter, f.a.mean_throughput,
                  f.b.mean_throughput);
    out << buf;
  }
  if (!c.verdicts.empty()) out << "verdicts:\n";
  for (const auto& v : c.verdicts) out << "  " << (v.holds ? "true " : "false") << "  " << v.name << ": " << v.statement << '\n';
  return out.str();
}

/// Rebuilds the comparable part of a report from a finished output directory.
inline RunReport load_report(const std::filesystem::path& dir) {
  RunReport rep;
  std::istringstream report(read_file(dir / "report.txt"));
  std::string line;
  while (std::getline(report, line)) {
    if (line.rfind("scenario: ", 0) == 0) rep.scenario = line.substr(10);
    if (line.rfind("protocol: ", 0) == 0) rep.protocol = parse_protocol(line.substr(10));
  }
  std::istringstream csv(read_file(dir / "summary.csv"));
  std::getline(csv, line);
  std::vector<FlowSummary> rows;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    FlowSummary s;
    unsigned long long delivered = 0;
    unsigned long long lost = 0;
    if (std::sscanf(line.c_str(), "%d,%llu,%llu,%lf,%lf,%lf", &s.flow, &delivered, &lost, &s.max_delay, &s.max_jitter,
                    &s.mean_throughput) != 6) {
      throw IoError(dir / "summary.csv", "malformed row: " + line);
    }
    s.delivered = delivered;
    s.lost = lost;
    rows.push_back(s);
  }
  // Endpoints come from the report's flow lines.
  report.clear();
  report.seekg(0);
  while (std::getline(report, line)) {
    int flow = 0;
    unsigned src = 0;
    unsigned sink = 0;
    if (std::sscanf(line.c_str(), "  flow %d %u->%u", &flow, &src, &sink) == 3 && flow >= 0 &&
        static_cast<std::size_t>(flow) < rows.size()) {
      rows[static_cast<std::size_t>(flow)].src = src;
      rows[static_cast<std::size_t>(flow)].sink = sink;
    }
  }
  for (auto& s : rows) rep.flows.push_back({s, {}, {}, {}});
  return rep;
}

}  // namespace vanetsim
