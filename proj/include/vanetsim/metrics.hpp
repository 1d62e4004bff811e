#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vanetsim/engine.hpp"
#include "vanetsim/mobility.hpp"
#include "vanetsim/packets.hpp"

namespace vanetsim {

/// One ledger row. End-to-end rows (hop_level == false) track a transport
/// segment from its origin to its final destination; hop-level rows track
/// a single radio frame from transmitter to receiver.
struct PacketRecord {
  TrafficClass cls = TrafficClass::kData;
  int flow = -1;  // -1 for control traffic
  std::int64_t seq = 0;
  std::uint32_t size = 0;
  NodeId src = 0;
  NodeId dst = 0;
  SimTime sent_at = 0.0;
  std::optional<SimTime> received_at;  // nullopt = lost
  bool hop_level = false;
};

enum class SeriesUnit { kBitsPerSecond, kSeconds, kPackets };

inline const char* to_string(SeriesUnit u) {
  switch (u) {
    case SeriesUnit::kBitsPerSecond: return "bits/second";
    case SeriesUnit::kSeconds: return "seconds";
    case SeriesUnit::kPackets: return "packets";
  }
  return "unknown";
}

struct SeriesPoint {
  SimTime t;
  double value;
  friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

struct MetricSeries {
  std::vector<SeriesPoint> points;
  SeriesUnit unit = SeriesUnit::kBitsPerSecond;

  bool empty() const { return points.empty(); }
  double max_value() const {
    double m = 0.0;
    for (const auto& p : points) m = std::max(m, p.value);
    return m;
  }
  double sum() const {
    double s = 0.0;
    for (const auto& p : points) s += p.value;
    return s;
  }
  /// Appends, folding a repeated timestamp into the existing point via max.
  void push(SimTime t, double v) {
    if (!points.empty() && points.back().t == t) {
      points.back().value = std::max(points.back().value, v);
    } else {
      points.push_back({t, v});
    }
  }
};

namespace detail {

inline std::size_t window_count(SimTime t_end, double window) {
  if (!(window > 0.0)) throw std::invalid_argument("metric window must be positive");
  return static_cast<std::size_t>(std::ceil(t_end / window - 1e-12));
}

inline std::size_t window_index(SimTime t, double window, std::size_t n) {
  auto k = static_cast<std::size_t>(std::floor(t / window));
  return std::min(k, n == 0 ? 0 : n - 1);
}

inline bool is_delivered_data(const PacketRecord& r, int flow) {
  return !r.hop_level && r.cls == TrafficClass::kData && r.flow == flow && r.received_at.has_value();
}

}  // namespace detail

/// Received application bits per window [kW, (k+1)W), divided by W and
/// reported at the window's end.
inline MetricSeries throughput_series(const std::vector<PacketRecord>& records, int flow, double window, SimTime t_end) {
  const std::size_t n = detail::window_count(t_end, window);
  std::vector<double> bits(n, 0.0);
  for (const auto& r : records) {
    if (!detail::is_delivered_data(r, flow) || n == 0) continue;
    bits[detail::window_index(*r.received_at, window, n)] += r.size * 8.0;
  }
  MetricSeries s{{}, SeriesUnit::kBitsPerSecond};
  for (std::size_t k = 0; k < n; ++k) s.points.push_back({(k + 1) * window, bits[k] / window});
  return s;
}

/// One point per delivered packet: (received_at, end-to-end delay).
inline MetricSeries delay_series(const std::vector<PacketRecord>& records, int flow) {
  std::vector<SeriesPoint> pts;
  for (const auto& r : records) {
    if (detail::is_delivered_data(r, flow)) pts.push_back({*r.received_at, *r.received_at - r.sent_at});
  }
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  MetricSeries s{{}, SeriesUnit::kSeconds};
  for (const auto& p : pts) s.push(p.t, p.value);
  return s;
}

/// Population standard deviation of the delays received in each window;
/// windows holding fewer than two packets produce no point.
inline MetricSeries jitter_series(const std::vector<PacketRecord>& records, int flow, double window, SimTime t_end) {
  const std::size_t n = detail::window_count(t_end, window);
  std::vector<std::vector<double>> delays(n);
  for (const auto& r : records) {
    if (!detail::is_delivered_data(r, flow) || n == 0) continue;
    delays[detail::window_index(*r.received_at, window, n)].push_back(*r.received_at - r.sent_at);
  }
  MetricSeries s{{}, SeriesUnit::kSeconds};
  for (std::size_t k = 0; k < n; ++k) {
    const auto& d = delays[k];
    if (d.size() < 2) continue;
    if (std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); })) {
      s.points.push_back({(k + 1) * window, 0.0});
      continue;
    }
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(d.size());
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d.size());
    s.points.push_back({(k + 1) * window, std::sqrt(var)});
  }
  return s;
}

/// Bits of every frame (data and control) delivered to the node, per window.
inline MetricSeries destination_bandwidth_series(const std::vector<PacketRecord>& records, NodeId node, double window,
                                                 SimTime t_end) {
  const std::size_t n = detail::window_count(t_end, window);
  std::vector<double> bits(n, 0.0);
  for (const auto& r : records) {
    if (!r.hop_level || r.dst != node || !r.received_at || n == 0) continue;
    bits[detail::window_index(*r.received_at, window, n)] += r.size * 8.0;
  }
  MetricSeries s{{}, SeriesUnit::kBitsPerSecond};
  for (std::size_t k = 0; k < n; ++k) s.points.push_back({(k + 1) * window, bits[k] / window});
  return s;
}

inline MetricSeries cwnd_to_series(const std::vector<std::pair<SimTime, double>>& samples) {
  MetricSeries s{{}, SeriesUnit::kPackets};
  for (const auto& [t, v] : samples) {
    if (!s.points.empty() && s.points.back().t == t) {
      s.points.back().value = v;
    } else {
      s.points.push_back({t, v});
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Two-column plot files

inline void write_plot_series(const MetricSeries& series, std::ostream& out) {
  char buf[64];
  for (const auto& p : series.points) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.t, p.value);
    out << buf;
  }
}

inline MetricSeries read_plot_series(std::istream& in, SeriesUnit unit) {
  MetricSeries s{{}, unit};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    SeriesPoint p{};
    if (!(ls >> p.t >> p.value)) {
      throw std::runtime_error("malformed series line " + std::to_string(lineno));
    }
    s.points.push_back(p);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Mobility trace (M-lines)

struct MobilityTraceRecord {
  SimTime time = 0.0;
  NodeId node = 0;
  Position position;
  Position destination;
  double speed = 0.0;

  friend bool operator==(const MobilityTraceRecord&, const MobilityTraceRecord&) = default;
};

inline std::string format_mobility_line(const MobilityTraceRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "M %.5f %u (%.2f, %.2f, %.2f), (%.2f, %.2f), %.2f", r.time, r.node, r.position.x,
                r.position.y, 0.0, r.destination.x, r.destination.y, r.speed);
  return buf;
}

inline MobilityTraceRecord to_trace_record(const MobilityState& s, SimTime t) {
  return {t, s.node, s.origin, s.destination, s.speed};
}

inline void write_mobility_trace(const std::vector<MobilityTraceRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << format_mobility_line(r) << '\n';
}

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ParsedTrace {
  std::vector<MobilityTraceRecord> records;
  std::size_t skipped = 0;
};

/// Parses M-lines; other line types are skipped and counted.
inline ParsedTrace parse_mobility_trace(std::string_view text) {
  static const std::regex kLine(
      R"(^M\s+([-+0-9.eE]+)\s+(\d+)\s+\(\s*([-+0-9.eE]+),\s*([-+0-9.eE]+),\s*([-+0-9.eE]+)\),\s*\(\s*([-+0-9.eE]+),\s*([-+0-9.eE]+)\),\s*([-+0-9.eE]+)\s*$)");
  ParsedTrace out;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string line(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    line = line.substr(first);
    if (line[0] != 'M' || (line.size() > 1 && line[1] != ' ' && line[1] != '\t')) {
      ++out.skipped;
      continue;
    }
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) throw TraceParseError(lineno, "malformed M-line: " + line);
    try {
      MobilityTraceRecord r;
      r.time = std::stod(m[1]);
      r.node = static_cast<NodeId>(std::stoul(m[2]));
      r.position = {std::stod(m[3]), std::stod(m[4])};
      r.destination = {std::stod(m[6]), std::stod(m[7])};
      r.speed = std::stod(m[8]);
      out.records.push_back(r);
    } catch (const std::exception&) {
      throw TraceParseError(lineno, "unparsable number in M-line");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summary

struct FlowSummary {
  int flow = 0;
  NodeId src = 0;
  NodeId sink = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost = 0;
  double max_delay = 0.0;
  double max_jitter = 0.0;
  double mean_throughput = 0.0;
  std::optional<SimTime> first_delivery;
};

inline FlowSummary summarize_flow(const std::vector<PacketRecord>& records, int flow, NodeId src, NodeId sink,
                                  double window, SimTime t_end) {
  FlowSummary s;
  s.flow = flow;
  s.src = src;
  s.sink = sink;
  for (const auto& r : records) {
    if (r.hop_level || r.cls != TrafficClass::kData || r.flow != flow) continue;
    if (r.received_at) {
      ++s.delivered;
      if (!s.first_delivery || *r.received_at < *s.first_delivery) s.first_delivery = r.received_at;
    } else {
      ++s.lost;
    }
  }
  s.max_delay = delay_series(records, flow).max_value();
  s.max_jitter = jitter_series(records, flow, window, t_end).max_value();
  const auto tp = throughput_series(records, flow, window, t_end);
  s.mean_throughput = tp.points.empty() ? 0.0 : tp.sum() / static_cast<double>(tp.points.size());
  return s;
}

inline void write_summary_csv(const std::vector<FlowSummary>& rows, std::ostream& out) {
  out << "flow,delivered,lost,max_delay,max_jitter,mean_throughput\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%llu,%llu,%.9f,%.9f,%.3f\n", r.flow, static_cast<unsigned long long>(r.delivered),
                  static_cast<unsigned long long>(r.lost), r.max_delay, r.max_jitter, r.mean_throughput);
    out << buf;
  }
}

}  // namespace vanetsim
