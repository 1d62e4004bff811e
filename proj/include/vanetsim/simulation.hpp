#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vanetsim/aodv.hpp"
#include "vanetsim/dsdv.hpp"
#include "vanetsim/engine.hpp"
#include "vanetsim/metrics.hpp"
#include "vanetsim/mobility.hpp"
#include "vanetsim/radio.hpp"
#include "vanetsim/routing.hpp"
#include "vanetsim/scenario_config.hpp"
#include "vanetsim/transport.hpp"

namespace vanetsim {

/// A data segment that reached its sink, with the nodes it crossed.
struct Delivery {
  SimTime t = 0.0;
  int flow = 0;
  std::int64_t seq = 0;
  std::vector<NodeId> trail;
};

struct InvariantCounters {
  std::uint64_t loop_checks = 0;
  std::uint64_t loop_violations = 0;
  std::uint64_t parity_checks = 0;
  std::uint64_t parity_violations = 0;
  std::uint64_t transport_checks = 0;
  std::uint64_t conservation_violations = 0;
  std::uint64_t window_violations = 0;
  std::vector<std::string> first_failures;  // a few human-readable samples

  std::uint64_t total_violations() const {
    return loop_violations + parity_violations + conservation_violations + window_violations;
  }
};

/// One wired-up network: scheduler, mobility, radio, one routing agent per
/// node and one TCP sender/sink pair per flow.
class Simulation : public RoutingServices {
 public:
  struct Options {
    bool ledger = true;
    bool check_invariants = true;
    bool packet_trace = true;
    std::ostream* event_log = nullptr;
  };

  explicit Simulation(ScenarioConfig config) : Simulation(std::move(config), Options{}) {}

  Simulation(ScenarioConfig config, Options options)
      : config_(std::move(config)), options_(options), rng_(config_.seed), mobility_(config_.field, scheduler_),
        radio_(config_.radio, mobility_, scheduler_) {
    config_.validate();
    if (options_.event_log) scheduler_.set_event_log(options_.event_log);
    build();
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const ScenarioConfig& config() const { return config_; }

  /// Runs to the configured duration; returns the number of events dispatched.
  std::size_t run() { return scheduler_.run_until(config_.duration); }
  std::size_t run_until(SimTime t) { return scheduler_.run_until(t); }

  Scheduler& scheduler() override { return scheduler_; }
  Rng& rng() override { return rng_; }
  const MobilityModel& mobility() const { return mobility_; }
  const RadioMedium<Payload>& radio() const { return radio_; }

  RoutingAgent& agent(NodeId node) { return *agents_.at(node); }
  const AodvAgent* aodv(NodeId node) const { return dynamic_cast<const AodvAgent*>(agents_.at(node).get()); }
  const DsdvAgent* dsdv(NodeId node) const { return dynamic_cast<const DsdvAgent*>(agents_.at(node).get()); }
  const TcpSender& sender(int flow) const { return *senders_.at(static_cast<std::size_t>(flow)); }
  const TcpSink& sink(int flow) const { return *sinks_.at(static_cast<std::size_t>(flow)); }

  const std::vector<PacketRecord>& records() const { return records_; }
  const std::vector<Delivery>& deliveries() const { return deliveries_; }
  const std::vector<MobilityTraceRecord>& mobility_trace() const { return mobility_trace_; }
  const std::vector<std::string>& paths_log() const { return paths_log_; }
  const std::string& trace_text() const { return trace_text_; }
  const InvariantCounters& invariants() const { return invariants_; }

  /// Walks next hops from `from` toward `dest`; returns the chain, or
  /// nullopt if a node repeats.
  std::optional<std::vector<NodeId>> route_chain(NodeId from, NodeId dest) const {
    std::vector<NodeId> chain{from};
    std::vector<bool> seen(agents_.size(), false);
    seen[from] = true;
    NodeId cur = from;
    while (cur != dest) {
      auto next = agents_[cur]->route_lookup(dest, scheduler_.now());
      if (!next || *next == cur) break;
      if (*next >= agents_.size()) break;
      if (seen[*next]) return std::nullopt;
      seen[*next] = true;
      chain.push_back(*next);
      cur = *next;
    }
    return chain;
  }

  // RoutingServices ---------------------------------------------------------

  void send_frame(NodeId from, NodeId to, std::uint32_t size, Payload payload) override {
    NetFrame frame;
    frame.src = from;
    frame.dst = to;
    frame.size = size;
    frame.payload = std::move(payload);
    frame.sent_at = scheduler_.now();
    radio_.transmit(std::move(frame));
  }

  void deliver_local(NodeId node, DataSegment segment) override {
    const SimTime now = scheduler_.now();
    if (options_.ledger) {
      if (auto it = uid_index_.find(segment.uid); it != uid_index_.end()) {
        auto& rec = records_[it->second];
        if (!rec.received_at) rec.received_at = now;
      }
    }
    const auto f = static_cast<std::size_t>(segment.flow);
    if (f >= senders_.size()) return;
    if (!segment.is_ack && node == config_.flows[f].sink) {
      deliveries_.push_back({now, segment.flow, segment.seq, segment.trail});
      log_path(segment, now);
      sinks_[f]->sink_receive(segment.seq);
    } else if (segment.is_ack && node == config_.flows[f].src) {
      log_path(segment, now);
      senders_[f]->on_ack(segment.seq);
    }
  }

  void drop_data(NodeId node, const DataSegment& segment, DropReason reason) override {
    if (!options_.packet_trace) return;
    char buf[200];
    std::snprintf(buf, sizeof buf, "D %.9f %u %s %d %lld %u %s\n", scheduler_.now(), node,
                  segment.is_ack ? "ack" : "data", segment.flow, static_cast<long long>(segment.seq), segment.size,
                  to_string(reason));
    trace_text_ += buf;
  }

  void drop_control(NodeId node, TrafficClass cls, DropReason reason) override {
    if (!options_.packet_trace) return;
    char buf[160];
    std::snprintf(buf, sizeof buf, "D %.9f %u %s -1 -1 0 %s\n", scheduler_.now(), node, to_string(cls),
                  to_string(reason));
    trace_text_ += buf;
  }

  bool in_range(NodeId a, NodeId b) const override { return radio_.in_range(a, b, scheduler_.now()); }

  std::optional<SimTime> link_break_time(NodeId a, NodeId b, SimTime from_t) const override {
    return radio_.link_break_time(a, b, from_t);
  }

  void table_changed(NodeId node, NodeId dest) override {
    if (!options_.check_invariants || agents_.size() <= node || !agents_[node]) return;
    ++invariants_.loop_checks;
    if (!route_chain(node, dest)) {
      ++invariants_.loop_violations;
      note_failure("routing loop at t=" + std::to_string(scheduler_.now()) + " from " + std::to_string(node) +
                   " toward " + std::to_string(dest));
    }
    if (const auto* d = dynamic_cast<const DsdvAgent*>(agents_[node].get())) {
      if (const auto* e = d->entry(dest)) check_parity(node, *e);
    }
  }

  void route_discovered(NodeId node, NodeId dest, NodeId next_hop, std::uint32_t hops) override {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.6f route %u->%u next=%u hops=%u", scheduler_.now(), node, dest, next_hop, hops);
    paths_log_.emplace_back(buf);
  }

 private:
  void build() {
    // Placements in id order.
    std::vector<Placement> placements = config_.placements;
    std::sort(placements.begin(), placements.end(), [](const auto& a, const auto& b) { return a.node < b.node; });
    mobility_.set_random_waypoint_params(config_.background.params);
    for (const auto& p : placements) {
      const bool rwp = config_.background.mode == MobilityMode::kRandomWaypoint && !config_.is_scripted(p.node);
      mobility_.add_node(p.position, rwp ? MobilityMode::kRandomWaypoint : MobilityMode::kStationary);
    }
    for (NodeId n = 0; n < mobility_.size(); ++n) {
      mobility_trace_.push_back(to_trace_record(mobility_.state_at(n, 0.0), 0.0));
    }
    if (options_.packet_trace) {
      for (const auto& r : mobility_trace_) trace_text_ += format_mobility_line(r) + '\n';
    }
    mobility_.set_motion_listener([this](const MobilityState& s, SimTime t) {
      auto rec = to_trace_record(s, t);
      mobility_trace_.push_back(rec);
      if (options_.packet_trace) trace_text_ += format_mobility_line(rec) + '\n';
    });

    // Random draws: mobility first, then traffic, then protocol.
    for (const auto& m : config_.motions) mobility_.set_motion(m.node, m.destination, m.speed, m.start_t);
    if (config_.background.mode == MobilityMode::kRandomWaypoint) {
      for (NodeId n = 0; n < mobility_.size(); ++n) {
        if (!config_.is_scripted(n)) mobility_.random_waypoint_next(n, rng_);
      }
    }

    radio_.set_receiver([this](NodeId receiver, const NetFrame& frame) { agents_[receiver]->receive(frame); });
    radio_.set_unicast_failure_handler([this](const NetFrame& frame) { agents_[frame.src]->link_failed(frame); });
    radio_.set_promiscuous_tap({
        [this](NodeId receiver, const NetFrame& frame, SimTime at) { on_hop(receiver, frame, at, true); },
        [this](const NetFrame& frame, SimTime at, LossReason) { on_hop(frame.dst, frame, at, false); },
    });

    for (NodeId n = 0; n < mobility_.size(); ++n) {
      if (config_.protocol == Protocol::kAodv) {
        agents_.push_back(std::make_unique<AodvAgent>(n, *this, config_.aodv));
      } else {
        agents_.push_back(std::make_unique<DsdvAgent>(n, *this, config_.dsdv));
      }
    }

    for (std::size_t i = 0; i < config_.flows.size(); ++i) {
      const int flow = static_cast<int>(i);
      const FlowConfig fc = config_.flows[i];
      senders_.push_back(std::make_unique<TcpSender>(flow, fc, config_.tcp, scheduler_,
                                                     [this](DataSegment s) { originate(std::move(s)); }));
      sinks_.push_back(std::make_unique<TcpSink>(flow, fc, scheduler_, [this](DataSegment s) { originate(std::move(s)); }));
    }
    for (auto& s : senders_) s->start();
    for (auto& a : agents_) a->start();

    if (options_.check_invariants) {
      scheduler_.set_after_dispatch([this] { check_transport(); });
    }
  }

  void originate(DataSegment segment) {
    segment.uid = ++next_uid_;
    segment.trail = {segment.origin};
    if (options_.ledger) {
      PacketRecord rec;
      rec.cls = segment.is_ack ? TrafficClass::kAck : TrafficClass::kData;
      rec.flow = segment.flow;
      rec.seq = segment.seq;
      rec.size = segment.size;
      rec.src = segment.origin;
      rec.dst = segment.final_dst;
      rec.sent_at = segment.created_at;
      uid_index_[segment.uid] = records_.size();
      records_.push_back(rec);
    }
    agents_[segment.origin]->send_data(std::move(segment));
  }

  void on_hop(NodeId receiver, const NetFrame& frame, SimTime at, bool delivered) {
    const TrafficClass cls = classify(frame.payload);
    int flow = -1;
    std::int64_t seq = -1;
    if (const auto* seg = std::get_if<DataSegment>(&frame.payload)) {
      flow = seg->flow;
      seq = seg->seq;
    }
    if (options_.ledger) {
      PacketRecord rec;
      rec.cls = cls;
      rec.flow = flow;
      rec.seq = seq;
      rec.size = frame.size;
      rec.src = frame.src;
      rec.dst = receiver;
      rec.sent_at = frame.sent_at;
      if (delivered) rec.received_at = at;
      rec.hop_level = true;
      records_.push_back(rec);
    }
    if (options_.packet_trace) {
      char buf[200];
      if (delivered) {
        std::snprintf(buf, sizeof buf, "r %.9f %u %s %d %lld %u %u\n", at, receiver, to_string(cls), flow,
                      static_cast<long long>(seq), frame.size, frame.src);
      } else {
        const std::string dst = frame.is_broadcast() ? std::string("*") : std::to_string(frame.dst);
        std::snprintf(buf, sizeof buf, "x %.9f %u %s %d %lld %u %s\n", at, frame.src, to_string(cls), flow,
                      static_cast<long long>(seq), frame.size, dst.c_str());
      }
      trace_text_ += buf;
    }
  }

  /// Logs a path line whenever the chain a flow direction uses changes.
  void log_path(const DataSegment& segment, SimTime now) {
    const auto key = std::make_pair(segment.flow, segment.is_ack);
    auto& last = last_path_[key];
    if (last == segment.trail) return;
    last = segment.trail;
    std::string chain;
    for (std::size_t i = 0; i < segment.trail.size(); ++i) {
      if (i) chain += '-';
      chain += std::to_string(segment.trail[i]);
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.6f flow=%d %s hops=%zu ", now, segment.flow, segment.is_ack ? "ack" : "data",
                  segment.trail.size() - 1);
    paths_log_.push_back(buf + chain);
  }

  void check_parity(NodeId node, const DsdvEntry& e) {
    ++invariants_.parity_checks;
    const bool odd = e.dest_seq % 2 == 1;
    const bool inf = e.metric == kInfiniteMetric;
    if (odd != inf) {
      ++invariants_.parity_violations;
      note_failure("parity at node " + std::to_string(node) + " dest " + std::to_string(e.dest));
    }
  }

  void check_transport() {
    for (const auto& s : senders_) {
      ++invariants_.transport_checks;
      if (!s->conservation_holds()) {
        ++invariants_.conservation_violations;
        note_failure("conservation flow " + std::to_string(s->flow_id()));
      }
      if (!s->window_holds()) {
        ++invariants_.window_violations;
        note_failure("window flow " + std::to_string(s->flow_id()));
      }
    }
  }

  void note_failure(std::string what) {
    if (invariants_.first_failures.size() < 8) invariants_.first_failures.push_back(std::move(what));
  }

  ScenarioConfig config_;
  Options options_;
  Scheduler scheduler_;
  Rng rng_;
  MobilityModel mobility_;
  RadioMedium<Payload> radio_;
  std::vector<std::unique_ptr<RoutingAgent>> agents_;
  std::vector<std::unique_ptr<TcpSender>> senders_;
  std::vector<std::unique_ptr<TcpSink>> sinks_;
  std::uint64_t next_uid_ = 0;
  std::vector<PacketRecord> records_;
  std::unordered_map<std::uint64_t, std::size_t> uid_index_;
  std::vector<Delivery> deliveries_;
  std::vector<MobilityTraceRecord> mobility_trace_;
  std::vector<std::string> paths_log_;
  std::map<std::pair<int, bool>, std::vector<NodeId>> last_path_;
  std::string trace_text_;
  InvariantCounters invariants_;
};

}  // namespace vanetsim
