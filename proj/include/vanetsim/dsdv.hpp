#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "vanetsim/routing.hpp"

namespace vanetsim {

struct DsdvConfig {
  double periodic_interval = 15.0;
  double full_dump_interval = 90.0;
  double settling_time = 6.0;
  /// A periodic update becomes a full dump when more than this fraction of
  /// the table is waiting to be advertised.
  double full_dump_dirty_fraction = 0.5;
  double triggered_min_gap = 1.0;
  /// First periodic update fires at a uniform offset in [0, this).
  double start_jitter = 0.0;
  std::uint32_t header_size = 20;
  std::uint32_t row_size = 12;
};

struct DsdvEntry {
  NodeId dest = 0;
  NodeId next_hop = 0;
  std::uint32_t metric = kInfiniteMetric;
  SeqNum dest_seq = 0;
  SimTime install_time = 0.0;
  std::optional<SimTime> settling_deadline;
  /// Last row put on the air for this destination.
  std::optional<DsdvRow> advertised;

  bool alive() const { return metric != kInfiniteMetric && dest_seq % 2 == 0; }
};

/// The adoption rule as a pure predicate: a candidate replaces the stored
/// route iff it carries a newer sequence number, or the same sequence number
/// with a strictly smaller metric.
inline bool dsdv_prefers(SeqNum cand_seq, std::uint32_t cand_metric, SeqNum stored_seq, std::uint32_t stored_metric) {
  return cand_seq > stored_seq || (cand_seq == stored_seq && cand_metric < stored_metric);
}

class DsdvAgent : public RoutingAgent {
 public:
  DsdvAgent(NodeId self, RoutingServices& services, DsdvConfig config = {})
      : RoutingAgent(self, services), config_(config) {
    DsdvEntry me;
    me.dest = self;
    me.next_hop = self;
    me.metric = 0;
    me.dest_seq = 0;
    table_[self] = me;
  }

  const char* protocol() const override { return "DSDV"; }
  const DsdvConfig& config() const { return config_; }
  SeqNum own_seq() const { return own_seq_; }
  const std::map<NodeId, DsdvEntry>& table() const { return table_; }
  const std::set<NodeId>& dirty() const { return dirty_; }
  std::uint64_t updates_sent() const { return updates_sent_; }
  std::uint64_t triggered_sent() const { return triggered_sent_; }

  const DsdvEntry* entry(NodeId dest) const {
    auto it = table_.find(dest);
    return it == table_.end() ? nullptr : &it->second;
  }

  void start() override {
    const double offset = config_.start_jitter > 0.0 ? services_.rng().uniform(0.0, config_.start_jitter) : 0.0;
    periodic_timer_ = scheduler().schedule_in(offset, EventKind::kPeriodicUpdate, self_, [this] { on_periodic(); });
  }

  /// Bumps the own sequence number and advertises: a full dump when one is
  /// due, an incremental of the changed rows otherwise.
  DsdvUpdate periodic_update() {
    own_seq_ += 2;
    auto& me = table_[self_];
    me.dest_seq = own_seq_;
    const std::size_t ready = advertisable_dirty().size();
    const bool full = !last_full_dump_ || now() - *last_full_dump_ >= config_.full_dump_interval ||
                      static_cast<double>(ready) > config_.full_dump_dirty_fraction * static_cast<double>(table_.size());
    return emit(full ? DsdvUpdate::Kind::kFullDump : DsdvUpdate::Kind::kIncremental);
  }

  void handle_update(const DsdvUpdate& update) {
    const NodeId sender = update.sender;
    bool breakage = false;
    consider(DsdvRow{sender, 0, update.sender_seq}, sender, breakage);
    for (const auto& row : update.rows) {
      if (row.dest == self_ || row.dest == sender) continue;
      consider(row, sender, breakage);
    }
    if (breakage) trigger_update();
  }

  /// Marks every route through the dead neighbor broken with an odd
  /// sequence number one above the stored even one.
  void handle_neighbor_loss(NodeId dead) {
    bool changed = false;
    for (auto& [dest, e] : table_) {
      if (dest == self_ || e.next_hop != dead || !e.alive()) continue;
      e.metric = kInfiniteMetric;
      e.dest_seq += 1;
      e.install_time = now();
      e.settling_deadline.reset();
      dirty_.insert(dest);
      services_.table_changed(self_, dest);
      changed = true;
    }
    if (changed) trigger_update();
  }

  /// True iff a pending change for dest may go out now.
  bool damp_advertisement(NodeId dest) const {
    auto it = table_.find(dest);
    if (it == table_.end()) return false;
    const auto& e = it->second;
    if (!e.alive()) return true;
    return !e.settling_deadline || *e.settling_deadline <= now();
  }

  std::optional<NodeId> route_lookup(NodeId dest, SimTime /*t*/) const override {
    if (dest == self_) return self_;
    auto it = table_.find(dest);
    if (it == table_.end() || !it->second.alive()) return std::nullopt;
    return it->second.next_hop;
  }

  void send_data(DataSegment segment) override {
    if (segment.final_dst == self_) {
      services_.deliver_local(self_, std::move(segment));
      return;
    }
    if (auto next = route_lookup(segment.final_dst, now())) {
      services_.send_frame(self_, *next, segment.size, std::move(segment));
      return;
    }
    services_.drop_data(self_, segment, DropReason::kNoRoute);
  }

  void link_failed(const NetFrame& frame) override {
    handle_neighbor_loss(frame.dst);
    if (const auto* seg = std::get_if<DataSegment>(&frame.payload)) {
      services_.drop_data(self_, *seg, DropReason::kLinkBroken);
    }
  }

 protected:
  void handle_control(const NetFrame& frame) override {
    if (const auto* upd = std::get_if<DsdvUpdate>(&frame.payload)) handle_update(*upd);
  }

  bool uses_next_hop(NodeId neighbor) const override {
    return std::any_of(table_.begin(), table_.end(), [&](const auto& kv) {
      return kv.first != self_ && kv.second.next_hop == neighbor && kv.second.alive();
    });
  }

  void neighbor_lost(NodeId neighbor) override { handle_neighbor_loss(neighbor); }

 private:
  void consider(const DsdvRow& row, NodeId sender, bool& breakage) {
    const std::uint32_t metric = row.metric == kInfiniteMetric ? kInfiniteMetric : row.metric + 1;
    auto it = table_.find(row.dest);
    if (it == table_.end()) {
      if (metric == kInfiniteMetric) return;
    } else if (!dsdv_prefers(row.dest_seq, metric, it->second.dest_seq, it->second.metric)) {
      return;
    }
    DsdvEntry& e = table_[row.dest];
    const bool had_route = it != table_.end() && e.alive();
    const std::uint32_t old_metric = e.metric;
    e.dest = row.dest;
    e.next_hop = sender;
    e.metric = metric;
    e.dest_seq = row.dest_seq;
    e.install_time = now();
    if (metric == kInfiniteMetric) {
      e.settling_deadline.reset();
      breakage = true;
    } else if (had_route && metric > old_metric) {
      // Worse route: hold it back for the settling time.
      if (!e.settling_deadline || *e.settling_deadline <= now()) e.settling_deadline = now() + config_.settling_time;
    } else if (e.settling_deadline && *e.settling_deadline <= now()) {
      e.settling_deadline.reset();
    }
    dirty_.insert(row.dest);
    services_.table_changed(self_, row.dest);
    if (metric != kInfiniteMetric) watch_neighbor(sender);
  }

  std::vector<NodeId> advertisable_dirty() const {
    std::vector<NodeId> out;
    for (NodeId d : dirty_) {
      if (d != self_ && damp_advertisement(d)) out.push_back(d);
    }
    return out;
  }

  DsdvUpdate emit(DsdvUpdate::Kind kind) {
    DsdvUpdate upd;
    upd.sender = self_;
    upd.sender_seq = own_seq_;
    upd.kind = kind;
    auto current = [](const DsdvEntry& e) { return DsdvRow{e.dest, e.metric, e.dest_seq}; };
    if (kind == DsdvUpdate::Kind::kFullDump) {
      for (auto& [dest, e] : table_) {
        if (dest == self_ || damp_advertisement(dest)) {
          e.advertised = current(e);
          dirty_.erase(dest);
        }
        if (e.advertised) upd.rows.push_back(*e.advertised);
      }
      last_full_dump_ = now();
    } else {
      for (NodeId d : advertisable_dirty()) {
        auto& e = table_[d];
        e.advertised = current(e);
        upd.rows.push_back(*e.advertised);
        dirty_.erase(d);
      }
    }
    table_[self_].advertised = current(table_[self_]);
    ++updates_sent_;
    const auto size = config_.header_size + config_.row_size * static_cast<std::uint32_t>(upd.rows.size());
    services_.send_frame(self_, kBroadcast, size, upd);
    return upd;
  }

  void on_periodic() {
    periodic_update();
    periodic_timer_ = scheduler().schedule_in(config_.periodic_interval, EventKind::kPeriodicUpdate, self_,
                                              [this] { on_periodic(); });
  }

  /// Rate-limited incremental carrying urgent changes.
  void trigger_update() {
    if (scheduler().is_pending(trigger_timer_)) return;
    const SimTime earliest = last_triggered_ ? *last_triggered_ + config_.triggered_min_gap : now();
    trigger_timer_ = scheduler().schedule(std::max(now(), earliest), EventKind::kTimer, self_, [this] {
      if (advertisable_dirty().empty()) return;
      last_triggered_ = now();
      ++triggered_sent_;
      emit(DsdvUpdate::Kind::kIncremental);
    });
  }

  DsdvConfig config_;
  SeqNum own_seq_ = 0;
  std::map<NodeId, DsdvEntry> table_;
  std::set<NodeId> dirty_;
  std::optional<SimTime> last_full_dump_;
  std::optional<SimTime> last_triggered_;
  EventHandle periodic_timer_;
  EventHandle trigger_timer_;
  std::uint64_t updates_sent_ = 0;
  std::uint64_t triggered_sent_ = 0;
};

}  // namespace vanetsim
