#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "vanetsim/routing.hpp"

namespace vanetsim {

struct AodvConfig {
  int initial_ttl = 35;
  double node_traversal_time = 0.04;
  int net_diameter = 35;
  double active_route_timeout = 3.0;
  int max_retries = 3;
  std::size_t max_buffered = 64;
  std::uint32_t rreq_size = 24;
  std::uint32_t rrep_size = 20;
  std::uint32_t rerr_header_size = 4;
  std::uint32_t rerr_entry_size = 8;

  double net_traversal_time() const { return 2.0 * node_traversal_time * net_diameter; }
  /// First reply-wait; every retry doubles it.
  double base_reply_wait() const { return 2.0 * net_traversal_time(); }
  double seen_rreq_lifetime() const { return 2.0 * net_traversal_time(); }
};

struct AodvRouteEntry {
  NodeId dest = 0;
  NodeId next_hop = 0;
  std::uint32_t hop_count = 0;
  SeqNum dest_seq = 0;
  bool seq_known = true;
  SimTime expires_at = 0.0;
  bool valid = false;
  std::set<NodeId> precursors;

  bool usable(SimTime t) const { return valid && expires_at > t; }
};

/// Per-node AODV agent. Reverse routes store the RREQ's hop count as
/// received, so the first relay records its route to the originator with
/// hop count 0; forward routes learned from RREPs count hops normally.
class AodvAgent : public RoutingAgent {
 public:
  struct Pending {
    int attempts = 0;
    double wait = 0.0;
    EventHandle timer;
    std::deque<DataSegment> buffered;
  };

  AodvAgent(NodeId self, RoutingServices& services, AodvConfig config = {})
      : RoutingAgent(self, services), config_(config) {}

  const char* protocol() const override { return "AODV"; }
  const AodvConfig& config() const { return config_; }

  SeqNum own_seq() const { return own_seq_; }
  std::uint32_t next_rreq_id() const { return next_rreq_id_; }
  const std::map<NodeId, AodvRouteEntry>& table() const { return table_; }
  const std::map<NodeId, Pending>& pending_discoveries() const { return pending_; }
  std::uint64_t duplicate_rreqs() const { return duplicate_rreqs_; }
  std::uint64_t rreq_broadcasts() const { return rreq_broadcasts_; }

  const AodvRouteEntry* entry(NodeId dest) const {
    auto it = table_.find(dest);
    return it == table_.end() ? nullptr : &it->second;
  }

  /// Test hook: install a route as if it had been learned earlier.
  void seed_route(const AodvRouteEntry& e) {
    table_[e.dest] = e;
    services_.table_changed(self_, e.dest);
  }

  std::optional<NodeId> route_lookup(NodeId dest, SimTime t) const override {
    if (dest == self_) return self_;
    auto it = table_.find(dest);
    if (it == table_.end() || !it->second.usable(t)) return std::nullopt;
    return it->second.next_hop;
  }

  void send_data(DataSegment segment) override {
    if (segment.final_dst == self_) {
      services_.deliver_local(self_, std::move(segment));
      return;
    }
    const NodeId dest = segment.final_dst;
    if (auto next = route_lookup(dest, now())) {
      refresh(dest);
      if (segment.origin != self_) refresh(segment.origin);
      services_.send_frame(self_, *next, segment.size, std::move(segment));
      return;
    }
    if (segment.origin == self_) {
      buffer(std::move(segment));
      originate_discovery(dest);
      return;
    }
    // Relay without a route: tell upstream nodes the destination is gone.
    services_.drop_data(self_, segment, DropReason::kNoRoute);
    SeqNum seq = 0;
    if (auto it = table_.find(dest); it != table_.end()) seq = it->second.dest_seq;
    send_rerr({{dest, seq}});
  }

  /// Broadcasts a fresh RREQ unless a discovery for dest is already running.
  void originate_discovery(NodeId dest) {
    if (dest == self_) return;
    if (route_lookup(dest, now())) return;
    auto& p = pending_[dest];
    if (p.attempts > 0) return;
    ++own_seq_;
    p.attempts = 1;
    p.wait = config_.base_reply_wait();
    broadcast_rreq(dest);
    arm_retry(dest);
  }

  /// Reply-wait expiry: retry with a doubled wait, or give up.
  void retry_discovery(NodeId dest) {
    auto it = pending_.find(dest);
    if (it == pending_.end()) return;
    auto& p = it->second;
    if (route_lookup(dest, now())) {
      auto buffered = std::move(p.buffered);
      pending_.erase(it);
      for (auto& seg : buffered) send_data(std::move(seg));
      return;
    }
    if (p.attempts < config_.max_retries) {
      ++p.attempts;
      p.wait *= 2.0;
      broadcast_rreq(dest);
      arm_retry(dest);
      return;
    }
    auto buffered = std::move(p.buffered);
    pending_.erase(it);
    for (const auto& seg : buffered) services_.drop_data(self_, seg, DropReason::kUnreachable);
  }

  void handle_rreq(const Rreq& rreq, NodeId prev_hop) {
    if (rreq.origin == self_) return;
    const auto key = std::make_pair(rreq.origin, rreq.rreq_id);
    if (auto it = seen_.find(key); it != seen_.end() && it->second > now()) {
      ++duplicate_rreqs_;
      return;
    }
    if (seen_.size() > 4096) std::erase_if(seen_, [&](const auto& kv) { return kv.second <= now(); });
    seen_[key] = now() + config_.seen_rreq_lifetime();

    update_route(rreq.origin, prev_hop, rreq.hop_count, rreq.origin_seq, true);

    if (rreq.dest == self_) {
      if (rreq.dest_seq_known) own_seq_ = std::max(own_seq_, *rreq.dest_seq_known);
      Rrep rrep{self_, own_seq_, rreq.origin, 0};
      services_.send_frame(self_, prev_hop, config_.rrep_size, rrep);
      return;
    }
    auto it = table_.find(rreq.dest);
    if (it != table_.end() && it->second.usable(now()) && it->second.seq_known &&
        (!rreq.dest_seq_known || it->second.dest_seq > *rreq.dest_seq_known)) {
      it->second.precursors.insert(prev_hop);
      Rrep rrep{rreq.dest, it->second.dest_seq, rreq.origin, it->second.hop_count};
      services_.send_frame(self_, prev_hop, config_.rrep_size, rrep);
      return;
    }
    if (rreq.ttl - 1 <= 0) return;
    Rreq fwd = rreq;
    fwd.ttl -= 1;
    fwd.hop_count += 1;
    ++rreq_broadcasts_;
    services_.send_frame(self_, kBroadcast, config_.rreq_size, fwd);
  }

  void handle_rrep(const Rrep& rrep, NodeId prev_hop) {
    const std::uint32_t hops = rrep.hop_count + 1;
    update_route(rrep.dest, prev_hop, hops, rrep.dest_seq, true);
    if (rrep.origin == self_) {
      services_.route_discovered(self_, rrep.dest, prev_hop, hops);
      auto it = pending_.find(rrep.dest);
      if (it == pending_.end()) return;
      scheduler().cancel(it->second.timer);
      auto buffered = std::move(it->second.buffered);
      pending_.erase(it);
      for (auto& seg : buffered) send_data(std::move(seg));
      return;
    }
    auto rev = table_.find(rrep.origin);
    if (rev == table_.end() || !rev->second.usable(now())) {
      services_.drop_control(self_, TrafficClass::kRrep, DropReason::kNoReverseRoute);
      return;
    }
    table_[rrep.dest].precursors.insert(rev->second.next_hop);
    Rrep fwd = rrep;
    fwd.hop_count = hops;
    services_.send_frame(self_, rev->second.next_hop, config_.rrep_size, fwd);
  }

  void handle_rerr(const Rerr& rerr, NodeId from) {
    std::vector<std::pair<NodeId, SeqNum>> propagate;
    for (const auto& [dest, seq] : rerr.unreachable) {
      auto it = table_.find(dest);
      if (it == table_.end() || !it->second.valid || it->second.next_hop != from) continue;
      it->second.valid = false;
      it->second.dest_seq = std::max(it->second.dest_seq, seq);
      services_.table_changed(self_, dest);
      if (!it->second.precursors.empty()) propagate.emplace_back(dest, it->second.dest_seq);
      it->second.precursors.clear();
    }
    if (!propagate.empty()) send_rerr(std::move(propagate));
  }

  /// Invalidates every route through the dead neighbor; one RERR lists the
  /// ones other nodes were using.
  void handle_link_failure(NodeId dead) {
    std::vector<std::pair<NodeId, SeqNum>> lost;
    for (auto& [dest, e] : table_) {
      if (!e.valid || e.next_hop != dead) continue;
      e.valid = false;
      ++e.dest_seq;
      services_.table_changed(self_, dest);
      if (!e.precursors.empty()) lost.emplace_back(dest, e.dest_seq);
      e.precursors.clear();
    }
    if (!lost.empty()) send_rerr(std::move(lost));
  }

  void link_failed(const NetFrame& frame) override {
    handle_link_failure(frame.dst);
    if (const auto* seg = std::get_if<DataSegment>(&frame.payload)) {
      if (seg->origin == self_) {
        // Source: rediscover and resend.
        buffer(*seg);
        originate_discovery(seg->final_dst);
      } else {
        services_.drop_data(self_, *seg, DropReason::kLinkBroken);
      }
    } else {
      services_.drop_control(self_, classify(frame.payload), DropReason::kLinkBroken);
    }
  }

 protected:
  void handle_control(const NetFrame& frame) override {
    if (const auto* rreq = std::get_if<Rreq>(&frame.payload)) {
      handle_rreq(*rreq, frame.src);
    } else if (const auto* rrep = std::get_if<Rrep>(&frame.payload)) {
      handle_rrep(*rrep, frame.src);
    } else if (const auto* rerr = std::get_if<Rerr>(&frame.payload)) {
      handle_rerr(*rerr, frame.src);
    }
  }

  void note_forwarding(const DataSegment& segment, NodeId prev_hop) override {
    if (auto it = table_.find(segment.final_dst); it != table_.end() && it->second.usable(now())) {
      it->second.precursors.insert(prev_hop);
    }
  }

  bool uses_next_hop(NodeId neighbor) const override {
    return std::any_of(table_.begin(), table_.end(), [&](const auto& kv) {
      return kv.second.next_hop == neighbor && kv.second.usable(now());
    });
  }

  void neighbor_lost(NodeId neighbor) override { handle_link_failure(neighbor); }

 private:
  void broadcast_rreq(NodeId dest) {
    Rreq rreq;
    rreq.origin = self_;
    rreq.origin_seq = own_seq_;
    rreq.dest = dest;
    if (auto it = table_.find(dest); it != table_.end() && it->second.seq_known) {
      rreq.dest_seq_known = it->second.dest_seq;
    }
    rreq.rreq_id = next_rreq_id_++;
    rreq.hop_count = 0;
    rreq.ttl = config_.initial_ttl;
    seen_[{self_, rreq.rreq_id}] = now() + config_.seen_rreq_lifetime();
    ++rreq_broadcasts_;
    services_.send_frame(self_, kBroadcast, config_.rreq_size, rreq);
  }

  void arm_retry(NodeId dest) {
    auto& p = pending_[dest];
    p.timer = scheduler().schedule_in(p.wait, EventKind::kTimer, self_, [this, dest] { retry_discovery(dest); });
  }

  void buffer(DataSegment segment) {
    auto& p = pending_[segment.final_dst];
    if (p.buffered.size() >= config_.max_buffered) {
      services_.drop_data(self_, p.buffered.front(), DropReason::kBufferOverflow);
      p.buffered.pop_front();
    }
    p.buffered.push_back(std::move(segment));
  }

  void refresh(NodeId dest) {
    auto it = table_.find(dest);
    if (it != table_.end() && it->second.valid) {
      it->second.expires_at = std::max(it->second.expires_at, now() + config_.active_route_timeout);
    }
  }

  /// Installs or refreshes a route: newer sequence wins, equal sequence
  /// prefers fewer hops; stored sequence numbers never decrease.
  void update_route(NodeId dest, NodeId next_hop, std::uint32_t hops, SeqNum seq, bool seq_known) {
    if (dest == self_) return;
    const SimTime expiry = now() + config_.active_route_timeout;
    auto it = table_.find(dest);
    bool install = false;
    if (it == table_.end()) {
      install = true;
    } else {
      const auto& e = it->second;
      if (!e.seq_known) {
        install = true;
      } else if (seq > e.dest_seq) {
        install = true;
      } else if (seq == e.dest_seq) {
        install = !e.usable(now()) || hops < e.hop_count;
      }
    }
    if (install) {
      auto& e = table_[dest];
      const bool changed = !e.valid || e.next_hop != next_hop || e.hop_count != hops || e.dest_seq != seq;
      e.dest = dest;
      if (e.next_hop != next_hop) e.precursors.clear();
      e.next_hop = next_hop;
      e.hop_count = hops;
      e.dest_seq = seq;
      e.seq_known = seq_known;
      e.valid = true;
      e.expires_at = std::max(e.usable(now()) ? e.expires_at : 0.0, expiry);
      if (changed) services_.table_changed(self_, dest);
      watch_neighbor(next_hop);
    } else if (it->second.usable(now()) && it->second.next_hop == next_hop && seq == it->second.dest_seq) {
      it->second.expires_at = std::max(it->second.expires_at, expiry);
    }
  }

  void send_rerr(std::vector<std::pair<NodeId, SeqNum>> unreachable) {
    Rerr rerr{std::move(unreachable)};
    const auto size = config_.rerr_header_size + config_.rerr_entry_size * static_cast<std::uint32_t>(rerr.unreachable.size());
    services_.send_frame(self_, kBroadcast, size, std::move(rerr));
  }

  AodvConfig config_;
  SeqNum own_seq_ = 0;
  std::uint32_t next_rreq_id_ = 0;
  std::map<NodeId, AodvRouteEntry> table_;
  std::map<std::pair<NodeId, std::uint32_t>, SimTime> seen_;
  std::map<NodeId, Pending> pending_;
  std::uint64_t duplicate_rreqs_ = 0;
  std::uint64_t rreq_broadcasts_ = 0;
};

}  // namespace vanetsim
