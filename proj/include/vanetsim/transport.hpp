#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vanetsim/engine.hpp"
#include "vanetsim/packets.hpp"

namespace vanetsim {

struct FlowConfig {
  NodeId src = 0;
  NodeId sink = 0;
  SimTime start_t = 0.0;
  std::uint32_t data_packet_size = 512;
  std::uint32_t ack_size = 210;
  std::int64_t max_packets = 2048;
  /// Seconds between packets handed over by the data source; 0 makes the
  /// source greedy (everything available at start).
  double send_interval = 0.0;

  void validate() const {
    if (src == sink) throw std::invalid_argument("flow source and sink must differ");
    if (!(data_packet_size > ack_size) || ack_size == 0) {
      throw std::invalid_argument("flow sizes must satisfy data_packet_size > ack_size > 0");
    }
    if (max_packets <= 0) throw std::invalid_argument("flow max_packets must be positive");
    if (send_interval < 0.0) throw std::invalid_argument("flow send_interval must be non-negative");
    if (start_t < 0.0) throw std::invalid_argument("flow start must be non-negative");
  }
};

struct TcpConfig {
  double initial_ssthresh = 32.0;
  double initial_rto = 1.0;
  double min_rto = 0.2;
  double max_rto = 8.0;
};

struct CwndSample {
  SimTime t;
  double cwnd;
};

/// Timeout-only (Tahoe without fast retransmit) sender. Every sequence in
/// [acked, next_new) is either in flight or waiting for retransmission.
class TcpSender {
 public:
  using Emit = std::function<void(DataSegment)>;

  TcpSender(int flow_id, FlowConfig flow, TcpConfig tcp, Scheduler& scheduler, Emit emit)
      : flow_id_(flow_id), flow_(flow), tcp_(tcp), scheduler_(scheduler), emit_(std::move(emit)) {
    flow_.validate();
    cwnd_ = 1.0;
    ssthresh_ = tcp_.initial_ssthresh;
    rto_ = tcp_.initial_rto;
  }

  void start() {
    scheduler_.schedule(flow_.start_t, EventKind::kAppSend, flow_.src, [this] {
      started_ = true;
      record_cwnd();
      if (flow_.send_interval <= 0.0) {
        available_ = flow_.max_packets;
      } else {
        app_tick();
      }
      try_send();
    });
  }

  int flow_id() const { return flow_id_; }
  const FlowConfig& flow() const { return flow_; }
  double cwnd() const { return cwnd_; }
  double ssthresh() const { return ssthresh_; }
  double rto() const { return rto_; }
  std::int64_t highest_acked() const { return highest_acked_; }
  std::int64_t next_new() const { return next_new_; }
  std::int64_t acked_count() const { return highest_acked_ + 1; }
  std::int64_t in_flight() const { return in_flight_; }
  std::int64_t pending_retransmit() const { return static_cast<std::int64_t>(outstanding_.size()) - in_flight_; }
  std::int64_t unsent() const { return flow_.max_packets - next_new_; }
  std::uint64_t duplicate_acks() const { return duplicate_acks_; }
  std::uint64_t timeouts() const { return timeouts_; }
  bool complete() const { return acked_count() == flow_.max_packets; }
  const std::vector<CwndSample>& cwnd_series() const { return cwnd_series_; }

  bool conservation_holds() const {
    return acked_count() + in_flight() + pending_retransmit() + unsent() == flow_.max_packets;
  }
  bool window_holds() const { return in_flight_ <= static_cast<std::int64_t>(std::floor(cwnd_)); }

  void on_ack(std::int64_t acked_seq) {
    if (acked_seq <= highest_acked_) {
      ++duplicate_acks_;
      return;
    }
    acked_seq = std::min(acked_seq, next_new_ - 1);
    bool sample_ok = false;
    SimTime sample = 0.0;
    if (auto it = outstanding_.find(acked_seq); it != outstanding_.end() && !it->second.retransmitted) {
      sample_ok = true;
      sample = scheduler_.now() - it->second.sent_at;
    }
    for (auto it = outstanding_.begin(); it != outstanding_.end() && it->first <= acked_seq;) {
      if (it->second.in_flight) --in_flight_;
      it = outstanding_.erase(it);
    }
    highest_acked_ = acked_seq;

    if (cwnd_ < ssthresh_) {
      cwnd_ += 1.0;
    } else {
      cwnd_ += 1.0 / cwnd_;
    }
    record_cwnd();

    if (sample_ok) update_rtt(sample);
    rto_ = computed_rto();
    scheduler_.cancel(rtx_timer_);
    if (!outstanding_.empty()) arm_timer();
    try_send();
  }

  void on_timeout() {
    if (outstanding_.empty()) return;
    ++timeouts_;
    ssthresh_ = std::max(std::floor(cwnd_ / 2.0), 2.0);
    cwnd_ = 1.0;
    record_cwnd();
    for (auto& [seq, info] : outstanding_) info.in_flight = false;
    in_flight_ = 0;
    rto_ = std::min(rto_ * 2.0, tcp_.max_rto);
    try_send();
    if (!scheduler_.is_pending(rtx_timer_) && !outstanding_.empty()) arm_timer();
  }

 private:
  struct Outstanding {
    SimTime sent_at = 0.0;
    bool retransmitted = false;
    bool in_flight = false;
  };

  void app_tick() {
    if (available_ >= flow_.max_packets) return;
    ++available_;
    if (available_ < flow_.max_packets) {
      scheduler_.schedule_in(flow_.send_interval, EventKind::kAppSend, flow_.src, [this] {
        app_tick();
        try_send();
      });
    }
  }

  void try_send() {
    if (!started_) return;
    const auto window = static_cast<std::int64_t>(std::floor(cwnd_));
    while (in_flight_ < window) {
      auto lost = std::find_if(outstanding_.begin(), outstanding_.end(), [](const auto& kv) { return !kv.second.in_flight; });
      if (lost != outstanding_.end()) {
        lost->second.in_flight = true;
        lost->second.retransmitted = true;
        lost->second.sent_at = scheduler_.now();
        ++in_flight_;
        transmit(lost->first);
        continue;
      }
      if (next_new_ >= available_) break;
      const std::int64_t seq = next_new_++;
      outstanding_[seq] = Outstanding{scheduler_.now(), false, true};
      ++in_flight_;
      transmit(seq);
    }
  }

  void transmit(std::int64_t seq) {
    if (!scheduler_.is_pending(rtx_timer_)) arm_timer();
    DataSegment seg;
    seg.flow = flow_id_;
    seg.seq = seq;
    seg.is_ack = false;
    seg.size = flow_.data_packet_size;
    seg.origin = flow_.src;
    seg.final_dst = flow_.sink;
    seg.created_at = scheduler_.now();
    emit_(std::move(seg));
  }

  void arm_timer() {
    rtx_timer_ = scheduler_.schedule_in(rto_, EventKind::kTimer, flow_.src, [this] { on_timeout(); });
  }

  void update_rtt(SimTime sample) {
    if (!have_rtt_) {
      srtt_ = sample;
      rttvar_ = sample / 2.0;
      have_rtt_ = true;
    } else {
      rttvar_ = 0.75 * rttvar_ + 0.25 * std::abs(srtt_ - sample);
      srtt_ = 0.875 * srtt_ + 0.125 * sample;
    }
  }

  double computed_rto() const {
    const double base = have_rtt_ ? srtt_ + 4.0 * rttvar_ : tcp_.initial_rto;
    return std::clamp(base, tcp_.min_rto, tcp_.max_rto);
  }

  void record_cwnd() {
    const SimTime t = scheduler_.now();
    if (!cwnd_series_.empty() && cwnd_series_.back().t == t) {
      cwnd_series_.back().cwnd = cwnd_;
    } else {
      cwnd_series_.push_back({t, cwnd_});
    }
  }

  int flow_id_;
  FlowConfig flow_;
  TcpConfig tcp_;
  Scheduler& scheduler_;
  Emit emit_;
  bool started_ = false;
  double cwnd_;
  double ssthresh_;
  double rto_;
  double srtt_ = 0.0;
  double rttvar_ = 0.0;
  bool have_rtt_ = false;
  std::int64_t available_ = 0;
  std::int64_t next_new_ = 0;
  std::int64_t highest_acked_ = -1;
  std::int64_t in_flight_ = 0;
  std::map<std::int64_t, Outstanding> outstanding_;
  EventHandle rtx_timer_;
  std::uint64_t duplicate_acks_ = 0;
  std::uint64_t timeouts_ = 0;
  std::vector<CwndSample> cwnd_series_;
};

/// Receiving end: answers every data segment with a cumulative ACK.
class TcpSink {
 public:
  using Emit = std::function<void(DataSegment)>;

  TcpSink(int flow_id, FlowConfig flow, Scheduler& scheduler, Emit emit)
      : flow_id_(flow_id), flow_(flow), scheduler_(scheduler), emit_(std::move(emit)),
        received_(static_cast<std::size_t>(flow.max_packets), false) {}

  /// Returns the cumulative ACK value sent back.
  std::int64_t sink_receive(std::int64_t data_seq) {
    ++segments_received_;
    if (data_seq >= 0 && data_seq < flow_.max_packets) {
      if (received_[static_cast<std::size_t>(data_seq)]) {
        ++duplicates_;
      } else {
        received_[static_cast<std::size_t>(data_seq)] = true;
      }
    }
    while (cumulative_ + 1 < flow_.max_packets && received_[static_cast<std::size_t>(cumulative_ + 1)]) ++cumulative_;
    DataSegment ack;
    ack.flow = flow_id_;
    ack.seq = cumulative_;
    ack.is_ack = true;
    ack.size = flow_.ack_size;
    ack.origin = flow_.sink;
    ack.final_dst = flow_.src;
    ack.created_at = scheduler_.now();
    emit_(std::move(ack));
    return cumulative_;
  }

  std::int64_t cumulative() const { return cumulative_; }
  /// Packets handed to the application, in order and exactly once.
  std::int64_t delivered_in_order() const { return cumulative_ + 1; }
  std::uint64_t duplicates() const { return duplicates_; }
  std::uint64_t segments_received() const { return segments_received_; }

 private:
  int flow_id_;
  FlowConfig flow_;
  Scheduler& scheduler_;
  Emit emit_;
  std::vector<bool> received_;
  std::int64_t cumulative_ = -1;
  std::uint64_t duplicates_ = 0;
  std::uint64_t segments_received_ = 0;
};

}  // namespace vanetsim
