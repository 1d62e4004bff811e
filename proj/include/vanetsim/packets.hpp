#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vanetsim/engine.hpp"
#include "vanetsim/radio.hpp"

namespace vanetsim {

using SeqNum = std::uint32_t;

/// Transport segment carried hop by hop. `trail` lists every node that has
/// handled the segment so far, starting with its origin.
struct DataSegment {
  int flow = 0;
  std::int64_t seq = 0;  // data sequence, or cumulative ack value for ACKs
  bool is_ack = false;
  std::uint32_t size = 0;
  NodeId origin = 0;
  NodeId final_dst = 0;
  SimTime created_at = 0.0;
  std::uint64_t uid = 0;
  int ttl = 64;
  std::vector<NodeId> trail;
};

struct Rreq {
  NodeId origin = 0;
  SeqNum origin_seq = 0;
  NodeId dest = 0;
  std::optional<SeqNum> dest_seq_known;
  std::uint32_t rreq_id = 0;
  std::uint32_t hop_count = 0;
  int ttl = 0;
};

struct Rrep {
  NodeId dest = 0;
  SeqNum dest_seq = 0;
  NodeId origin = 0;
  std::uint32_t hop_count = 0;
};

struct Rerr {
  std::vector<std::pair<NodeId, SeqNum>> unreachable;
};

inline constexpr std::uint32_t kInfiniteMetric = std::numeric_limits<std::uint32_t>::max();

struct DsdvRow {
  NodeId dest = 0;
  std::uint32_t metric = 0;
  SeqNum dest_seq = 0;

  friend bool operator==(const DsdvRow&, const DsdvRow&) = default;
};

struct DsdvUpdate {
  enum class Kind { kFullDump, kIncremental };
  NodeId sender = 0;
  SeqNum sender_seq = 0;
  Kind kind = Kind::kFullDump;
  std::vector<DsdvRow> rows;
};

using Payload = std::variant<DataSegment, Rreq, Rrep, Rerr, DsdvUpdate>;
using NetFrame = Frame<Payload>;

enum class TrafficClass { kData, kAck, kRreq, kRrep, kRerr, kDsdvUpdate };

inline const char* to_string(TrafficClass c) {
  switch (c) {
    case TrafficClass::kData: return "data";
    case TrafficClass::kAck: return "ack";
    case TrafficClass::kRreq: return "RREQ";
    case TrafficClass::kRrep: return "RREP";
    case TrafficClass::kRerr: return "RERR";
    case TrafficClass::kDsdvUpdate: return "DSDV-update";
  }
  return "unknown";
}

inline TrafficClass classify(const Payload& p) {
  struct Visitor {
    TrafficClass operator()(const DataSegment& s) const { return s.is_ack ? TrafficClass::kAck : TrafficClass::kData; }
    TrafficClass operator()(const Rreq&) const { return TrafficClass::kRreq; }
    TrafficClass operator()(const Rrep&) const { return TrafficClass::kRrep; }
    TrafficClass operator()(const Rerr&) const { return TrafficClass::kRerr; }
    TrafficClass operator()(const DsdvUpdate&) const { return TrafficClass::kDsdvUpdate; }
  };
  return std::visit(Visitor{}, p);
}

}  // namespace vanetsim
