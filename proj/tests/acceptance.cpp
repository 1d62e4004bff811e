// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "vanetsim/scenario.hpp"

using namespace vanetsim;
using namespace vanetsim::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "violated: " + what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

int failures = 0;

void report(int id, const char* name, const Outcome& o) {
  std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt2(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

struct Run {
  std::string scenario;
  Protocol protocol = Protocol::kAodv;
  std::unique_ptr<Simulation> sim;
  RunReport report;
  double seconds = 0.0;
  fs::path dir;
};

Run perform(const std::string& scenario, Protocol p, const fs::path& dir) {
  Run r;
  r.scenario = scenario;
  r.protocol = p;
  r.dir = dir;
  const auto t0 = std::chrono::steady_clock::now();
  r.sim = std::make_unique<Simulation>(builtin_scenario(scenario, p));
  const auto events = r.sim->run();
  r.report = write_outputs(*r.sim, events, dir);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string slurp(const fs::path& p) { return read_file(p); }

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<SimTime> first_delivery(const Simulation& sim, int flow, SimTime after = -1.0) {
  for (const auto& d : sim.deliveries()) {
    if (d.flow == flow && d.t > after) return d.t;
  }
  return std::nullopt;
}

const Delivery* first_delivery_record(const Simulation& sim, int flow) {
  for (const auto& d : sim.deliveries()) {
    if (d.flow == flow) return &d;
  }
  return nullptr;
}

int flow_index(const ScenarioConfig& c, NodeId src, NodeId sink) {
  for (std::size_t i = 0; i < c.flows.size(); ++i) {
    if (c.flows[i].src == src && c.flows[i].sink == sink) return static_cast<int>(i);
  }
  return -1;
}

const char* const kGridSample[] = {
    "M 0.00000 2 (550.00, 290.00, 0.00), (550.00, 290.00), 0.00",
    "M 0.00000 17 (550.00, 430.00, 0.00), (550.00, 430.00), 0.00",
    "M 0.00000 32 (550.00, 570.00, 0.00), (550.00, 570.00), 0.00",
    "M 0.00000 47 (550.00, 710.00, 0.00), (550.00, 710.00), 0.00",
    "M 0.00000 62 (550.00, 850.00, 0.00), (550.00, 850.00), 0.00",
    "M 0.00000 77 (550.00, 990.00, 0.00), (550.00, 990.00), 0.00",
    "M 0.00000 92 (550.00, 1130.00, 0.00), (550.00, 1130.00), 0.00",
    "M 0.00000 3 (755.00, 360.00, 0.00), (755.00, 360.00), 0.00",
    "M 0.00000 18 (755.00, 520.00, 0.00), (755.00, 520.00), 0.00",
    "M 0.00000 33 (755.00, 680.00, 0.00), (755.00, 680.00), 0.00",
    "M 0.00000 48 (755.00, 840.00, 0.00), (755.00, 840.00), 0.00",
    "M 0.00000 63 (755.00, 1000.00, 0.00), (755.00, 1000.00), 0.00",
    "M 0.00000 78 (755.00, 1160.00, 0.00), (755.00, 1160.00), 0.00",
    "M 0.00000 93 (755.00, 1320.00, 0.00), (755.00, 1320.00), 0.00",
    "M 0.00000 4 (960.00, 320.00, 0.00), (960.00, 320.00), 0.00",
    "M 0.00000 19 (960.00, 490.00, 0.00), (960.00, 490.00), 0.00",
    "M 0.00000 34 (960.00, 660.00, 0.00), (960.00, 660.00), 0.00",
    "M 0.00000 49 (960.00, 830.00, 0.00), (960.00, 830.00), 0.00",
    "M 0.00000 64 (960.00, 1000.00, 0.00), (960.00, 1000.00), 0.00",
    "M 0.00000 79 (960.00, 1170.00, 0.00), (960.00, 1170.00), 0.00",
    "M 0.00000 94 (960.00, 1340.00, 0.00), (960.00, 1340.00), 0.00",
    "M 0.00000 5 (1150.00, 320.00, 0.00), (1150.00, 320.00), 0.00",
    "M 0.00000 20 (1150.00, 440.00, 0.00), (1150.00, 440.00), 0.00",
    "M 0.00000 35 (1150.00, 560.00, 0.00), (1150.00, 560.00), 0.00",
    "M 0.00000 50 (1150.00, 680.00, 0.00), (1150.00, 680.00), 0.00",
    "M 0.00000 65 (1150.00, 800.00, 0.00), (1150.00, 800.00), 0.00",
    "M 0.00000 80 (1150.00, 920.00, 0.00), (1150.00, 920.00), 0.00",
};

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "vanetsim_acceptance";
  fs::remove_all(root);

  std::map<std::string, Run> runs;
  std::map<std::string, Run> reruns;
  for (const auto& name : builtin_names()) {
    for (Protocol p : {Protocol::kAodv, Protocol::kDsdv}) {
      const std::string key = name + "/" + to_string(p);
      runs[key] = perform(name, p, root / "a" / name / to_string(p));
      reruns[key] = perform(name, p, root / "b" / name / to_string(p));
    }
  }
  const Run& ld_aodv = runs["long-distance/aodv"];
  const Run& ld_dsdv = runs["long-distance/dsdv"];
  const Run& sd_aodv = runs["short-distance/aodv"];
  const Run& sd_dsdv = runs["short-distance/dsdv"];

  {  // 1
    Outcome o;
    double slowest = 0.0;
    std::size_t compared = 0;
    for (const auto& [key, r] : runs) {
      const Run& again = reruns[key];
      const auto fa = files_under(r.dir);
      const auto fb = files_under(again.dir);
      o.check(fa == fb, key + " file sets differ");
      for (const auto& f : fa) {
        ++compared;
        o.check(slurp(r.dir / f) == slurp(again.dir / f), key + " " + f.string() + " differs");
      }
      o.check(r.report.manifest.size() == fa.size(), key + " manifest incomplete");
      slowest = std::max({slowest, r.seconds, again.seconds});
    }
    o.check(slowest < 60.0, "runtime below 60 s");
    o.note(std::to_string(compared) + " files byte-identical across 8 runs, slowest run " + fmt("%.2f s", slowest));
    report(1, "determinism", o);
  }

  {  // 2 and 3 share topologies
    Outcome aodv_o;
    Outcome dsdv_o;
    Rng rng(20240601);
    int aodv_match = 0;
    int dsdv_match = 0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
      const auto nodes = random_topology(rng, 30);
      const auto src = static_cast<NodeId>(rng.next_u64() % nodes.size());
      auto dst = static_cast<NodeId>(rng.next_u64() % nodes.size());
      if (dst == src) dst = (src + 1) % static_cast<NodeId>(nodes.size());
      const auto hops = bfs_hops(nodes, kTopologyRange, src);
      {
        Simulation sim(static_config(nodes, Protocol::kAodv), {false, true, false, nullptr});
        dynamic_cast<AodvAgent&>(sim.agent(src)).originate_discovery(dst);
        sim.run_until(2.0);
        const auto* e = sim.aodv(src)->entry(dst);
        if (e && static_cast<int>(e->hop_count) == hops[dst]) ++aodv_match;
      }
      {
        const auto cfg = static_config(nodes, Protocol::kDsdv);
        Simulation sim(cfg, {false, true, false, nullptr});
        sim.run_until(cfg.dsdv.periodic_interval * (diameter(nodes, kTopologyRange) + 1) + 1.0);
        bool ok = true;
        for (NodeId s = 0; s < nodes.size() && ok; ++s) {
          const auto dist = bfs_hops(nodes, kTopologyRange, s);
          const auto& table = sim.dsdv(s)->table();
          ok = table.size() == nodes.size();
          for (const auto& [d, e] : table) ok = ok && static_cast<int>(e.metric) == dist[d] && e.dest_seq % 2 == 0;
        }
        if (ok) ++dsdv_match;
      }
    }
    aodv_o.check(aodv_match == trials, "every first route equals the BFS distance");
    aodv_o.note(std::to_string(aodv_match) + "/" + std::to_string(trials) + " topologies exact");
    report(2, "AODV shortest-path oracle", aodv_o);
    dsdv_o.check(dsdv_match == trials, "every table converges to BFS distances with even sequences");
    dsdv_o.note(std::to_string(dsdv_match) + "/" + std::to_string(trials) + " topologies exact");
    report(3, "DSDV convergence oracle", dsdv_o);
  }

  {  // 4, 5, 6
    Outcome loop;
    Outcome parity;
    Outcome transport;
    std::uint64_t loop_checks = 0;
    std::uint64_t parity_checks = 0;
    std::uint64_t transport_checks = 0;
    for (const auto& [key, r] : runs) {
      const auto& inv = r.sim->invariants();
      loop.check(inv.loop_violations == 0, key + " loop");
      loop.check(inv.loop_checks > 0, key + " performed loop checks");
      if (r.protocol == Protocol::kDsdv) {
        parity.check(inv.parity_violations == 0, key + " parity");
        parity.check(inv.parity_checks > 0, key + " performed parity checks");
      }
      transport.check(inv.conservation_violations == 0, key + " conservation");
      transport.check(inv.window_violations == 0, key + " window");
      transport.check(inv.transport_checks > 0, key + " performed transport checks");
      loop_checks += inv.loop_checks;
      parity_checks += inv.parity_checks;
      transport_checks += inv.transport_checks;
    }
    loop.note(std::to_string(loop_checks) + " table walks over 4 runs");
    parity.note(std::to_string(parity_checks) + " entry checks over 2 DSDV runs");
    transport.note(std::to_string(transport_checks) + " per-event checks over 4 runs");
    report(4, "loop freedom", loop);
    report(5, "DSDV parity", parity);
    report(6, "transport conservation", transport);
  }

  {  // 7
    Outcome o;
    const std::string trace = slurp(ld_aodv.dir / "trace.txt");
    std::map<NodeId, std::string> initial;
    std::istringstream in(trace);
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("M 0.00000 ", 0) != 0) continue;
      const auto node = static_cast<NodeId>(std::stoul(line.substr(10)));
      initial.emplace(node, line);
    }
    int matched = 0;
    for (const char* expected : kGridSample) {
      const auto node = static_cast<NodeId>(std::stoul(std::string(expected).substr(10)));
      const bool ok = initial.count(node) && initial[node] == expected;
      o.check(ok, std::string("line for node ") + std::to_string(node));
      matched += ok;
    }
    const auto parsed = parse_mobility_trace(trace);
    std::string rewritten;
    for (const auto& r : parsed.records) rewritten += format_mobility_line(r) + '\n';
    std::string original;
    std::istringstream again(trace);
    while (std::getline(again, line)) {
      if (line.rfind("M ", 0) == 0) original += line + '\n';
    }
    o.check(rewritten == original, "write-parse-write round trip");
    const auto& emitted = ld_aodv.sim->mobility_trace();
    bool same = parsed.records.size() == emitted.size();
    for (std::size_t i = 0; same && i < emitted.size(); ++i) {
      const auto& p = parsed.records[i];
      const auto& e = emitted[i];
      same = p.node == e.node && std::abs(p.time - e.time) <= 5e-6 && distance(p.position, e.position) <= 1e-2 &&
             distance(p.destination, e.destination) <= 1e-2 && std::abs(p.speed - e.speed) <= 5e-3;
    }
    o.check(same, "parsed records match emitted records to print precision");
    o.note(std::to_string(matched) + "/27 reference lines byte-identical, " + std::to_string(parsed.records.size()) +
           " M-lines round-tripped");
    report(7, "trace format", o);
  }

  {  // 8
    Outcome o;
    std::vector<PacketRecord> same;
    for (int i = 0; i < 8; ++i) {
      PacketRecord r;
      r.flow = 0;
      r.seq = i;
      r.size = 512;
      r.sent_at = 3.0 + 0.125 * i;
      r.received_at = r.sent_at + 0.0078125;
      same.push_back(r);
    }
    const auto j = jitter_series(same, 0, 1.0, 5.0);
    o.check(same.size() >= 2 && j.points.size() == 1 && j.points[0].value == 0.0, "zero-variance window gives jitter 0");
    double worst = 0.0;
    for (const auto& [key, r] : runs) {
      const auto& cfg = r.sim->config();
      for (std::size_t f = 0; f < cfg.flows.size(); ++f) {
        double bits = 0.0;
        for (const auto& rec : r.sim->records()) {
          if (!rec.hop_level && rec.cls == TrafficClass::kData && rec.flow == static_cast<int>(f) && rec.received_at) {
            bits += rec.size * 8.0;
          }
        }
        const auto tp = throughput_series(r.sim->records(), static_cast<int>(f), cfg.metric_window, cfg.duration);
        const double rel = std::abs(tp.sum() * cfg.metric_window - bits) / std::max(1.0, bits);
        worst = std::max(worst, rel);
      }
      for (std::size_t f = 0; f < cfg.flows.size(); ++f) {
        for (const auto& p : jitter_series(r.sim->records(), static_cast<int>(f), cfg.metric_window, cfg.duration).points) {
          o.check(p.value >= 0.0, key + " jitter non-negative");
        }
      }
    }
    o.check(worst <= 1e-9, "throughput-sum conservation to 1e-9");
    o.note("worst relative throughput-sum error " + fmt("%.3g", worst) + " over 20 flows");
    report(8, "metric identities", o);
  }

  const auto& ld_cfg = ld_aodv.sim->config();
  const SimTime brk = ld_aodv.sim->radio().link_break_time(0, 15, 12.0).value_or(-1.0);
  {  // 9
    Outcome o;
    const double closed = 12.0 + (250.0 - 25.94) / 12.97;
    o.check(std::abs(brk - closed) < 1e-6, "break time equals the closed form");
    o.check(std::abs(brk - 29.73) <= 3.0, "within 3 s of 29.73 s");
    o.check(ld_dsdv.sim->radio().link_break_time(0, 15, 12.0) == ld_aodv.sim->radio().link_break_time(0, 15, 12.0),
            "same break under both protocols");
    o.note("0-15 link breaks at " + fmt("%.4f s", brk) + fmt(" (29.73 s reference, delta %.2f s)", brk - 29.73));
    report(9, "long-distance link break", o);
  }

  const int ld_flow = flow_index(ld_cfg, 0, 15);
  {  // 10
    Outcome o;
    const auto aodv_after = first_delivery(*ld_aodv.sim, ld_flow, brk);
    o.check(aodv_after.has_value(), "AODV delivers 0->15 data after the break");
    bool rediscovered = false;
    for (const auto& line : ld_aodv.sim->paths_log()) {
      double t = 0.0;
      unsigned a = 0;
      unsigned b = 0;
      if (std::sscanf(line.c_str(), "%lf route %u->%u", &t, &a, &b) == 3 && t > brk && a == 0 && b == 15) rediscovered = true;
    }
    o.check(rediscovered, "AODV rediscovers a 0->15 route after the break");
    const double interval = ld_cfg.dsdv.periodic_interval;
    const auto dsdv_after = first_delivery(*ld_dsdv.sim, ld_flow, brk);
    o.check(!dsdv_after || *dsdv_after >= brk + interval, "DSDV silent for one periodic interval after the break");
    const auto tp_d = throughput_series(ld_dsdv.sim->records(), ld_flow, ld_cfg.metric_window, ld_cfg.duration);
    const auto tp_a = throughput_series(ld_aodv.sim->records(), ld_flow, ld_cfg.metric_window, ld_cfg.duration);
    bool flat = true;
    int aodv_nonzero = 0;
    for (const auto& p : tp_d.points) {
      if (p.t - ld_cfg.metric_window >= 35.0 - 1e-9 && p.value != 0.0) flat = false;
    }
    for (const auto& p : tp_a.points) {
      if (p.t - ld_cfg.metric_window >= 35.0 - 1e-9 && p.value != 0.0) ++aodv_nonzero;
    }
    o.check(flat, "DSDV throughput zero over [35, 600]");
    o.check(aodv_nonzero >= 5, "AODV throughput nonzero in at least 5 windows");
    const auto last_dsdv = [&] {
      std::optional<SimTime> t;
      for (const auto& d : ld_dsdv.sim->deliveries()) {
        if (d.flow == ld_flow) t = d.t;
      }
      return t;
    }();
    o.note(aodv_after ? "AODV first post-break delivery " + fmt("%.3f s", *aodv_after) : "AODV none after break");
    o.note(last_dsdv ? "DSDV last delivery " + fmt("%.3f s", *last_dsdv) : "DSDV never delivered");
    o.note("AODV nonzero windows in [35, 600]: " + std::to_string(aodv_nonzero));
    report(10, "long-distance post-break behavior", o);
  }

  {  // 11
    Outcome o;
    const auto& a = ld_aodv.report.flows[static_cast<std::size_t>(ld_flow)].summary;
    const auto& d = ld_dsdv.report.flows[static_cast<std::size_t>(ld_flow)].summary;
    o.check(a.max_jitter > d.max_jitter && a.max_jitter >= 10.0 * d.max_jitter, "jitter(DSDV) 10x below jitter(AODV)");
    o.check(a.max_delay > d.max_delay && a.max_delay >= 10.0 * d.max_delay, "delay(DSDV) 10x below delay(AODV)");
    o.note(fmt2("max jitter AODV %.6f s vs DSDV %.6f s", a.max_jitter, d.max_jitter));
    o.note(fmt2("max delay AODV %.6f s vs DSDV %.6f s", a.max_delay, d.max_delay));
    report(11, "long-distance metric ordering", o);
  }

  const auto& sd_cfg = sd_dsdv.sim->config();
  const int sd_flow = flow_index(sd_cfg, 1, 25);
  {  // 12
    Outcome o;
    const Delivery* first = first_delivery_record(*sd_dsdv.sim, sd_flow);
    o.check(first != nullptr, "DSDV delivers 1->25 data");
    if (first) {
      o.check(std::abs(first->t - 153.0) <= 30.0, "first delivery within 153 +- 30 s");
      bool stationary = true;
      for (std::size_t i = 1; i < first->trail.size(); ++i) {
        const NodeId n = first->trail[i];
        const auto& legs = sd_dsdv.sim->mobility().legs(n);
        stationary = stationary && !sd_cfg.is_scripted(n) &&
                     std::all_of(legs.begin(), legs.end(), [](const auto& l) { return l.speed == 0.0; });
      }
      o.check(stationary, "relays are stationary grid nodes");
      std::string trail;
      for (NodeId n : first->trail) trail += (trail.empty() ? "" : "-") + std::to_string(n);
      o.note("first delivery " + fmt("%.3f s", first->t) + " via " + trail);
    }
    report(12, "short-distance first route", o);
  }

  {  // 13
    Outcome o;
    const auto d_first = first_delivery(*sd_dsdv.sim, sd_flow);
    const auto a_first = first_delivery(*sd_aodv.sim, sd_flow);
    o.check(d_first && a_first && *d_first <= *a_first, "DSDV first delivery precedes AODV's");
    const NodeId sink = sd_cfg.flows[static_cast<std::size_t>(sd_flow)].sink;
    const auto bw_d = destination_bandwidth_series(sd_dsdv.sim->records(), sink, sd_cfg.metric_window, sd_cfg.duration);
    const auto bw_a = destination_bandwidth_series(sd_aodv.sim->records(), sink, sd_cfg.metric_window, sd_cfg.duration);
    const double cum_d = bw_d.sum() * sd_cfg.metric_window;
    const double cum_a = bw_a.sum() * sd_cfg.metric_window;
    o.check(cum_d > cum_a, "cumulative bandwidth at the sink: DSDV above AODV");
    std::optional<SimTime> aodv_rise;
    for (const auto& p : bw_a.points) {
      if (p.value > 0.0) {
        aodv_rise = p.t - sd_cfg.metric_window;
        break;
      }
    }
    o.check(aodv_rise && d_first && *aodv_rise < *d_first, "AODV bandwidth rises before DSDV's data rise");
    o.note(d_first ? "DSDV first " + fmt("%.3f s", *d_first) : "DSDV never");
    o.note(a_first ? "AODV first " + fmt("%.3f s", *a_first) : "AODV never");
    o.note(fmt2("cumulative sink bits DSDV %.0f vs AODV %.0f", cum_d, cum_a));
    o.note(aodv_rise ? "AODV curve nonzero from " + fmt("%.0f s", *aodv_rise) : "AODV curve flat");
    report(13, "short-distance ordering", o);
  }

  {  // 14
    Outcome o;
    const auto ld = compare(ld_aodv.report, ld_dsdv.report);
    const auto sd = compare(sd_aodv.report, sd_dsdv.report);
    auto verdict = [](const Comparison& c, const std::string& name) -> const Verdict* {
      for (const auto& v : c.verdicts) {
        if (v.name == name) return &v;
      }
      return nullptr;
    };
    const Verdict* item3 = verdict(ld, "reactive-delay-above-proactive");
    const Verdict* item9 = verdict(sd, "short-proactive-throughput-at-least-reactive");
    const Verdict* item10 = verdict(ld, "long-reactive-throughput-at-least-proactive");
    const Verdict* sd_delay = verdict(sd, "reactive-delay-above-proactive");
    o.check(item3 && item3->holds, "reactive delay > proactive delay (long-distance)");
    o.check(item9 && item9->holds, "short-distance proactive throughput >= reactive");
    o.check(item10 && item10->holds, "long-distance reactive throughput >= proactive");
    o.note(std::string("delay ") + (item3 && item3->holds ? "true" : "false"));
    o.note(std::string("short throughput ") + (item9 && item9->holds ? "true" : "false"));
    o.note(std::string("long throughput ") + (item10 && item10->holds ? "true" : "false"));
    o.note(std::string("short-distance delay verdict (informational) ") + (sd_delay && sd_delay->holds ? "true" : "false"));
    report(14, "comparison verdicts", o);
  }

  fs::remove_all(root);
  std::printf("%s: %d of 14 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
