// vanetsim: run scenarios, compare protocols, parse mobility traces.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vanetsim/scenario.hpp"

namespace fs = std::filesystem;
using namespace vanetsim;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kIo = 2;

struct Overrides {
  std::string scenario;
  std::string protocol;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<double> range;
  std::optional<double> window;
  std::string out;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--scenario", o.scenario, "builtin name (long-distance, short-distance) or scenario file")->required();
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--duration", o.duration, "simulated seconds");
  cmd->add_option("--range", o.range, "radio range in meters");
  cmd->add_option("--window", o.window, "metric window in seconds");
}

ScenarioConfig configure(const Overrides& o, std::optional<Protocol> protocol) {
  ScenarioConfig c = resolve_scenario(o.scenario, protocol);
  if (o.seed) c.seed = *o.seed;
  if (o.duration) c.duration = *o.duration;
  if (o.range) c.radio.range = *o.range;
  if (o.window) c.metric_window = *o.window;
  c.validate();
  return c;
}

RunReport run_timed(const ScenarioConfig& c, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport rep = run(c, out);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::fprintf(stderr, "%s/%s: %llu events in %.2f s -> %s\n", c.name.c_str(), to_string(c.protocol),
               static_cast<unsigned long long>(rep.events), secs, out.string().c_str());
  return rep;
}

int cmd_run(const Overrides& o) {
  std::optional<Protocol> protocol;
  if (!o.protocol.empty()) protocol = parse_protocol(o.protocol);
  const ScenarioConfig c = configure(o, protocol);
  const fs::path out = o.out.empty() ? fs::path("out") / (c.name + "-" + to_string(c.protocol)) : fs::path(o.out);
  const RunReport rep = run_timed(c, out);
  std::cout << format_report(rep);
  return kOk;
}

int cmd_compare(const Overrides& o, const std::string& dir_a, const std::string& dir_b) {
  Comparison cmp;
  fs::path out_dir;
  if (!dir_a.empty() || !dir_b.empty()) {
    if (dir_a.empty() || dir_b.empty()) throw std::invalid_argument("compare needs two output directories");
    cmp = compare(load_report(dir_a), load_report(dir_b));
    out_dir = o.out;
  } else {
    if (o.scenario.empty()) throw std::invalid_argument("compare needs --scenario or two output directories");
    const ScenarioConfig aodv = configure(o, Protocol::kAodv);
    const ScenarioConfig dsdv = configure(o, Protocol::kDsdv);
    out_dir = o.out.empty() ? fs::path("out") / (aodv.name + "-compare") : fs::path(o.out);
    auto fa = std::async(std::launch::async, [&] { return run_timed(aodv, out_dir / "aodv"); });
    auto fb = std::async(std::launch::async, [&] { return run_timed(dsdv, out_dir / "dsdv"); });
    const RunReport ra = fa.get();
    const RunReport rb = fb.get();
    cmp = compare(ra, rb);
  }
  const std::string text = format_comparison(cmp);
  std::cout << text;
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError(out_dir, "cannot create output directory: " + ec.message());
    detail::write_text(out_dir / "comparison.txt", text);
  }
  return kOk;
}

int cmd_trace_parse(const std::string& file) {
  const ParsedTrace t = parse_mobility_trace(read_file(file));
  std::cout << "records: " << t.records.size() << "\nskipped: " << t.skipped << '\n';
  for (const auto& r : t.records) {
    std::printf("%.5f %u %.2f %.2f %.2f %.2f %.2f\n", r.time, r.node, r.position.x, r.position.y, r.destination.x,
                r.destination.y, r.speed);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event VANET simulator (AODV / DSDV)"};
  app.require_subcommand(1);

  Overrides run_o;
  auto* run_cmd = app.add_subcommand("run", "run one scenario and write its outputs");
  add_common(run_cmd, run_o);
  run_cmd->add_option("--protocol", run_o.protocol, "aodv or dsdv")->check(CLI::IsMember({"aodv", "dsdv", "AODV", "DSDV"}));
  run_cmd->add_option("--out", run_o.out, "output directory");

  Overrides cmp_o;
  std::string dir_a;
  std::string dir_b;
  auto* cmp_cmd = app.add_subcommand("compare", "run a scenario under both protocols, or compare two output directories");
  cmp_cmd->add_option("--scenario", cmp_o.scenario, "builtin name or scenario file");
  cmp_cmd->add_option("--seed", cmp_o.seed, "random seed");
  cmp_cmd->add_option("--duration", cmp_o.duration, "simulated seconds");
  cmp_cmd->add_option("--range", cmp_o.range, "radio range in meters");
  cmp_cmd->add_option("--window", cmp_o.window, "metric window in seconds");
  cmp_cmd->add_option("--out", cmp_o.out, "output directory");
  cmp_cmd->add_option("dir_a", dir_a, "first run directory");
  cmp_cmd->add_option("dir_b", dir_b, "second run directory");

  std::string trace_file;
  auto* parse_cmd = app.add_subcommand("trace-parse", "parse the M-lines of a trace file");
  parse_cmd->add_option("file", trace_file, "trace file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run_cmd) return cmd_run(run_o);
    if (*cmp_cmd) return cmd_compare(cmp_o, dir_a, dir_b);
    if (*parse_cmd) return cmd_trace_parse(trace_file);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const TraceParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}
