// stagewire: command-line front end for recording, replaying, simulating
// and routing show traffic.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "stagewire/bus.hpp"
#include "stagewire/cue.hpp"
#include "stagewire/error.hpp"
#include "stagewire/osc.hpp"
#include "stagewire/pulse.hpp"
#include "stagewire/show.hpp"
#include "stagewire/sim.hpp"
#include "stagewire/trace.hpp"
#include "stagewire/tuio.hpp"

using namespace stagewire;
using Clock = std::chrono::steady_clock;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Output {
 public:
  explicit Output(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw Error(Errc::WriteFailure, "cannot open " + path + " for writing");
  }

  void write(const std::string& text) {
    out_ << text;
    out_.flush();
    if (!out_) throw Error(Errc::WriteFailure, "write to " + path_ + " failed");
  }

 private:
  std::ofstream out_;
  std::string path_;
};

void announce(const char* cmd, const bus::UdpReceiver& rx) {
  std::fprintf(stderr, "stagewire %s: listening on port %u\n", cmd, static_cast<unsigned>(rx.port()));
  std::fflush(stderr);
}

void print(const std::string& line) {
  std::fwrite(line.data(), 1, line.size(), stdout);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

double ms_since(Clock::time_point start) { return std::chrono::duration<double, std::milli>(Clock::now() - start).count(); }

/// Sleeps until `offset_ms` after `start`, waking early on a stop signal.
bool wait_until(Clock::time_point start, double offset_ms) {
  const auto due = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double, std::milli>(offset_ms));
  while (!g_stop) {
    const auto now = Clock::now();
    if (now >= due) return true;
    std::this_thread::sleep_for(std::min<Clock::duration>(due - now, std::chrono::milliseconds(50)));
  }
  return false;
}

struct Limits {
  std::size_t count = 0;   // 0 = unlimited
  double duration_ms = 0;  // 0 = unlimited

  void add_to(CLI::App* app, const char* count_help) {
    app->add_option("--count", count, count_help);
    app->add_option("--duration", duration_ms, "Stop after this many milliseconds");
  }

  bool done(std::size_t seen, Clock::time_point start) const {
    return g_stop || (count > 0 && seen >= count) || (duration_ms > 0 && ms_since(start) >= duration_ms);
  }
};

std::string describe(std::span<const std::uint8_t> payload) {
  try {
    return osc::to_string(osc::decode_packet(payload));
  } catch (const Error& e) {
    return std::string("!error ") + e.what();
  }
}

bus::Endpoint target_or_default(const std::string& text) {
  return text.empty() ? bus::default_broadcast() : bus::Endpoint::parse(text);
}

void detector_options(CLI::App* app, pulse::DetectorConfig& c) {
  app->add_option("--rate", c.sample_rate_hz, "Sample rate in Hz")->capture_default_str();
  app->add_option("--window", c.window_ms, "Window in ms")->capture_default_str();
  app->add_option("--gain", c.gain, "Threshold gain k")->capture_default_str();
  app->add_option("--halflife", c.baseline_halflife_ms, "Baseline half-life in ms")->capture_default_str();
  app->add_option("--refractory", c.refractory_ms, "Refractory period in ms")->capture_default_str();
  app->add_option("--warmup", c.warmup_ms, "Warm-up in ms")->capture_default_str();
  app->add_option("--floor", c.absolute_floor, "Absolute floor on W")->capture_default_str();
  app->add_flag("--invert", c.invert, "Input reads brightness rather than opacity");
}

// --- commands ---------------------------------------------------------------

struct SniffArgs {
  std::uint16_t port = bus::kDefaultPort;
  std::string out;
  bool shared = false;
  Limits limits;
};

void cmd_sniff(const SniffArgs& a) {
  bus::UdpReceiver rx(a.port, a.shared);
  Output out(a.out);
  announce("sniff", rx);
  const auto start = Clock::now();
  std::size_t seen = 0;
  while (!a.limits.done(seen, start)) {
    auto d = rx.recv(std::chrono::milliseconds(50));
    if (!d) continue;
    const auto t = static_cast<std::int64_t>(ms_since(start));
    out.write(trace::format_line({t, trace::Direction::In, d->payload}));
    print(std::to_string(t) + "\t" + d->sender + "\t" + describe(d->payload));
    ++seen;
  }
}

struct ReplayArgs {
  std::string trace;
  std::string to;
  double speed = 1.0;
};

void cmd_replay(const ReplayArgs& a) {
  if (!(a.speed > 0)) throw Error(Errc::InvalidConfig, "--speed must be positive");
  const auto packets = trace::parse_trace(read_file(a.trace));
  bus::UdpSender tx(target_or_default(a.to), "replay");
  if (packets.empty()) return;
  const auto start = Clock::now();
  const auto t0 = packets.front().t_ms;
  for (const auto& p : packets) {
    if (!wait_until(start, static_cast<double>(p.t_ms - t0) / a.speed)) return;
    tx.publish(p.payload);
  }
}

struct DetectArgs {
  std::string samples;
  std::string to;
  pulse::DetectorConfig config;
};

void cmd_detect(const DetectArgs& a) {
  const auto samples = pulse::parse_samples(read_file(a.samples));
  const auto events = pulse::detect_all(samples, a.config);
  std::unique_ptr<bus::UdpSender> tx;
  if (!a.to.empty()) tx = std::make_unique<bus::UdpSender>(bus::Endpoint::parse(a.to), "detect");
  char line[96];
  for (std::size_t i = 0; i < events.size(); ++i) {
    std::snprintf(line, sizeof line, "%.3f\t%.6f", events[i].t_ms, events[i].strength);
    print(line);
    if (tx) tx->publish(osc::encode_message(pulse::heartbeat_message(static_cast<std::int32_t>(i), events[i])));
  }
  if (events.size() < 2) {
    print("bpm\tno estimate");
    return;
  }
  std::snprintf(line, sizeof line, "bpm\t%.2f", pulse::estimate_bpm(events));
  print(line);
}

struct SimulateArgs {
  std::string script;
  std::string to;
  double speed = 1.0;
  bool no_pace = false;
};

void cmd_simulate(const SimulateArgs& a) {
  if (!(a.speed > 0)) throw Error(Errc::InvalidConfig, "--speed must be positive");
  const auto frames = sim::run_choreography(sim::load_choreography(read_file(a.script)));
  bus::UdpSender tx(target_or_default(a.to), "simulate");
  const auto start = Clock::now();
  for (const auto& f : frames) {
    if (!a.no_pace && !wait_until(start, f.t_ms / a.speed)) return;
    if (g_stop) return;
    tx.publish(osc::encode_bundle(tuio::encode_2dobj_frame(f.frame)));
  }
}

struct RouteArgs {
  std::string rules;
  std::uint16_t listen = bus::kDefaultPort;
  std::string to;
  std::string log;
  bool shared = false;
  Limits limits;
};

void cmd_route(const RouteArgs& a) {
  show::Router router(cue::load_rules(read_file(a.rules)));
  bus::UdpReceiver rx(a.listen, a.shared);
  bus::UdpSender tx(target_or_default(a.to), "route");
  std::unique_ptr<Output> log;
  if (!a.log.empty()) log = std::make_unique<Output>(a.log);
  announce("route", rx);

  const auto start = Clock::now();
  std::size_t emitted = 0;
  while (!a.limits.done(emitted, start)) {
    auto d = rx.recv(std::chrono::milliseconds(50));
    if (!d) continue;
    auto result = router.handle(d->payload, ms_since(start));
    if (result.error) std::fprintf(stderr, "stagewire route: dropped datagram from %s: %s\n", d->sender.c_str(), result.error->c_str());
    for (const auto& e : result.emissions) {
      tx.publish(osc::encode_message(e.message));
      const auto line = cue::format_emission(e);
      print(line);
      if (log) log->write(line + "\n");
      ++emitted;
    }
  }
}

struct RelayArgs {
  std::uint16_t listen = bus::kDefaultPort;
  std::vector<std::string> targets;
  bool shared = false;
  Limits limits;
};

void cmd_relay(const RelayArgs& a) {
  std::vector<std::unique_ptr<bus::UdpSender>> out;
  for (const auto& t : a.targets) out.push_back(std::make_unique<bus::UdpSender>(bus::Endpoint::parse(t), "relay"));
  bus::UdpReceiver rx(a.listen, a.shared);
  announce("relay", rx);
  const auto start = Clock::now();
  std::size_t relayed = 0;
  while (!a.limits.done(relayed, start)) {
    auto d = rx.recv(std::chrono::milliseconds(50));
    if (!d) continue;
    for (auto& tx : out) tx->publish(d->payload);
    ++relayed;
  }
}

struct ShowArgs {
  std::string script, rules, ppg, midi_rules, midi_events, out;
  pulse::DetectorConfig detector;
};

void cmd_show(const ShowArgs& a) {
  show::ShowInputs in;
  in.script = sim::load_choreography(read_file(a.script));
  in.rules = cue::load_rules(read_file(a.rules));
  in.ppg = pulse::parse_samples(read_file(a.ppg));
  in.detector = a.detector;
  if (!a.midi_rules.empty()) in.midi_rules = sim::load_midi_rules(read_file(a.midi_rules));
  if (!a.midi_events.empty()) in.midi_events = sim::parse_midi_events(read_file(a.midi_events));
  const auto log = show::format_log(show::run_show(in));
  if (a.out.empty())
    std::fwrite(log.data(), 1, log.size(), stdout);
  else
    Output(a.out).write(log);
}

struct SynthArgs {
  sim::PpgParams params;
  std::optional<double> snr_db;
  std::string out, beats;
};

void cmd_synth(SynthArgs a) {
  if (a.snr_db) a.params.noise_rms = sim::noise_rms_for_snr(a.params, *a.snr_db);
  const auto trace = sim::synth_ppg(a.params);
  Output(a.out).write(pulse::format_samples(trace.samples));
  if (!a.beats.empty()) {
    std::string text;
    char line[48];
    for (double t : trace.beat_times_ms) {
      std::snprintf(line, sizeof line, "%.17g\n", t);
      text += line;
    }
    Output(a.beats).write(text);
  }
}

struct BridgeArgs {
  std::string rules, events, to;
  double speed = 1.0;
  bool no_pace = false;
};

void cmd_bridge(const BridgeArgs& a) {
  if (!(a.speed > 0)) throw Error(Errc::InvalidConfig, "--speed must be positive");
  const auto rules = sim::load_midi_rules(read_file(a.rules));
  const auto events = sim::parse_midi_events(read_file(a.events));
  bus::UdpSender tx(target_or_default(a.to), "bridge");
  const auto start = Clock::now();
  for (const auto& e : events) {
    const auto m = sim::midi_to_osc(rules, e);
    if (!m) continue;
    if (!a.no_pace && !wait_until(start, e.t_ms / a.speed)) return;
    tx.publish(osc::encode_message(*m));
    print(osc::to_string(*m));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stagewire: OSC/TUIO show networking toolkit"};
  app.require_subcommand(1);

  SniffArgs sniff;
  auto* c_sniff = app.add_subcommand("sniff", "Record datagrams on a UDP port to a trace file");
  c_sniff->add_option("--port", sniff.port, "UDP port to listen on (0 picks a free one)")->required();
  c_sniff->add_option("--out", sniff.out, "Trace file to write")->required();
  c_sniff->add_flag("--shared", sniff.shared, "Allow other listeners on the same port");
  sniff.limits.add_to(c_sniff, "Stop after this many datagrams");

  ReplayArgs replay;
  auto* c_replay = app.add_subcommand("replay", "Re-send a trace at its recorded timing");
  c_replay->add_option("trace", replay.trace, "Trace file")->required();
  c_replay->add_option("--to", replay.to, "HOST:PORT (default $STAGEWIRE_BROADCAST or 255.255.255.255:9000)");
  c_replay->add_option("--speed", replay.speed, "Playback speed multiplier")->capture_default_str();

  DetectArgs detect;
  auto* c_detect = app.add_subcommand("detect", "Run the heartbeat detector over a samples file");
  c_detect->add_option("samples", detect.samples, "Samples file (t_ms<TAB>value per line)")->required();
  c_detect->add_option("--to", detect.to, "Also send heartbeat messages to HOST:PORT");
  detector_options(c_detect, detect.config);

  SimulateArgs simulate;
  auto* c_simulate = app.add_subcommand("simulate", "Stream a choreography script as TUIO frames");
  c_simulate->add_option("script", simulate.script, "Choreography JSON")->required();
  c_simulate->add_option("--to", simulate.to, "HOST:PORT (default $STAGEWIRE_BROADCAST or 255.255.255.255:9000)");
  c_simulate->add_option("--speed", simulate.speed, "Playback speed multiplier")->capture_default_str();
  c_simulate->add_flag("--no-pace", simulate.no_pace, "Send every frame immediately");

  RouteArgs route;
  auto* c_route = app.add_subcommand("route", "Turn incoming TUIO, heartbeat and OSC traffic into cues");
  c_route->add_option("rules", route.rules, "Rules JSON")->required();
  c_route->add_option("--listen", route.listen, "UDP port to listen on (0 picks a free one)")->required();
  c_route->add_option("--to", route.to, "HOST:PORT for cues (default $STAGEWIRE_BROADCAST or 255.255.255.255:9000)");
  c_route->add_option("--log", route.log, "Also write the emission log here");
  c_route->add_flag("--shared", route.shared, "Allow other listeners on the same port");
  route.limits.add_to(c_route, "Stop after this many emissions");

  RelayArgs relay;
  auto* c_relay = app.add_subcommand("relay", "Rebroadcast datagrams to several targets");
  c_relay->add_option("--listen", relay.listen, "UDP port to listen on (0 picks a free one)")->required();
  c_relay->add_option("--to", relay.targets, "HOST:PORT[,HOST:PORT...]")->required()->delimiter(',');
  c_relay->add_flag("--shared", relay.shared, "Allow other listeners on the same port");
  relay.limits.add_to(c_relay, "Stop after this many datagrams");

  ShowArgs show_args;
  auto* c_show = app.add_subcommand("show", "Run a scripted show offline and print its emission log");
  c_show->add_option("--script", show_args.script, "Choreography JSON")->required();
  c_show->add_option("--rules", show_args.rules, "Rules JSON")->required();
  c_show->add_option("--ppg", show_args.ppg, "Samples file")->required();
  c_show->add_option("--midi-rules", show_args.midi_rules, "MIDI bridge rules JSON");
  c_show->add_option("--midi-events", show_args.midi_events, "MIDI events file");
  c_show->add_option("--out", show_args.out, "Write the log here instead of standard output");
  detector_options(c_show, show_args.detector);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth-ppg", "Generate a synthetic pulse waveform");
  c_synth->add_option("--bpm", synth.params.bpm)->capture_default_str();
  c_synth->add_option("--duration", synth.params.duration_ms, "Length in ms")->capture_default_str();
  c_synth->add_option("--rate", synth.params.sample_rate_hz, "Sample rate in Hz")->capture_default_str();
  c_synth->add_option("--width", synth.params.pulse_width_ms, "Pulse width in ms")->capture_default_str();
  c_synth->add_option("--amplitude", synth.params.amplitude)->capture_default_str();
  c_synth->add_option("--drift", synth.params.baseline_drift_amplitude, "Baseline drift, in units of amplitude")->capture_default_str();
  auto* noise = c_synth->add_option("--noise", synth.params.noise_rms, "Noise RMS, in units of amplitude");
  c_synth->add_option("--snr", synth.snr_db, "Noise level as SNR in dB")->excludes(noise);
  c_synth->add_option("--seed", synth.params.seed)->capture_default_str();
  c_synth->add_option("--out", synth.out, "Samples file to write")->required();
  c_synth->add_option("--beats", synth.beats, "Also write ground-truth beat times here");

  BridgeArgs bridge;
  auto* c_bridge = app.add_subcommand("bridge", "Convert a MIDI event file to OSC datagrams");
  c_bridge->add_option("rules", bridge.rules, "MIDI bridge rules JSON")->required();
  c_bridge->add_option("events", bridge.events, "MIDI events file")->required();
  c_bridge->add_option("--to", bridge.to, "HOST:PORT (default $STAGEWIRE_BROADCAST or 255.255.255.255:9000)");
  c_bridge->add_option("--speed", bridge.speed, "Playback speed multiplier")->capture_default_str();
  c_bridge->add_flag("--no-pace", bridge.no_pace, "Send every message immediately");

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  const auto* cmd = app.get_subcommands().front();
  try {
    if (cmd == c_sniff) cmd_sniff(sniff);
    else if (cmd == c_replay) cmd_replay(replay);
    else if (cmd == c_detect) cmd_detect(detect);
    else if (cmd == c_simulate) cmd_simulate(simulate);
    else if (cmd == c_route) cmd_route(route);
    else if (cmd == c_relay) cmd_relay(relay);
    else if (cmd == c_show) cmd_show(show_args);
    else if (cmd == c_synth) cmd_synth(synth);
    else if (cmd == c_bridge) cmd_bridge(bridge);
  } catch (const Error& e) {
    std::fprintf(stderr, "stagewire %s: %s\n", cmd->get_name().c_str(), e.what());
    return 1;
  }
  return 0;
}
