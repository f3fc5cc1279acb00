#pragma once

// Pipelines that tie the modules together: the datagram router behind
// `stagewire route`, and the offline show run used for golden logs.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stagewire/cue.hpp"
#include "stagewire/pulse.hpp"
#include "stagewire/sim.hpp"
#include "stagewire/tuio.hpp"

namespace stagewire::show {

/// Turns incoming datagrams into cue emissions. TUIO 2Dobj bundles drive a
/// tracker (one stream), "/lmtd/heartbeat" messages become heartbeat
/// events, and every other message is offered to OSC-pattern rules.
class Router {
 public:
  explicit Router(std::vector<cue::CueRule> rules);

  struct Result {
    std::vector<cue::CueEmission> emissions;
    std::vector<tuio::SurfaceEvent> surface_events;
    std::optional<std::string> error;  // undecodable or malformed input
  };

  /// Never throws on bad input; the failure is reported in Result::error.
  Result handle(std::span<const std::uint8_t> datagram, double t_ms);

  const tuio::Tracker& tracker() const { return tracker_; }

 private:
  void handle_message(const osc::Message& m, double t_ms, Result& out);
  void handle_frame(const tuio::SurfaceFrame& f, double t_ms, Result& out);

  tuio::Tracker tracker_;
  cue::Engine engine_;
};

struct ShowInputs {
  sim::ChoreographyScript script;
  std::vector<pulse::PulseSample> ppg;
  std::vector<cue::CueRule> rules;
  pulse::DetectorConfig detector;
  std::vector<sim::MidiBridgeRule> midi_rules;
  std::vector<sim::MidiEvent> midi_events;
};

/// Runs every device through a lossless simulated network into one Router,
/// in virtual time, and returns the emission log. Deterministic.
std::vector<cue::CueEmission> run_show(const ShowInputs& inputs);

std::string format_log(std::span<const cue::CueEmission> emissions);

}  // namespace stagewire::show
