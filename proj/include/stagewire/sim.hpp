#pragma once

// Software stand-ins for the show hardware: scripted fiducial choreography
// rendered as TUIO frames, synthetic pulse waveforms, and a MIDI note to
// OSC bridge.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "stagewire/message_template.hpp"
#include "stagewire/osc.hpp"
#include "stagewire/pulse.hpp"
#include "stagewire/tuio.hpp"

namespace stagewire::sim {

// --- choreography ---------------------------------------------------------

struct Place {
  double t_ms;
  std::int32_t session;
  std::int32_t class_id;
  double x, y, angle = 0;
};

/// Linear move from wherever the session is at t_start_ms. Angle turns
/// along the shorter arc; an absent angle keeps the current one.
struct MoveTo {
  double t_start_ms, t_end_ms;
  std::int32_t session;
  double x, y;
  std::optional<double> angle;
};

struct Lift {
  double t_ms;
  std::int32_t session;
};

using Action = std::variant<Place, MoveTo, Lift>;

struct ChoreographyScript {
  double frame_rate_hz = 30;
  /// Frames are produced for ticks with t < duration_ms.
  double duration_ms = 0;
  std::vector<Action> actions;
};

struct TimedFrame {
  double t_ms;
  tuio::SurfaceFrame frame;
};

/// Throws Error{ScriptInvalid}.
void validate_script(const ChoreographyScript& script);

/// One frame per tick, fseq from 1. A frame carries set rows only for
/// sessions that are new or whose pose changed since their last row.
std::vector<TimedFrame> run_choreography(const ChoreographyScript& script);

/// JSON: {"frame_rate_hz": 30, "duration_ms": 5000, "actions": [
///   {"kind": "place", "t_ms": 0, "session": 1, "class": 4, "x": .2, "y": .2, "angle": 0},
///   {"kind": "move_to", "t_start_ms": 0, "t_end_ms": 500, "session": 1, "x": .5, "y": .5},
///   {"kind": "lift", "t_ms": 900, "session": 1}]}
/// A missing duration_ms defaults to one tick past the last action.
ChoreographyScript load_choreography(std::string_view document);

// --- synthetic PPG --------------------------------------------------------

/// Drift and noise are expressed in units of `amplitude`, so scaling the
/// amplitude scales every generated sample exactly.
struct PpgParams {
  double bpm = 60;
  double duration_ms = 30000;
  double sample_rate_hz = 100;
  double pulse_width_ms = 120;
  double amplitude = 1.0;
  double baseline_drift_amplitude = 0;
  double noise_rms = 0;
  std::uint64_t seed = 0;
};

/// Frequency of the sinusoidal baseline drift (a slow, breathing-rate wander).
inline constexpr double kDriftHz = 0.2;

struct PpgTrace {
  std::vector<pulse::PulseSample> samples;
  std::vector<double> beat_times_ms;  // pulse peaks, ground truth
};

/// Raised-cosine pulses peaking at t_k = (k + 1/2) * 60000/bpm, plus drift
/// and Gaussian noise. Deterministic in (params, seed) on every platform.
PpgTrace synth_ppg(const PpgParams& params);

/// RMS (standard deviation) of the noiseless pulse train per unit amplitude.
double pulse_rms(const PpgParams& params);

/// noise_rms that gives the requested signal-to-noise ratio against
/// pulse_rms.
double noise_rms_for_snr(const PpgParams& params, double snr_db);

// --- MIDI bridge ----------------------------------------------------------

struct MidiEvent {
  double t_ms = 0;
  int channel = 1;  // 1-16
  int note = 0;     // 0-127
  int velocity = 0;

  bool operator==(const MidiEvent&) const = default;
};

struct MidiBridgeRule {
  int channel;
  int note;
  MessageTemplate emit;  // {velocity} fills Int arguments
};

/// JSON: [{"channel": 10, "note": 38, "emit": {"address": "/perc/snare", "args": [{"int": "{velocity}"}]}}]
std::vector<MidiBridgeRule> load_midi_rules(std::string_view document);

/// First rule matching (channel, note) wins. Velocity 0 is a note-off and
/// never emits.
std::optional<osc::Message> midi_to_osc(const std::vector<MidiBridgeRule>& rules, const MidiEvent& event);

/// Lines of `t_ms<TAB>channel<TAB>note<TAB>velocity`.
std::vector<MidiEvent> parse_midi_events(std::string_view text);

}  // namespace stagewire::sim
