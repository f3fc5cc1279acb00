#pragma once

// Heartbeat detection on a sampled opacity signal.
//
// Each sample contributes W, the sum of the changes over the last window
// (which telescopes to s[n] - s[n-w]). A beat fires when W rises above
// gain * B, where B is an exponentially weighted mean of |W|. The trigger is
// invariant to signal amplitude and DC level.

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stagewire/osc.hpp"

namespace stagewire::pulse {

inline constexpr const char* kHeartbeatAddress = "/lmtd/heartbeat";

struct PulseSample {
  double t_ms = 0;
  double value = 0;

  bool operator==(const PulseSample&) const = default;
};

struct DetectorConfig {
  double sample_rate_hz = 100;
  double window_ms = 150;
  double gain = 3.0;
  double baseline_halflife_ms = 2000;
  double refractory_ms = 250;
  double warmup_ms = 2000;
  double absolute_floor = 0;
  /// Set when the sensor reads transmitted brightness instead of opacity.
  bool invert = false;

  /// Throws Error{InvalidConfig}.
  void validate() const;
  std::size_t window_samples() const;
};

struct HeartbeatEvent {
  double t_ms = 0;
  double strength = 0;  // W at the triggering sample

  bool operator==(const HeartbeatEvent&) const = default;
};

/// Sum of successive differences over the `w` samples ending at index `n`.
/// Throws Error{InsufficientHistory} if n < w or n is past the end.
double windowed_delta(std::span<const double> samples, std::size_t n, std::size_t w);

class Detector {
 public:
  explicit Detector(DetectorConfig config = {});

  /// Throws Error{NonMonotonicTime} if t does not increase.
  std::optional<HeartbeatEvent> process_sample(const PulseSample& sample);

  const DetectorConfig& config() const { return config_; }
  /// Current |W| baseline; nullopt until the first full window.
  std::optional<double> baseline() const;
  std::size_t beats() const { return beats_; }

 private:
  DetectorConfig config_;
  std::size_t window_;
  std::deque<double> history_;  // last window_ + 1 values
  std::optional<double> last_t_;
  std::optional<double> last_w_t_;
  std::optional<double> last_beat_t_;
  double weighted_sum_ = 0;  // bias-corrected EMA: sum / weight
  double weight_ = 0;
  std::size_t beats_ = 0;
};

std::vector<HeartbeatEvent> detect_all(std::span<const PulseSample> samples, const DetectorConfig& config = {});

/// 60000 / mean of the last min(window_beats, n-1) inter-beat intervals.
/// Throws Error{InsufficientEvents} for fewer than two events.
double estimate_bpm(std::span<const HeartbeatEvent> events, int window_beats = 5);

/// "/lmtd/heartbeat" [Int beat_index, Float strength].
osc::Message heartbeat_message(std::int32_t beat_index, const HeartbeatEvent& event);

/// Samples file: one `t_ms<TAB>value` per line; blank lines and lines
/// starting with '#' are skipped. Throws ParseError with the line number.
std::vector<PulseSample> parse_samples(std::string_view text);
std::string format_samples(std::span<const PulseSample> samples);

}  // namespace stagewire::pulse
