#include "stagewire/pulse.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "stagewire/error.hpp"

namespace stagewire::pulse {
namespace {

bool parse_double(std::string_view field, double& out) {
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

void DetectorConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) throw Error(Errc::InvalidConfig, std::string(name) + " must be positive");
  };
  positive(sample_rate_hz, "sample_rate_hz");
  positive(window_ms, "window_ms");
  positive(gain, "gain");
  positive(baseline_halflife_ms, "baseline_halflife_ms");
  positive(refractory_ms, "refractory_ms");
  positive(warmup_ms, "warmup_ms");
  if (!(absolute_floor >= 0)) throw Error(Errc::InvalidConfig, "absolute_floor must be >= 0");
  if (window_samples() < 1) throw Error(Errc::InvalidConfig, "window shorter than one sample");
}

std::size_t DetectorConfig::window_samples() const {
  return static_cast<std::size_t>(std::lround(window_ms * sample_rate_hz / 1000.0));
}

double windowed_delta(std::span<const double> samples, std::size_t n, std::size_t w) {
  if (n < w || n >= samples.size())
    throw Error(Errc::InsufficientHistory, "need index " + std::to_string(n) + " with " + std::to_string(w) + " samples of history");
  return samples[n] - samples[n - w];
}

Detector::Detector(DetectorConfig config) : config_(config) {
  config_.validate();
  window_ = config_.window_samples();
}

std::optional<double> Detector::baseline() const {
  if (weight_ <= 0) return std::nullopt;
  return weighted_sum_ / weight_;
}

std::optional<HeartbeatEvent> Detector::process_sample(const PulseSample& sample) {
  if (last_t_ && !(sample.t_ms > *last_t_))
    throw Error(Errc::NonMonotonicTime, "sample at " + std::to_string(sample.t_ms) + " ms after " + std::to_string(*last_t_) + " ms");
  last_t_ = sample.t_ms;

  history_.push_back(config_.invert ? -sample.value : sample.value);
  if (history_.size() > window_ + 1) history_.pop_front();
  if (history_.size() < window_ + 1) return std::nullopt;

  const double w = history_.back() - history_.front();
  const auto before = baseline();

  std::optional<HeartbeatEvent> event;
  if (before && w > config_.gain * *before && w > config_.absolute_floor && sample.t_ms >= config_.warmup_ms &&
      (!last_beat_t_ || sample.t_ms - *last_beat_t_ >= config_.refractory_ms)) {
    event = HeartbeatEvent{sample.t_ms, w};
    last_beat_t_ = sample.t_ms;
    ++beats_;
  }

  // The triggering W feeds the baseline after the decision.
  const double decay = last_w_t_ ? std::exp2(-(sample.t_ms - *last_w_t_) / config_.baseline_halflife_ms) : 0.0;
  weighted_sum_ = decay * weighted_sum_ + (1.0 - decay) * std::fabs(w);
  weight_ = decay * weight_ + (1.0 - decay);
  last_w_t_ = sample.t_ms;
  return event;
}

std::vector<HeartbeatEvent> detect_all(std::span<const PulseSample> samples, const DetectorConfig& config) {
  Detector detector(config);
  std::vector<HeartbeatEvent> events;
  for (const auto& s : samples)
    if (auto e = detector.process_sample(s)) events.push_back(*e);
  return events;
}

double estimate_bpm(std::span<const HeartbeatEvent> events, int window_beats) {
  if (events.size() < 2) throw Error(Errc::InsufficientEvents, "need at least two beats, have " + std::to_string(events.size()));
  if (window_beats < 1) throw Error(Errc::InvalidConfig, "window_beats must be >= 1");
  const std::size_t intervals = std::min(static_cast<std::size_t>(window_beats), events.size() - 1);
  const double span_ms = events.back().t_ms - events[events.size() - 1 - intervals].t_ms;
  return 60000.0 / (span_ms / static_cast<double>(intervals));
}

osc::Message heartbeat_message(std::int32_t beat_index, const HeartbeatEvent& event) {
  return osc::Message{kHeartbeatAddress, {beat_index, static_cast<float>(event.strength)}};
}

std::vector<PulseSample> parse_samples(std::string_view text) {
  std::vector<PulseSample> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError(line_no, "expected t_ms<TAB>value");
    PulseSample s;
    if (!parse_double(line.substr(0, tab), s.t_ms)) throw ParseError(line_no, "bad time field");
    if (!parse_double(line.substr(tab + 1), s.value)) throw ParseError(line_no, "bad value field");
    out.push_back(s);
  }
  return out;
}

std::string format_samples(std::span<const PulseSample> samples) {
  std::string out;
  char buf[64];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%.17g\t%.17g\n", s.t_ms, s.value);
    out += buf;
  }
  return out;
}

}  // namespace stagewire::pulse
