#include "stagewire/sim.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "json_util.hpp"
#include "stagewire/error.hpp"

namespace stagewire::sim {
namespace {

using detail::json;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void script_invalid(const std::string& why) { throw Error(Errc::ScriptInvalid, why); }

bool unit_range(double v) { return v >= 0.0 && v <= 1.0; }

struct Pose {
  double x = 0, y = 0, angle = 0;
  double vx = 0, vy = 0, vrot = 0;
};

double wrap(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a >= kTwoPi ? 0.0 : a;
}

struct Timeline {
  const Place* place = nullptr;
  std::vector<const MoveTo*> moves;  // sorted by start
  const Lift* lift = nullptr;

  bool alive_at(double t) const { return t >= place->t_ms && (lift == nullptr || t < lift->t_ms); }

  Pose pose_at(double t) const {
    Pose p{place->x, place->y, wrap(place->angle)};
    for (const auto* m : moves) {
      if (t < m->t_start_ms) break;
      const double turn = m->angle ? std::remainder(*m->angle - p.angle, kTwoPi) : 0.0;
      if (t >= m->t_end_ms) {
        p.x = m->x;
        p.y = m->y;
        p.angle = wrap(p.angle + turn);
        continue;
      }
      const double span_s = (m->t_end_ms - m->t_start_ms) / 1000.0;
      const double frac = (t - m->t_start_ms) / (m->t_end_ms - m->t_start_ms);
      p.vx = (m->x - p.x) / span_s;
      p.vy = (m->y - p.y) / span_s;
      p.vrot = turn / span_s;
      p.x = std::clamp(p.x + (m->x - p.x) * frac, 0.0, 1.0);
      p.y = std::clamp(p.y + (m->y - p.y) * frac, 0.0, 1.0);
      p.angle = wrap(p.angle + turn * frac);
      break;
    }
    return p;
  }
};

std::map<std::int32_t, Timeline> timelines(const ChoreographyScript& script) {
  std::map<std::int32_t, Timeline> out;
  for (const auto& a : script.actions)
    if (const auto* p = std::get_if<Place>(&a)) {
      auto& tl = out[p->session];
      if (tl.place) script_invalid("session " + std::to_string(p->session) + " placed twice");
      tl.place = p;
    }
  for (const auto& a : script.actions) {
    if (const auto* m = std::get_if<MoveTo>(&a)) {
      auto it = out.find(m->session);
      if (it == out.end()) script_invalid("move_to for unplaced session " + std::to_string(m->session));
      it->second.moves.push_back(m);
    } else if (const auto* l = std::get_if<Lift>(&a)) {
      auto it = out.find(l->session);
      if (it == out.end()) script_invalid("lift for unplaced session " + std::to_string(l->session));
      if (it->second.lift) script_invalid("session " + std::to_string(l->session) + " lifted twice");
      it->second.lift = l;
    }
  }
  for (auto& [sid, tl] : out)
    std::stable_sort(tl.moves.begin(), tl.moves.end(),
                     [](const MoveTo* a, const MoveTo* b) { return a->t_start_ms < b->t_start_ms; });
  return out;
}

std::int32_t int32_field(const json& o, std::string_view key, const std::string& where) {
  const auto v = detail::get_integer(o, key, where);
  if (v < INT32_MIN || v > INT32_MAX) throw ParseError(0, where + ": \"" + std::string(key) + "\" out of range");
  return static_cast<std::int32_t>(v);
}

// 53-bit uniform in [0, 1) from the raw engine output.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double raised_cosine(double u) { return std::fabs(u) < 0.5 ? 0.5 * (1.0 + std::cos(kTwoPi * u)) : 0.0; }

bool parse_int(std::string_view s, int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

void validate_script(const ChoreographyScript& script) {
  if (!(script.frame_rate_hz > 0) || !std::isfinite(script.frame_rate_hz)) script_invalid("frame_rate_hz must be positive");
  if (!(script.duration_ms >= 0) || !std::isfinite(script.duration_ms)) script_invalid("duration_ms must be >= 0");

  for (const auto& a : script.actions) {
    if (const auto* p = std::get_if<Place>(&a)) {
      const auto who = "place of session " + std::to_string(p->session);
      if (p->session < 0 || p->class_id < 0) script_invalid(who + ": ids must be non-negative");
      if (!(p->t_ms >= 0)) script_invalid(who + ": negative time");
      if (!unit_range(p->x) || !unit_range(p->y)) script_invalid(who + ": position outside [0,1]");
      if (!std::isfinite(p->angle)) script_invalid(who + ": angle must be finite");
    } else if (const auto* m = std::get_if<MoveTo>(&a)) {
      const auto who = "move_to of session " + std::to_string(m->session);
      if (!unit_range(m->x) || !unit_range(m->y)) script_invalid(who + ": position outside [0,1]");
      if (!(m->t_end_ms >= m->t_start_ms)) script_invalid(who + ": ends before it starts");
      if (m->angle && !std::isfinite(*m->angle)) script_invalid(who + ": angle must be finite");
    }
  }

  for (const auto& [sid, tl] : timelines(script)) {
    const auto who = "session " + std::to_string(sid);
    if (tl.lift && !(tl.lift->t_ms > tl.place->t_ms)) script_invalid(who + ": lift must come after place");
    double busy_until = tl.place->t_ms;
    for (const auto* m : tl.moves) {
      if (m->t_start_ms < tl.place->t_ms) script_invalid(who + ": move_to before place");
      if (m->t_start_ms < busy_until) script_invalid(who + ": overlapping move_to intervals");
      if (tl.lift && m->t_end_ms > tl.lift->t_ms) script_invalid(who + ": move_to runs past lift");
      busy_until = m->t_end_ms;
    }
  }
}

std::vector<TimedFrame> run_choreography(const ChoreographyScript& script) {
  validate_script(script);
  const auto lines = timelines(script);
  std::map<std::int32_t, tuio::FiducialState> last_sent;
  std::vector<TimedFrame> frames;

  for (std::int64_t tick = 0;; ++tick) {
    const double t = static_cast<double>(tick) * 1000.0 / script.frame_rate_hz;
    if (!(t < script.duration_ms)) break;
    TimedFrame tf{t, {static_cast<std::int32_t>(tick + 1), {}, {}}};
    for (const auto& [sid, tl] : lines) {
      if (!tl.alive_at(t)) {
        last_sent.erase(sid);
        continue;
      }
      tf.frame.alive.insert(sid);
      const Pose p = tl.pose_at(t);
      tuio::FiducialState s;
      s.session_id = sid;
      s.class_id = tl.place->class_id;
      s.x = static_cast<float>(p.x);
      s.y = static_cast<float>(p.y);
      s.angle = tuio::normalize_angle(static_cast<float>(p.angle));
      s.vel_x = static_cast<float>(p.vx);
      s.vel_y = static_cast<float>(p.vy);
      s.vel_rot = static_cast<float>(p.vrot);
      auto prev = last_sent.find(sid);
      if (prev == last_sent.end() || !(prev->second == s)) {
        tf.frame.states.push_back(s);
        last_sent[sid] = s;
      }
    }
    frames.push_back(std::move(tf));
  }
  return frames;
}

ChoreographyScript load_choreography(std::string_view document) {
  const json doc = detail::parse_json(document);
  detail::expect_keys(doc, {"actions"}, {"frame_rate_hz", "duration_ms"}, "script");
  ChoreographyScript script;
  if (doc.contains("frame_rate_hz")) script.frame_rate_hz = detail::get_number(doc, "frame_rate_hz", "script");
  const auto& actions = doc.at("actions");
  if (!actions.is_array()) throw ParseError(0, "script: \"actions\" must be an array");

  double last_t = 0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto& a = actions[i];
    const std::string where = "action " + std::to_string(i);
    if (!a.is_object() || !a.contains("kind")) throw ParseError(0, where + ": needs a \"kind\"");
    const auto kind = detail::get_string(a, "kind", where);
    if (kind == "place") {
      detail::expect_keys(a, {"kind", "t_ms", "session", "class", "x", "y"}, {"angle"}, where);
      Place p{detail::get_number(a, "t_ms", where), int32_field(a, "session", where), int32_field(a, "class", where),
              detail::get_number(a, "x", where), detail::get_number(a, "y", where),
              a.contains("angle") ? detail::get_number(a, "angle", where) : 0.0};
      last_t = std::max(last_t, p.t_ms);
      script.actions.emplace_back(p);
    } else if (kind == "move_to") {
      detail::expect_keys(a, {"kind", "t_start_ms", "t_end_ms", "session", "x", "y"}, {"angle"}, where);
      MoveTo m{detail::get_number(a, "t_start_ms", where), detail::get_number(a, "t_end_ms", where),
               int32_field(a, "session", where), detail::get_number(a, "x", where), detail::get_number(a, "y", where),
               std::nullopt};
      if (a.contains("angle")) m.angle = detail::get_number(a, "angle", where);
      last_t = std::max(last_t, m.t_end_ms);
      script.actions.emplace_back(m);
    } else if (kind == "lift") {
      detail::expect_keys(a, {"kind", "t_ms", "session"}, {}, where);
      Lift l{detail::get_number(a, "t_ms", where), int32_field(a, "session", where)};
      last_t = std::max(last_t, l.t_ms);
      script.actions.emplace_back(l);
    } else {
      throw ParseError(0, where + ": unknown kind \"" + kind + "\"");
    }
  }
  script.duration_ms = doc.contains("duration_ms") ? detail::get_number(doc, "duration_ms", "script")
                                                   : last_t + 1000.0 / script.frame_rate_hz;
  validate_script(script);
  return script;
}

double pulse_rms(const PpgParams& params) {
  const double period = 60000.0 / params.bpm;
  const double duty = params.pulse_width_ms / period;
  const double mean = 0.5 * duty;
  const double mean_square = 0.375 * duty;  // integral of raised cosine squared
  return std::sqrt(std::max(0.0, mean_square - mean * mean));
}

double noise_rms_for_snr(const PpgParams& params, double snr_db) { return pulse_rms(params) * std::pow(10.0, -snr_db / 20.0); }

PpgTrace synth_ppg(const PpgParams& params) {
  if (!(params.bpm > 0) || !(params.sample_rate_hz > 0) || !(params.pulse_width_ms > 0) || !(params.duration_ms >= 0))
    throw Error(Errc::InvalidConfig, "bpm, sample_rate_hz and pulse_width_ms must be positive");
  if (params.amplitude < 0 || params.baseline_drift_amplitude < 0 || params.noise_rms < 0)
    throw Error(Errc::InvalidConfig, "amplitudes must be >= 0");

  PpgTrace trace;
  const double period = 60000.0 / params.bpm;
  const double first = period / 2.0;
  for (double t = first; t < params.duration_ms; t = first + period * static_cast<double>(trace.beat_times_ms.size()))
    trace.beat_times_ms.push_back(t);

  std::mt19937_64 rng(params.seed);
  const double half = params.pulse_width_ms / 2.0;
  for (std::int64_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * 1000.0 / params.sample_rate_hz;
    if (!(t < params.duration_ms)) break;

    double v = 0;
    const auto k_lo = static_cast<std::int64_t>(std::max(0.0, std::ceil((t - half - first) / period)));
    for (auto k = k_lo; k < static_cast<std::int64_t>(trace.beat_times_ms.size()); ++k) {
      const double tk = trace.beat_times_ms[static_cast<std::size_t>(k)];
      if (tk - half > t) break;
      v += raised_cosine((t - tk) / params.pulse_width_ms);
    }
    v += params.baseline_drift_amplitude * std::sin(kTwoPi * kDriftHz * t / 1000.0);

    // Box-Muller, one normal per sample.
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    v += params.noise_rms * std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);

    trace.samples.push_back({t, params.amplitude * v});
  }
  return trace;
}

std::vector<MidiBridgeRule> load_midi_rules(std::string_view document) {
  static constexpr std::array<std::string_view, 1> kVelocity = {"velocity"};
  const json doc = detail::parse_json(document);
  if (!doc.is_array()) throw ParseError(0, "MIDI rules document must be a JSON array");
  std::vector<MidiBridgeRule> rules;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "midi rule " + std::to_string(i);
    const auto& r = doc[i];
    detail::expect_keys(r, {"channel", "note", "emit"}, {}, where);
    const auto channel = detail::get_integer(r, "channel", where);
    const auto note = detail::get_integer(r, "note", where);
    if (channel < 1 || channel > 16) throw Error(Errc::InvalidRule, where + ": channel must be 1-16");
    if (note < 0 || note > 127) throw Error(Errc::InvalidRule, where + ": note must be 0-127");
    MidiBridgeRule rule{static_cast<int>(channel), static_cast<int>(note), {}};
    rule.emit = parse_message_template(r.at("emit"), kVelocity, {}, kVelocity, where + " emit");
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::optional<osc::Message> midi_to_osc(const std::vector<MidiBridgeRule>& rules, const MidiEvent& event) {
  if (event.velocity == 0) return std::nullopt;
  for (const auto& r : rules)
    if (r.channel == event.channel && r.note == event.note)
      return render(r.emit, {{"velocity", static_cast<double>(event.velocity)}});
  return std::nullopt;
}

std::vector<MidiEvent> parse_midi_events(std::string_view text) {
  std::vector<MidiEvent> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    std::array<std::string_view, 4> fields;
    std::size_t n = 0;
    for (std::size_t start = 0;;) {
      const auto tab = line.find('\t', start);
      if (n == fields.size()) throw ParseError(line_no, "expected 4 tab-separated fields");
      fields[n++] = line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start);
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (n != 4) throw ParseError(line_no, "expected 4 tab-separated fields");

    MidiEvent e;
    const auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), e.t_ms);
    if (ec != std::errc() || ptr != fields[0].data() + fields[0].size()) throw ParseError(line_no, "bad time");
    if (!parse_int(fields[1], e.channel) || e.channel < 1 || e.channel > 16) throw ParseError(line_no, "channel must be 1-16");
    if (!parse_int(fields[2], e.note) || e.note < 0 || e.note > 127) throw ParseError(line_no, "note must be 0-127");
    if (!parse_int(fields[3], e.velocity) || e.velocity < 0 || e.velocity > 127) throw ParseError(line_no, "velocity must be 0-127");
    out.push_back(e);
  }
  return out;
}

}  // namespace stagewire::sim
