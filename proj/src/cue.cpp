#include "stagewire/cue.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "json_util.hpp"
#include "stagewire/error.hpp"

namespace stagewire::cue {
namespace {

using detail::json;

constexpr std::array<std::string_view, 5> kFiducialNames = {"x", "y", "angle", "class", "session"};
constexpr std::array<std::string_view, 6> kContinuousNames = {"x", "y", "angle", "class", "session", "value"};
constexpr std::array<std::string_view, 1> kValueOnly = {"value"};
constexpr std::array<std::string_view, 4> kFloatNames = {"x", "y", "angle", "value"};
constexpr std::array<std::string_view, 2> kIntNames = {"class", "session"};

void invalid(const std::string& where, const std::string& why) { throw Error(Errc::InvalidRule, where + ": " + why); }

std::int32_t class_field(const json& m, const std::string& where) {
  const auto c = detail::get_integer(m, "class", where);
  if (c < 0 || c > INT32_MAX) invalid(where, "class must be a non-negative 32-bit int");
  return static_cast<std::int32_t>(c);
}

std::array<double, 2> pair_field(const json& m, std::string_view key, const std::string& where) {
  const auto& v = m.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ParseError(0, where + ": \"" + std::string(key) + "\" must be [number, number]");
  return {v[0].get<double>(), v[1].get<double>()};
}

Axis axis_field(const json& m, const std::string& where) {
  const auto a = detail::get_string(m, "axis", where);
  if (a == "x") return Axis::X;
  if (a == "y") return Axis::Y;
  if (a == "angle") return Axis::Angle;
  invalid(where, "axis must be x, y or angle");
  return Axis::X;
}

const char* axis_name(Axis a) {
  switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    default: return "angle";
  }
}

Match parse_match(const json& m, const std::string& where) {
  if (!m.is_object() || !m.contains("kind")) throw ParseError(0, where + ": match needs a \"kind\"");
  const auto kind = detail::get_string(m, "kind", where);
  if (kind == "fiducial_add" || kind == "fiducial_remove") {
    detail::expect_keys(m, {"kind", "class"}, {}, where);
    const auto c = class_field(m, where);
    if (kind == "fiducial_add") return FiducialAdd{c};
    return FiducialRemove{c};
  }
  if (kind == "region_enter") {
    detail::expect_keys(m, {"kind", "class", "rect"}, {}, where);
    const auto& r = m.at("rect");
    if (!r.is_array() || r.size() != 4 || !std::all_of(r.begin(), r.end(), [](const json& v) { return v.is_number(); }))
      throw ParseError(0, where + ": \"rect\" must be [x0, y0, x1, y1]");
    Rect rect{r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()};
    if (!(rect.x0 < rect.x1) || !(rect.y0 < rect.y1)) invalid(where, "rect must satisfy x0 < x1 and y0 < y1");
    return RegionEnter{class_field(m, where), rect};
  }
  if (kind == "heartbeat") {
    detail::expect_keys(m, {"kind"}, {}, where);
    return Heartbeat{};
  }
  if (kind == "osc") {
    detail::expect_keys(m, {"kind", "pattern"}, {}, where);
    auto pattern = detail::get_string(m, "pattern", where);
    try {
      osc::validate_pattern(pattern);
    } catch (const Error& e) {
      invalid(where, e.what());
    }
    return OscMatch{std::move(pattern)};
  }
  if (kind == "continuous") {
    detail::expect_keys(m, {"kind", "class", "axis", "in", "out"}, {"max_rate_hz"}, where);
    Continuous c{};
    c.class_id = class_field(m, where);
    c.axis = axis_field(m, where);
    const auto in = pair_field(m, "in", where);
    const auto out = pair_field(m, "out", where);
    c.in_lo = in[0];
    c.in_hi = in[1];
    c.out_lo = out[0];
    c.out_hi = out[1];
    c.max_rate_hz = m.contains("max_rate_hz") ? detail::get_number(m, "max_rate_hz", where) : kDefaultMaxRateHz;
    if (c.in_lo == c.in_hi) invalid(where, "input range is degenerate");
    if (!(c.max_rate_hz > 0) || !std::isfinite(c.max_rate_hz)) invalid(where, "max_rate_hz must be positive");
    for (double v : {c.in_lo, c.in_hi, c.out_lo, c.out_hi})
      if (!std::isfinite(v)) invalid(where, "ranges must be finite");
    return c;
  }
  invalid(where, "unknown match kind \"" + kind + "\"");
  return Heartbeat{};
}

std::span<const std::string_view> placeholders_for(const Match& m) {
  if (std::holds_alternative<Continuous>(m)) return kContinuousNames;
  if (std::holds_alternative<Heartbeat>(m) || std::holds_alternative<OscMatch>(m)) return kValueOnly;
  return kFiducialNames;
}

json match_to_json(const Match& match) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, FiducialAdd>) return {{"kind", "fiducial_add"}, {"class", m.class_id}};
        if constexpr (std::is_same_v<T, FiducialRemove>) return {{"kind", "fiducial_remove"}, {"class", m.class_id}};
        if constexpr (std::is_same_v<T, RegionEnter>)
          return {{"kind", "region_enter"}, {"class", m.class_id}, {"rect", {m.rect.x0, m.rect.y0, m.rect.x1, m.rect.y1}}};
        if constexpr (std::is_same_v<T, Heartbeat>) return {{"kind", "heartbeat"}};
        if constexpr (std::is_same_v<T, OscMatch>) return {{"kind", "osc"}, {"pattern", m.pattern}};
        if constexpr (std::is_same_v<T, Continuous>)
          return {{"kind", "continuous"},     {"class", m.class_id},       {"axis", axis_name(m.axis)},
                  {"in", {m.in_lo, m.in_hi}}, {"out", {m.out_lo, m.out_hi}}, {"max_rate_hz", m.max_rate_hz}};
      },
      match);
}

Bindings fiducial_bindings(const tuio::FiducialState& s) {
  return {{"x", s.x}, {"y", s.y}, {"angle", s.angle}, {"class", static_cast<double>(s.class_id)},
          {"session", static_cast<double>(s.session_id)}};
}

bool inside(const Rect& r, const tuio::FiducialState& s) {
  return s.x >= r.x0 && s.x <= r.x1 && s.y >= r.y0 && s.y <= r.y1;
}

}  // namespace

std::vector<CueRule> load_rules(std::string_view document) {
  const json doc = detail::parse_json(document);
  if (!doc.is_array()) throw ParseError(0, "rules document must be a JSON array");
  std::vector<CueRule> rules;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "rule " + std::to_string(i);
    const auto& r = doc[i];
    detail::expect_keys(r, {"id", "match", "emit"}, {}, where);
    CueRule rule;
    rule.id = detail::get_string(r, "id", where);
    const std::string named = where + " (\"" + rule.id + "\")";
    if (rule.id.empty()) invalid(where, "id must not be empty");
    if (!ids.insert(rule.id).second) invalid(named, "duplicate id");
    rule.match = parse_match(r.at("match"), named);
    rule.emit = parse_message_template(r.at("emit"), placeholders_for(rule.match), kFloatNames, kIntNames, named + " emit");
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::string dump_rules(const std::vector<CueRule>& rules) {
  json doc = json::array();
  for (const auto& r : rules) doc.push_back({{"id", r.id}, {"match", match_to_json(r.match)}, {"emit", to_json(r.emit)}});
  return doc.dump(2);
}

double map_axis(const Continuous& rule, double raw) noexcept {
  const double u = (raw - rule.in_lo) / (rule.in_hi - rule.in_lo);
  if (!(u > 0.0)) return rule.out_lo;
  if (u >= 1.0) return rule.out_hi;
  const double v = rule.out_lo + (rule.out_hi - rule.out_lo) * u;
  return std::clamp(v, std::min(rule.out_lo, rule.out_hi), std::max(rule.out_lo, rule.out_hi));
}

std::string format_emission(const CueEmission& e) {
  char t[48];
  std::snprintf(t, sizeof t, "%.3f", e.t_ms);
  return std::string(t) + "\t" + e.rule_id + "\t" + osc::to_string(e.message);
}

Engine::Engine(std::vector<CueRule> rules) : rules_(std::move(rules)) {}

void Engine::forget_session(std::int32_t session) {
  std::erase_if(add_fired_, [&](const Key& k) { return k.second == session; });
  std::erase_if(inside_, [&](const Key& k) { return k.second == session; });
  std::erase_if(last_continuous_, [&](const auto& kv) { return kv.first.second == session; });
}

std::vector<CueEmission> Engine::eval_event(const tuio::SurfaceEvent& event, double t_ms) {
  std::vector<CueEmission> out;
  const auto& s = event.state;
  const auto fire = [&](const CueRule& rule) { out.push_back({t_ms, rule.id, render(rule.emit, fiducial_bindings(s))}); };

  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& rule = rules_[i];
    const Key key{i, s.session_id};
    if (const auto* add = std::get_if<FiducialAdd>(&rule.match)) {
      if (event.kind == tuio::EventKind::Add && add->class_id == s.class_id && add_fired_.insert(key).second) fire(rule);
    } else if (const auto* rem = std::get_if<FiducialRemove>(&rule.match)) {
      if (event.kind == tuio::EventKind::Remove && rem->class_id == s.class_id) fire(rule);
    } else if (const auto* region = std::get_if<RegionEnter>(&rule.match)) {
      if (event.kind == tuio::EventKind::Remove || region->class_id != s.class_id) continue;
      if (!inside(region->rect, s))
        inside_.erase(key);
      else if (inside_.insert(key).second)
        fire(rule);
    }
  }
  if (event.kind == tuio::EventKind::Remove) forget_session(s.session_id);
  return out;
}

std::vector<CueEmission> Engine::eval_event(const pulse::HeartbeatEvent& event, double t_ms) {
  std::vector<CueEmission> out;
  for (const auto& rule : rules_)
    if (std::holds_alternative<Heartbeat>(rule.match))
      out.push_back({t_ms, rule.id, render(rule.emit, {{"value", event.strength}})});
  return out;
}

std::vector<CueEmission> Engine::eval_event(const osc::Message& message, double t_ms) {
  std::vector<CueEmission> out;
  std::optional<double> first_number;
  for (const auto& a : message.args) {
    if (const auto* i = std::get_if<std::int32_t>(&a)) {
      first_number = *i;
      break;
    }
    if (const auto* f = std::get_if<float>(&a)) {
      first_number = *f;
      break;
    }
  }
  for (const auto& rule : rules_) {
    const auto* m = std::get_if<OscMatch>(&rule.match);
    if (m == nullptr || !osc::match_address(m->pattern, message.address)) continue;
    Bindings b;
    if (first_number) b.set("value", *first_number);
    else if (rule.emit.uses("value")) continue;
    out.push_back({t_ms, rule.id, render(rule.emit, b)});
  }
  return out;
}

std::vector<CueEmission> Engine::eval_frame_continuous(const tuio::FiducialState& state, double t_ms) {
  std::vector<CueEmission> out;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& rule = rules_[i];
    const auto* c = std::get_if<Continuous>(&rule.match);
    if (c == nullptr || c->class_id != state.class_id) continue;
    const Key key{i, state.session_id};
    const auto last = last_continuous_.find(key);
    if (last != last_continuous_.end() && t_ms - last->second < 1000.0 / c->max_rate_hz) continue;

    const double raw = c->axis == Axis::X ? state.x : c->axis == Axis::Y ? state.y : state.angle;
    auto b = fiducial_bindings(state);
    b.set("value", map_axis(*c, raw));
    out.push_back({t_ms, rule.id, render(rule.emit, b)});
    last_continuous_[key] = t_ms;
  }
  return out;
}

}  // namespace stagewire::cue
