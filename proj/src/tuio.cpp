#include "stagewire/tuio.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "stagewire/error.hpp"

namespace stagewire::tuio {
namespace {

constexpr float kTwoPi = 2.0f * std::numbers::pi_v<float>;

const std::string* command_of(const osc::Message& m) {
  if (m.args.empty()) return nullptr;
  return std::get_if<std::string>(&m.args.front());
}

std::int32_t int_arg(const osc::Message& m, std::size_t i, const char* what) {
  const auto* v = std::get_if<std::int32_t>(&m.args[i]);
  if (v == nullptr) throw Error(Errc::MalformedRow, std::string(what) + ": argument " + std::to_string(i) + " is not an int");
  return *v;
}

float float_arg(const osc::Message& m, std::size_t i) {
  const auto* v = std::get_if<float>(&m.args[i]);
  if (v == nullptr) throw Error(Errc::MalformedRow, "set: argument " + std::to_string(i) + " is not a float");
  return *v;
}

FiducialState parse_set_row(const osc::Message& m) {
  if (m.args.size() != 11) throw Error(Errc::MalformedRow, "set row needs 2 ints + 8 floats, got " + std::to_string(m.args.size() - 1) + " values");
  FiducialState s;
  s.session_id = int_arg(m, 1, "set");
  s.class_id = int_arg(m, 2, "set");
  s.x = float_arg(m, 3);
  s.y = float_arg(m, 4);
  s.angle = normalize_angle(float_arg(m, 5));
  s.vel_x = float_arg(m, 6);
  s.vel_y = float_arg(m, 7);
  s.vel_rot = float_arg(m, 8);
  s.accel_motion = float_arg(m, 9);
  s.accel_rot = float_arg(m, 10);
  validate_state(s);
  return s;
}

osc::Message command(const char* name) { return osc::Message{kObjectAddress, {std::string(name)}}; }

}  // namespace

const char* to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::Add: return "add";
    case EventKind::Update: return "update";
    case EventKind::Remove: return "remove";
  }
  return "?";
}

float normalize_angle(float radians) noexcept {
  if (radians >= 0.0f && radians < kTwoPi) return radians;
  float a = std::fmod(radians, kTwoPi);
  if (a < 0.0f) a += kTwoPi;
  // fmod of a tiny negative value can round up to exactly 2pi
  if (a >= kTwoPi) a = 0.0f;
  return a;
}

void validate_state(const FiducialState& s) {
  const auto sid = std::to_string(s.session_id);
  if (s.session_id < 0) throw Error(Errc::InvariantViolation, "negative session id " + sid);
  if (s.class_id < 0) throw Error(Errc::InvariantViolation, "session " + sid + ": negative class id");
  if (!(s.x >= 0.0f && s.x <= 1.0f) || !(s.y >= 0.0f && s.y <= 1.0f))
    throw Error(Errc::InvariantViolation, "session " + sid + ": position outside [0,1]");
  if (!(s.angle >= 0.0f && s.angle < kTwoPi)) throw Error(Errc::InvariantViolation, "session " + sid + ": angle outside [0, 2pi)");
}

bool is_2dobj_bundle(const osc::Bundle& b) noexcept {
  if (b.elements.empty()) return false;
  for (const auto& e : b.elements)
    if (!e.is_message() || e.message().address != kObjectAddress) return false;
  return true;
}

SurfaceFrame parse_2dobj_bundle(const osc::Bundle& b) {
  SurfaceFrame frame;
  bool have_alive = false;
  std::optional<std::int32_t> fseq;
  std::set<std::int32_t> seen_rows;

  for (const auto& element : b.elements) {
    if (!element.is_message()) throw Error(Errc::NotTuio, "nested bundle inside a TUIO frame");
    const auto& m = element.message();
    if (m.address != kObjectAddress) throw Error(Errc::NotTuio, "unexpected address " + m.address);
    const auto* cmd = command_of(m);
    if (cmd == nullptr) throw Error(Errc::MalformedRow, "message without a command string");

    if (*cmd == "source") continue;
    if (*cmd == "alive") {
      if (have_alive) throw Error(Errc::MalformedRow, "duplicate alive message");
      have_alive = true;
      for (std::size_t i = 1; i < m.args.size(); ++i) frame.alive.insert(int_arg(m, i, "alive"));
    } else if (*cmd == "set") {
      auto state = parse_set_row(m);
      if (!seen_rows.insert(state.session_id).second)
        throw Error(Errc::MalformedRow, "duplicate set row for session " + std::to_string(state.session_id));
      frame.states.push_back(state);
    } else if (*cmd == "fseq") {
      if (fseq) throw Error(Errc::MalformedRow, "duplicate fseq message");
      if (m.args.size() != 2) throw Error(Errc::MalformedRow, "fseq takes exactly one int");
      fseq = int_arg(m, 1, "fseq");
    } else {
      throw Error(Errc::MalformedRow, "unknown command \"" + *cmd + "\"");
    }
  }

  if (!fseq) throw Error(Errc::MissingFseq, "frame has no fseq message");
  if (!have_alive) throw Error(Errc::MalformedRow, "frame has no alive message");
  frame.fseq = *fseq;
  for (const auto& s : frame.states)
    if (!frame.alive.contains(s.session_id))
      throw Error(Errc::InconsistentAlive, "set row for session " + std::to_string(s.session_id) + " not in alive");
  return frame;
}

osc::Bundle encode_2dobj_frame(const SurfaceFrame& frame) {
  std::set<std::int32_t> seen;
  for (const auto& s : frame.states) {
    validate_state(s);
    if (!frame.alive.contains(s.session_id))
      throw Error(Errc::InvariantViolation, "session " + std::to_string(s.session_id) + " has a state but is not alive");
    if (!seen.insert(s.session_id).second)
      throw Error(Errc::InvariantViolation, "duplicate state for session " + std::to_string(s.session_id));
  }

  osc::Bundle b{osc::TimeTag::immediately(), {}};
  auto alive = command("alive");
  for (auto sid : frame.alive) alive.args.emplace_back(sid);
  b.elements.emplace_back(std::move(alive));
  for (const auto& s : frame.states) {
    b.elements.emplace_back(osc::Message{kObjectAddress,
                                         {std::string("set"), s.session_id, s.class_id, s.x, s.y, s.angle, s.vel_x, s.vel_y,
                                          s.vel_rot, s.accel_motion, s.accel_rot}});
  }
  auto fseq = command("fseq");
  fseq.args.emplace_back(frame.fseq);
  b.elements.emplace_back(std::move(fseq));
  return b;
}

std::vector<SurfaceEvent> Tracker::apply_frame(const SurfaceFrame& frame) {
  if (frame.fseq == kKeepAliveFseq) return {};
  if (last_fseq_ && frame.fseq <= *last_fseq_) return {};
  last_fseq_ = frame.fseq;

  std::map<std::int32_t, const FiducialState*> rows;
  for (const auto& s : frame.states) rows[s.session_id] = &s;

  std::vector<SurfaceEvent> events;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (!frame.alive.contains(it->first)) {
      events.push_back({EventKind::Remove, it->second, frame.fseq});
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
  for (auto sid : frame.alive) {
    const auto row = rows.find(sid);
    const auto known = sessions_.find(sid);
    if (known == sessions_.end()) {
      FiducialState state;
      if (row != rows.end()) {
        state = *row->second;
      } else {
        state.session_id = sid;
        state.class_id = kUnknownClass;
      }
      sessions_.emplace(sid, state);
      events.push_back({EventKind::Add, state, frame.fseq});
    } else if (row != rows.end()) {
      known->second = *row->second;
      events.push_back({EventKind::Update, known->second, frame.fseq});
    }
  }
  return events;
}

}  // namespace stagewire::tuio
