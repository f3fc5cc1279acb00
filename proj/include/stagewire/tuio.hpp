#pragma once

// TUIO 1.1 "/tuio/2Dobj" profile: frame parsing/encoding and session
// tracking for fiducial-tagged objects on the surface.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "stagewire/osc.hpp"

namespace stagewire::tuio {

inline constexpr const char* kObjectAddress = "/tuio/2Dobj";
inline constexpr std::uint16_t kDefaultPort = 3333;
/// fseq value senders use for keep-alive frames.
inline constexpr std::int32_t kKeepAliveFseq = -1;
/// class_id reported for a session that appeared without a set row.
inline constexpr std::int32_t kUnknownClass = -1;

struct FiducialState {
  std::int32_t session_id = 0;
  std::int32_t class_id = 0;
  float x = 0, y = 0;  // normalized [0,1]
  float angle = 0;     // radians [0, 2pi)
  float vel_x = 0, vel_y = 0, vel_rot = 0;
  float accel_motion = 0, accel_rot = 0;

  bool operator==(const FiducialState&) const = default;
};

struct SurfaceFrame {
  std::int32_t fseq = 0;
  std::set<std::int32_t> alive;
  std::vector<FiducialState> states;  // sessions with a set row this frame

  bool operator==(const SurfaceFrame&) const = default;
};

enum class EventKind { Add, Update, Remove };

struct SurfaceEvent {
  EventKind kind;
  FiducialState state;  // last known state for Remove
  std::int32_t frame;

  bool operator==(const SurfaceEvent&) const = default;
};

const char* to_string(EventKind kind) noexcept;

/// Throws Error{InvariantViolation} when a pose is out of range or ids are
/// negative.
void validate_state(const FiducialState& s);

/// Wraps an angle into [0, 2pi).
float normalize_angle(float radians) noexcept;

/// True if every message in the bundle is addressed to /tuio/2Dobj.
bool is_2dobj_bundle(const osc::Bundle& b) noexcept;

SurfaceFrame parse_2dobj_bundle(const osc::Bundle& b);
osc::Bundle encode_2dobj_frame(const SurfaceFrame& frame);

/// Session state for one TUIO stream. Not thread-safe; one owner at a time.
class Tracker {
 public:
  /// Events are ordered: Removes first, then Add/Update, each by ascending
  /// session id.
  std::vector<SurfaceEvent> apply_frame(const SurfaceFrame& frame);

  std::optional<std::int32_t> last_fseq() const { return last_fseq_; }
  std::size_t size() const { return sessions_.size(); }
  const std::map<std::int32_t, FiducialState>& sessions() const { return sessions_; }

 private:
  std::map<std::int32_t, FiducialState> sessions_;
  std::optional<std::int32_t> last_fseq_;
};

}  // namespace stagewire::tuio
