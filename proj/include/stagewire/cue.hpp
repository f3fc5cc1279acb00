#pragma once

// Declarative cue rules: surface events, heartbeats and arbitrary OSC input
// mapped onto outbound cue messages.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "stagewire/message_template.hpp"
#include "stagewire/osc.hpp"
#include "stagewire/pulse.hpp"
#include "stagewire/tuio.hpp"

namespace stagewire::cue {

inline constexpr double kDefaultMaxRateHz = 30.0;

struct FiducialAdd {
  std::int32_t class_id;
};
struct FiducialRemove {
  std::int32_t class_id;
};
struct Rect {
  double x0, y0, x1, y1;
};
/// Fires when a session of the class moves from outside to inside the
/// rectangle (edges inclusive). Re-arms when it leaves.
struct RegionEnter {
  std::int32_t class_id;
  Rect rect;
};
struct Heartbeat {};
struct OscMatch {
  std::string pattern;
};

enum class Axis { X, Y, Angle };

/// Linear map of one pose axis from [in_lo, in_hi] onto [out_lo, out_hi],
/// clamped at the ends, emitted at most max_rate_hz per session.
struct Continuous {
  std::int32_t class_id;
  Axis axis;
  double in_lo, in_hi;
  double out_lo, out_hi;
  double max_rate_hz = kDefaultMaxRateHz;
};

using Match = std::variant<FiducialAdd, FiducialRemove, RegionEnter, Heartbeat, OscMatch, Continuous>;

struct CueRule {
  std::string id;
  Match match;
  MessageTemplate emit;
};

struct CueEmission {
  double t_ms = 0;
  std::string rule_id;
  osc::Message message;

  bool operator==(const CueEmission&) const = default;
};

/// Loads a rules document (JSON array of rule objects). Structural problems
/// and unknown fields raise ParseError; violated rule invariants raise
/// Error{InvalidRule}.
std::vector<CueRule> load_rules(std::string_view document);
std::string dump_rules(const std::vector<CueRule>& rules);

/// Mapping used by Continuous rules; exact at both ends of the range.
double map_axis(const Continuous& rule, double raw) noexcept;

/// `t_ms<TAB>rule_id<TAB>message` with three decimals on the time.
std::string format_emission(const CueEmission& e);

/// Evaluates rules in file order; every matching rule fires. Single owner.
class Engine {
 public:
  explicit Engine(std::vector<CueRule> rules);

  std::vector<CueEmission> eval_event(const tuio::SurfaceEvent& event, double t_ms);
  std::vector<CueEmission> eval_event(const pulse::HeartbeatEvent& event, double t_ms);
  /// OscMatch rules. A template using {value} takes the first numeric
  /// argument; messages without one do not fire such a rule.
  std::vector<CueEmission> eval_event(const osc::Message& message, double t_ms);

  std::vector<CueEmission> eval_frame_continuous(const tuio::FiducialState& state, double t_ms);

  const std::vector<CueRule>& rules() const { return rules_; }

 private:
  using Key = std::pair<std::size_t, std::int32_t>;  // (rule index, session)

  void forget_session(std::int32_t session);

  std::vector<CueRule> rules_;
  std::set<Key> add_fired_;
  std::set<Key> inside_;
  std::map<Key, double> last_continuous_;
};

}  // namespace stagewire::cue
