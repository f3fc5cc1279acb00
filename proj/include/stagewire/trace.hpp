#pragma once

// Packet traces: UTF-8 text, one datagram per line,
// `t_ms<TAB>in|out<TAB>hex(payload)`, with t_ms non-decreasing.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "stagewire/osc.hpp"

namespace stagewire::trace {

enum class Direction { In, Out };

struct TracePacket {
  std::int64_t t_ms = 0;
  Direction direction = Direction::In;
  osc::Bytes payload;

  bool operator==(const TracePacket&) const = default;
};

/// One line including the trailing newline.
std::string format_line(const TracePacket& p);

/// Throws ParseError carrying the 1-based line number of the first bad line
/// (bad field, odd hex, or time going backwards).
std::vector<TracePacket> parse_trace(std::string_view text);

}  // namespace stagewire::trace
