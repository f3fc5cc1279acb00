#pragma once

// OSC 1.0 wire codec (type tags i, f, s, b) and address-pattern matching.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace stagewire::osc {

using Bytes = std::vector<std::uint8_t>;

/// Largest datagram we will produce or accept (UDP payload limit).
inline constexpr std::size_t kMaxPacketSize = 65507;
inline constexpr int kDefaultMaxDepth = 8;

struct Blob {
  Bytes bytes;
  bool operator==(const Blob&) const = default;
};

/// One argument. Floats compare by bit pattern (see `same_arg`), so NaN
/// payloads and -0.0 survive round trips and equality checks.
using Arg = std::variant<std::int32_t, float, std::string, Blob>;

bool same_arg(const Arg& a, const Arg& b) noexcept;
char type_tag(const Arg& a) noexcept;

struct Message {
  std::string address;
  std::vector<Arg> args;

  Message() = default;
  Message(std::string addr, std::vector<Arg> a = {}) : address(std::move(addr)), args(std::move(a)) {}

  friend bool operator==(const Message& a, const Message& b) noexcept;
};

/// 64-bit NTP fixed point (seconds << 32 | fraction). 1 means "immediately".
struct TimeTag {
  std::uint64_t ntp = 1;

  static constexpr TimeTag immediately() { return {1}; }
  std::uint32_t seconds() const { return static_cast<std::uint32_t>(ntp >> 32); }
  std::uint32_t fraction() const { return static_cast<std::uint32_t>(ntp); }
  bool operator==(const TimeTag&) const = default;
};

struct Packet;

struct Bundle {
  TimeTag timetag;
  std::vector<Packet> elements;

  friend bool operator==(const Bundle& a, const Bundle& b) noexcept;
};

/// Either a message or a (possibly nested) bundle.
struct Packet {
  std::variant<Message, Bundle> body;

  Packet(Message m) : body(std::move(m)) {}
  Packet(Bundle b) : body(std::move(b)) {}

  bool is_message() const { return std::holds_alternative<Message>(body); }
  bool is_bundle() const { return std::holds_alternative<Bundle>(body); }
  const Message& message() const { return std::get<Message>(body); }
  const Bundle& bundle() const { return std::get<Bundle>(body); }

  friend bool operator==(const Packet& a, const Packet& b) noexcept;
};

/// Throws Error{InvalidAddress} unless `address` starts with '/' and has no
/// NUL or whitespace.
void validate_address(std::string_view address);

Bytes encode_message(const Message& msg);
Message decode_message(std::span<const std::uint8_t> buf);

Bytes encode_bundle(const Bundle& bundle, int max_depth = kDefaultMaxDepth);
Bundle decode_bundle(std::span<const std::uint8_t> buf, int max_depth = kDefaultMaxDepth);

Bytes encode_packet(const Packet& packet, int max_depth = kDefaultMaxDepth);
/// Dispatches on the first byte: '#' is a bundle, anything else a message.
Packet decode_packet(std::span<const std::uint8_t> buf, int max_depth = kDefaultMaxDepth);

/// Nesting depth of a bundle: 1 for a bundle holding only messages.
int bundle_depth(const Bundle& bundle) noexcept;

/// OSC address-pattern match. Supports '?', '*', '[...]' (with '!' and
/// ranges) and '{a,b}'. Wildcards never match '/'.
bool match_address(std::string_view pattern, std::string_view address);

/// Throws Error{MalformedPattern} for unterminated '[' or '{'.
void validate_pattern(std::string_view pattern);

/// Human-readable single line, e.g. `/cue/card ,if 4 0.5`.
std::string to_string(const Message& msg);
std::string to_string(const Packet& packet);

std::string to_hex(std::span<const std::uint8_t> bytes);
/// Throws Error{ParseError} on odd length or a non-hex digit.
Bytes from_hex(std::string_view hex);

}  // namespace stagewire::osc
