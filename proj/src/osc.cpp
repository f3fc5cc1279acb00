#include "stagewire/osc.hpp"

#include <bit>
#include <climits>
#include <cstdio>
#include <cstring>

#include "stagewire/error.hpp"

namespace stagewire::osc {
namespace {

constexpr char kBundleMagic[8] = {'#', 'b', 'u', 'n', 'd', 'l', 'e', '\0'};

constexpr std::size_t pad4(std::size_t n) { return (n + 3) & ~std::size_t{3}; }

void put_u32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u64(Bytes& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
  put_u32(out, static_cast<std::uint32_t>(v));
}

void put_padded(Bytes& out, const void* data, std::size_t n, std::size_t padded) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  out.insert(out.end(), p, p + n);
  out.resize(out.size() + (padded - n), 0);
}

void put_string(Bytes& out, std::string_view s) { put_padded(out, s.data(), s.size(), pad4(s.size() + 1)); }

std::size_t string_size(std::string_view s) { return pad4(s.size() + 1); }

std::size_t arg_size(const Arg& a) {
  switch (a.index()) {
    case 0:
    case 1: return 4;
    case 2: return string_size(std::get<std::string>(a));
    default: return 4 + pad4(std::get<Blob>(a).bytes.size());
  }
}

void check_args(const Message& msg) {
  for (const auto& a : msg.args) {
    if (const auto* s = std::get_if<std::string>(&a); s && s->find('\0') != std::string::npos)
      throw Error(Errc::InvalidArgument, "string argument contains NUL");
    if (const auto* b = std::get_if<Blob>(&a); b && b->bytes.size() > static_cast<std::size_t>(INT32_MAX))
      throw Error(Errc::OversizeBlob, "blob of " + std::to_string(b->bytes.size()) + " bytes");
  }
}

std::size_t message_size(const Message& msg) {
  std::size_t n = string_size(msg.address) + pad4(msg.args.size() + 2);
  for (const auto& a : msg.args) n += arg_size(a);
  return n;
}

std::size_t packet_size(const Packet& p);

std::size_t bundle_size(const Bundle& b) {
  std::size_t n = 16;
  for (const auto& e : b.elements) n += 4 + packet_size(e);
  return n;
}

std::size_t packet_size(const Packet& p) {
  return p.is_message() ? message_size(p.message()) : bundle_size(p.bundle());
}

void write_message(Bytes& out, const Message& msg) {
  put_string(out, msg.address);
  std::string tags(1, ',');
  for (const auto& a : msg.args) tags.push_back(type_tag(a));
  put_string(out, tags);
  for (const auto& a : msg.args) {
    switch (a.index()) {
      case 0: put_u32(out, static_cast<std::uint32_t>(std::get<std::int32_t>(a))); break;
      case 1: put_u32(out, std::bit_cast<std::uint32_t>(std::get<float>(a))); break;
      case 2: put_string(out, std::get<std::string>(a)); break;
      default: {
        const auto& bytes = std::get<Blob>(a).bytes;
        put_u32(out, static_cast<std::uint32_t>(bytes.size()));
        put_padded(out, bytes.data(), bytes.size(), pad4(bytes.size()));
      }
    }
  }
}

void validate_packet(const Packet& p);

void write_packet(Bytes& out, const Packet& p);

void write_bundle(Bytes& out, const Bundle& b) {
  out.insert(out.end(), std::begin(kBundleMagic), std::end(kBundleMagic));
  put_u64(out, b.timetag.ntp);
  for (const auto& e : b.elements) {
    const std::size_t at = out.size();
    put_u32(out, 0);
    write_packet(out, e);
    const auto n = static_cast<std::uint32_t>(out.size() - at - 4);
    out[at] = static_cast<std::uint8_t>(n >> 24);
    out[at + 1] = static_cast<std::uint8_t>(n >> 16);
    out[at + 2] = static_cast<std::uint8_t>(n >> 8);
    out[at + 3] = static_cast<std::uint8_t>(n);
  }
}

void write_packet(Bytes& out, const Packet& p) {
  if (p.is_message())
    write_message(out, p.message());
  else
    write_bundle(out, p.bundle());
}

void validate_packet(const Packet& p) {
  if (p.is_message()) {
    validate_address(p.message().address);
    check_args(p.message());
  } else {
    for (const auto& e : p.bundle().elements) validate_packet(e);
  }
}

void check_total(std::size_t n) {
  if (n > kMaxPacketSize)
    throw Error(Errc::Oversize, std::to_string(n) + " bytes exceeds " + std::to_string(kMaxPacketSize));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> buf) : buf_(buf) {}

  bool at_end() const { return pos_ == buf_.size(); }
  std::size_t pos() const { return pos_; }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = (std::uint32_t{buf_[pos_]} << 24) | (std::uint32_t{buf_[pos_ + 1]} << 16) |
                      (std::uint32_t{buf_[pos_ + 2]} << 8) | std::uint32_t{buf_[pos_ + 3]};
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    std::uint64_t hi = u32();
    return (hi << 32) | u32();
  }

  std::string string() {
    const auto* begin = buf_.data() + pos_;
    const auto* nul = static_cast<const std::uint8_t*>(std::memchr(begin, 0, buf_.size() - pos_));
    if (nul == nullptr) throw Error(Errc::Truncated, "unterminated string");
    const std::size_t len = static_cast<std::size_t>(nul - begin);
    const std::size_t padded = pad4(len + 1);
    need(padded);
    check_zero(pos_ + len, pos_ + padded);
    std::string s(reinterpret_cast<const char*>(begin), len);
    pos_ += padded;
    return s;
  }

  Bytes blob() {
    const auto n = static_cast<std::int32_t>(u32());
    if (n < 0) throw Error(Errc::Truncated, "negative blob size");
    const auto len = static_cast<std::size_t>(n);
    need(pad4(len));
    Bytes out(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
              buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
    check_zero(pos_ + len, pos_ + pad4(len));
    pos_ += pad4(len);
    return out;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = buf_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw Error(Errc::Truncated, "need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_));
  }

  void check_zero(std::size_t from, std::size_t to) const {
    for (std::size_t i = from; i < to; ++i)
      if (buf_[i] != 0) throw Error(Errc::BadPadding, "nonzero padding at offset " + std::to_string(i));
  }

  std::span<const std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

void check_frame(std::span<const std::uint8_t> buf) {
  if (buf.size() > kMaxPacketSize) check_total(buf.size());
  if (buf.size() % 4 != 0) throw Error(Errc::BadAlignment, "length " + std::to_string(buf.size()) + " is not a multiple of 4");
  if (buf.empty()) throw Error(Errc::Truncated, "empty packet");
}

Message read_message(std::span<const std::uint8_t> buf) {
  check_frame(buf);
  Reader r(buf);
  Message msg;
  msg.address = r.string();
  validate_address(msg.address);
  if (r.at_end()) throw Error(Errc::MissingTypeTags, "no type tag string");
  const std::string tags = r.string();
  if (tags.empty() || tags[0] != ',') throw Error(Errc::MissingTypeTags, "type tag string must start with ','");
  for (std::size_t i = 1; i < tags.size(); ++i) {
    const char t = tags[i];
    if (t != 'i' && t != 'f' && t != 's' && t != 'b')
      throw Error(Errc::UnknownTypeTag, std::string("type tag '") + t + "'");
  }
  msg.args.reserve(tags.size() - 1);
  for (std::size_t i = 1; i < tags.size(); ++i) {
    switch (tags[i]) {
      case 'i': msg.args.emplace_back(static_cast<std::int32_t>(r.u32())); break;
      case 'f': msg.args.emplace_back(std::bit_cast<float>(r.u32())); break;
      case 's': msg.args.emplace_back(r.string()); break;
      default: msg.args.emplace_back(Blob{r.blob()}); break;
    }
  }
  if (!r.at_end()) throw Error(Errc::TrailingBytes, std::to_string(buf.size() - r.pos()) + " bytes after last argument");
  return msg;
}

Bundle read_bundle(std::span<const std::uint8_t> buf, int depth, int max_depth);

Packet read_packet(std::span<const std::uint8_t> buf, int depth, int max_depth) {
  if (!buf.empty() && buf[0] == '#') return read_bundle(buf, depth, max_depth);
  return read_message(buf);
}

Bundle read_bundle(std::span<const std::uint8_t> buf, int depth, int max_depth) {
  if (depth > max_depth) throw Error(Errc::DepthExceeded, "bundle nesting exceeds " + std::to_string(max_depth));
  check_frame(buf);
  if (buf.size() < 8) throw Error(Errc::Truncated, "bundle header");
  if (std::memcmp(buf.data(), kBundleMagic, 8) != 0) throw Error(Errc::BadMagic, "missing #bundle");
  Reader r(buf.subspan(8));
  Bundle b;
  b.timetag.ntp = r.u64();
  while (!r.at_end()) {
    const auto n = static_cast<std::int32_t>(r.u32());
    if (n < 0 || n % 4 != 0) throw Error(Errc::BadAlignment, "bundle element size " + std::to_string(n));
    b.elements.push_back(read_packet(r.take(static_cast<std::size_t>(n)), depth + 1, max_depth));
  }
  return b;
}

}  // namespace

bool same_arg(const Arg& a, const Arg& b) noexcept {
  if (a.index() != b.index()) return false;
  if (a.index() == 1) return std::bit_cast<std::uint32_t>(std::get<float>(a)) == std::bit_cast<std::uint32_t>(std::get<float>(b));
  return a == b;
}

char type_tag(const Arg& a) noexcept {
  static constexpr char tags[] = {'i', 'f', 's', 'b'};
  return tags[a.index()];
}

bool operator==(const Message& a, const Message& b) noexcept {
  if (a.address != b.address || a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!same_arg(a.args[i], b.args[i])) return false;
  return true;
}

bool operator==(const Bundle& a, const Bundle& b) noexcept {
  return a.timetag == b.timetag && a.elements == b.elements;
}

bool operator==(const Packet& a, const Packet& b) noexcept { return a.body == b.body; }

void validate_address(std::string_view address) {
  if (address.empty() || address.front() != '/')
    throw Error(Errc::InvalidAddress, "address must start with '/': \"" + std::string(address) + "\"");
  for (char c : address) {
    if (c == '\0') throw Error(Errc::InvalidAddress, "address contains NUL");
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f')
      throw Error(Errc::InvalidAddress, "address contains whitespace");
  }
}

int bundle_depth(const Bundle& bundle) noexcept {
  int deepest = 0;
  for (const auto& e : bundle.elements)
    if (e.is_bundle()) deepest = std::max(deepest, bundle_depth(e.bundle()));
  return deepest + 1;
}

Bytes encode_message(const Message& msg) {
  validate_address(msg.address);
  check_args(msg);
  const std::size_t n = message_size(msg);
  check_total(n);
  Bytes out;
  out.reserve(n);
  write_message(out, msg);
  return out;
}

Message decode_message(std::span<const std::uint8_t> buf) { return read_message(buf); }

Bytes encode_bundle(const Bundle& bundle, int max_depth) {
  if (bundle_depth(bundle) > max_depth)
    throw Error(Errc::DepthExceeded, "bundle nesting exceeds " + std::to_string(max_depth));
  for (const auto& e : bundle.elements) validate_packet(e);
  const std::size_t n = bundle_size(bundle);
  check_total(n);
  Bytes out;
  out.reserve(n);
  write_bundle(out, bundle);
  return out;
}

Bundle decode_bundle(std::span<const std::uint8_t> buf, int max_depth) { return read_bundle(buf, 1, max_depth); }

Bytes encode_packet(const Packet& packet, int max_depth) {
  return packet.is_message() ? encode_message(packet.message()) : encode_bundle(packet.bundle(), max_depth);
}

Packet decode_packet(std::span<const std::uint8_t> buf, int max_depth) { return read_packet(buf, 1, max_depth); }

std::string to_string(const Message& msg) {
  std::string out = msg.address;
  out += " ,";
  for (const auto& a : msg.args) out.push_back(type_tag(a));
  char num[32];
  for (const auto& a : msg.args) {
    out.push_back(' ');
    switch (a.index()) {
      case 0: out += std::to_string(std::get<std::int32_t>(a)); break;
      case 1:
        std::snprintf(num, sizeof num, "%.9g", static_cast<double>(std::get<float>(a)));
        out += num;
        break;
      case 2: out += '"' + std::get<std::string>(a) + '"'; break;
      default: out += "blob[" + std::to_string(std::get<Blob>(a).bytes.size()) + "]"; break;
    }
  }
  return out;
}

std::string to_string(const Packet& packet) {
  if (packet.is_message()) return to_string(packet.message());
  const auto& b = packet.bundle();
  std::string out = "#bundle " + std::to_string(b.timetag.ntp) + " [";
  for (std::size_t i = 0; i < b.elements.size(); ++i) {
    out += i ? " ; " : " ";
    out += to_string(b.elements[i]);
  }
  out += " ]";
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw ParseError(0, "odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int hi = nibble(hex[2 * i]);
    const int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw ParseError(0, "invalid hex digit");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

}  // namespace stagewire::osc
