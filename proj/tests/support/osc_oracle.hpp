#pragma once

// Independent byte-layout oracle: assembles OSC packets by hand from their
// textual pieces, without touching the codec.

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace oracle {

class ByteLayout {
 public:
  ByteLayout& str(const std::string& s) {
    for (char c : s) bytes_.push_back(static_cast<std::uint8_t>(c));
    bytes_.push_back(0);
    while (bytes_.size() % 4) bytes_.push_back(0);
    return *this;
  }
  ByteLayout& be32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) bytes_.push_back(static_cast<std::uint8_t>(v >> shift));
    return *this;
  }
  ByteLayout& raw(std::initializer_list<int> b) {
    for (int v : b) bytes_.push_back(static_cast<std::uint8_t>(v));
    return *this;
  }
  ByteLayout& nested(const ByteLayout& element) {
    be32(static_cast<std::uint32_t>(element.bytes_.size()));
    bytes_.insert(bytes_.end(), element.bytes_.begin(), element.bytes_.end());
    return *this;
  }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

}  // namespace oracle
