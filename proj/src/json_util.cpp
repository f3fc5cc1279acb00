#include "json_util.hpp"

#include <algorithm>
#include <cmath>

namespace stagewire::detail {

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    throw ParseError(line, "malformed JSON");
  }
}

void expect_keys(const json& obj, std::initializer_list<std::string_view> required,
                 std::initializer_list<std::string_view> optional, const std::string& where) {
  if (!obj.is_object()) throw ParseError(0, where + ": expected an object");
  for (auto key : required)
    if (!obj.contains(key)) throw ParseError(0, where + ": missing field \"" + std::string(key) + "\"");
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                       std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) throw ParseError(0, where + ": unknown field \"" + key + "\"");
  }
}

bool has(const json& obj, std::string_view key) { return obj.contains(key); }

double get_number(const json& obj, std::string_view key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ParseError(0, where + ": field \"" + std::string(key) + "\" must be a number");
  return v.get<double>();
}

std::int64_t get_integer(const json& obj, std::string_view key, const std::string& where) {
  const auto& v = obj.at(key);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::fabs(d) < 9.0e15) return static_cast<std::int64_t>(d);
  }
  throw ParseError(0, where + ": field \"" + std::string(key) + "\" must be an integer");
}

std::string get_string(const json& obj, std::string_view key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ParseError(0, where + ": field \"" + std::string(key) + "\" must be a string");
  return v.get<std::string>();
}

}  // namespace stagewire::detail
