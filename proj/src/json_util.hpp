#pragma once

// Strict JSON helpers shared by the rule and script loaders.

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "stagewire/error.hpp"

namespace stagewire::detail {

using nlohmann::json;

/// Parses a document; syntax errors become ParseError with a line number.
json parse_json(std::string_view text);

/// Fails with ParseError if `obj` is not an object, misses a required key or
/// carries a key outside required + optional.
void expect_keys(const json& obj, std::initializer_list<std::string_view> required,
                 std::initializer_list<std::string_view> optional, const std::string& where);

double get_number(const json& obj, std::string_view key, const std::string& where);
std::int64_t get_integer(const json& obj, std::string_view key, const std::string& where);
std::string get_string(const json& obj, std::string_view key, const std::string& where);
bool has(const json& obj, std::string_view key);

}  // namespace stagewire::detail
