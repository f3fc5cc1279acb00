#pragma once

// Outbound message templates: an address plus typed arguments that are
// either literals or "{name}" placeholders filled in at emit time.
//
// JSON form: {"address": "/cue/card", "args": [{"int": "{class}"}, {"float": 0.5}, {"string": "go"}]}

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "stagewire/osc.hpp"

namespace stagewire {

struct ArgTemplate {
  enum class Type { Int, Float, String };

  Type type = Type::Int;
  std::variant<std::int32_t, float, std::string> literal;
  std::string placeholder;  // name without braces; empty for literals

  bool is_placeholder() const { return !placeholder.empty(); }
};

struct MessageTemplate {
  std::string address;
  std::vector<ArgTemplate> args;

  bool uses(std::string_view placeholder) const;
};

/// Placeholder values available when rendering.
class Bindings {
 public:
  Bindings() = default;
  Bindings(std::initializer_list<std::pair<std::string_view, double>> values) : values_(values) {}

  void set(std::string_view name, double value);
  const double* find(std::string_view name) const;

 private:
  std::vector<std::pair<std::string_view, double>> values_;
};

/// `allowed` lists placeholder names valid in this context. `float_names`
/// and `int_names` say which of them may fill which argument type. Throws
/// Error{InvalidRule} on a bad address, unknown placeholder or type clash,
/// and ParseError on structural problems.
MessageTemplate parse_message_template(const nlohmann::json& j, std::span<const std::string_view> allowed,
                                       std::span<const std::string_view> float_names,
                                       std::span<const std::string_view> int_names, const std::string& where);

/// Throws Error{InvalidArgument} if a placeholder has no binding.
osc::Message render(const MessageTemplate& t, const Bindings& bindings);

nlohmann::json to_json(const MessageTemplate& t);

}  // namespace stagewire
