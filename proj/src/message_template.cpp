#include "stagewire/message_template.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json_util.hpp"
#include "stagewire/error.hpp"

namespace stagewire {
namespace {

bool contains(std::span<const std::string_view> names, std::string_view name) {
  return std::find(names.begin(), names.end(), name) != names.end();
}

const char* type_key(ArgTemplate::Type t) {
  switch (t) {
    case ArgTemplate::Type::Int: return "int";
    case ArgTemplate::Type::Float: return "float";
    default: return "string";
  }
}

}  // namespace

bool MessageTemplate::uses(std::string_view placeholder) const {
  return std::any_of(args.begin(), args.end(), [&](const ArgTemplate& a) { return a.placeholder == placeholder; });
}

void Bindings::set(std::string_view name, double value) {
  for (auto& [k, v] : values_)
    if (k == name) {
      v = value;
      return;
    }
  values_.emplace_back(name, value);
}

const double* Bindings::find(std::string_view name) const {
  for (const auto& [k, v] : values_)
    if (k == name) return &v;
  return nullptr;
}

MessageTemplate parse_message_template(const nlohmann::json& j, std::span<const std::string_view> allowed,
                                       std::span<const std::string_view> float_names,
                                       std::span<const std::string_view> int_names, const std::string& where) {
  detail::expect_keys(j, {"address"}, {"args"}, where);
  MessageTemplate t;
  t.address = detail::get_string(j, "address", where);
  try {
    osc::validate_address(t.address);
  } catch (const Error& e) {
    throw Error(Errc::InvalidRule, where + ": " + e.what());
  }
  if (!j.contains("args")) return t;
  const auto& args = j.at("args");
  if (!args.is_array()) throw ParseError(0, where + ": \"args\" must be an array");

  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    const std::string at = where + " arg " + std::to_string(i);
    if (!a.is_object() || a.size() != 1) throw ParseError(0, at + ": expected one of {\"int\":..}, {\"float\":..}, {\"string\":..}");
    const std::string& key = a.begin().key();
    const auto& value = a.begin().value();
    ArgTemplate arg;
    if (key == "int") {
      arg.type = ArgTemplate::Type::Int;
    } else if (key == "float") {
      arg.type = ArgTemplate::Type::Float;
    } else if (key == "string") {
      arg.type = ArgTemplate::Type::String;
    } else {
      throw ParseError(0, at + ": unknown argument type \"" + key + "\"");
    }

    if (value.is_string()) {
      const auto s = value.get<std::string>();
      if (arg.type != ArgTemplate::Type::String || (s.size() > 2 && s.front() == '{' && s.back() == '}')) {
        if (s.size() < 3 || s.front() != '{' || s.back() != '}')
          throw Error(Errc::InvalidRule, at + ": expected a number or a {placeholder}, got \"" + s + "\"");
        arg.placeholder = s.substr(1, s.size() - 2);
        if (!contains(allowed, arg.placeholder))
          throw Error(Errc::InvalidRule, at + ": placeholder {" + arg.placeholder + "} is not available here");
        if (arg.type == ArgTemplate::Type::String ||
            (arg.type == ArgTemplate::Type::Int && !contains(int_names, arg.placeholder)) ||
            (arg.type == ArgTemplate::Type::Float && !contains(float_names, arg.placeholder)))
          throw Error(Errc::InvalidRule, at + ": placeholder {" + arg.placeholder + "} cannot fill a " + key + " argument");
      } else {
        if (s.find('\0') != std::string::npos) throw Error(Errc::InvalidRule, at + ": string contains NUL");
        arg.literal = s;
      }
    } else if (arg.type == ArgTemplate::Type::Int && value.is_number_integer()) {
      const auto v = value.get<std::int64_t>();
      if (v < std::numeric_limits<std::int32_t>::min() || v > std::numeric_limits<std::int32_t>::max())
        throw Error(Errc::InvalidRule, at + ": int literal out of 32-bit range");
      arg.literal = static_cast<std::int32_t>(v);
    } else if (arg.type == ArgTemplate::Type::Float && value.is_number()) {
      arg.literal = value.get<float>();
    } else {
      throw ParseError(0, at + ": literal does not match type \"" + key + "\"");
    }
    t.args.push_back(std::move(arg));
  }
  return t;
}

osc::Message render(const MessageTemplate& t, const Bindings& bindings) {
  osc::Message m{t.address};
  m.args.reserve(t.args.size());
  for (const auto& a : t.args) {
    if (!a.is_placeholder()) {
      std::visit([&](const auto& v) { m.args.emplace_back(v); }, a.literal);
      continue;
    }
    const double* v = bindings.find(a.placeholder);
    if (v == nullptr) throw Error(Errc::InvalidArgument, "no value for placeholder {" + a.placeholder + "}");
    if (a.type == ArgTemplate::Type::Int)
      m.args.emplace_back(static_cast<std::int32_t>(std::llround(*v)));
    else
      m.args.emplace_back(static_cast<float>(*v));
  }
  return m;
}

nlohmann::json to_json(const MessageTemplate& t) {
  nlohmann::json args = nlohmann::json::array();
  for (const auto& a : t.args) {
    nlohmann::json value;
    if (a.is_placeholder())
      value = "{" + a.placeholder + "}";
    else
      std::visit([&](const auto& v) { value = v; }, a.literal);
    args.push_back({{type_key(a.type), value}});
  }
  return {{"address", t.address}, {"args", args}};
}

}  // namespace stagewire
