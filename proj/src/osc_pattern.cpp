#include <bitset>
#include <string>
#include <vector>

#include "stagewire/error.hpp"
#include "stagewire/osc.hpp"

namespace stagewire::osc {
namespace {

struct Token {
  enum Kind { Literal, AnyChar, Star, Class, Alternation };

  explicit Token(Kind k, char c = 0) : kind(k), literal(c) {}

  Kind kind;
  char literal;
  std::bitset<256> chars;  // Class members
  bool negated = false;
  std::vector<std::string> alternatives;
};

std::vector<Token> tokenize(std::string_view p) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < p.size()) {
    const char c = p[i];
    if (c == '?') {
      tokens.emplace_back(Token::AnyChar);
      ++i;
    } else if (c == '*') {
      // Consecutive stars are equivalent to one.
      if (tokens.empty() || tokens.back().kind != Token::Star) tokens.emplace_back(Token::Star);
      ++i;
    } else if (c == '[') {
      const auto close = p.find(']', i + 1);
      if (close == std::string_view::npos) throw Error(Errc::MalformedPattern, "unterminated '[' in \"" + std::string(p) + "\"");
      Token t(Token::Class);
      std::size_t j = i + 1;
      if (j < close && p[j] == '!') {
        t.negated = true;
        ++j;
      }
      while (j < close) {
        const auto lo = static_cast<unsigned char>(p[j]);
        if (j + 2 < close && p[j + 1] == '-') {
          const auto hi = static_cast<unsigned char>(p[j + 2]);
          for (unsigned v = lo; v <= hi; ++v) t.chars.set(v);
          j += 3;
        } else {
          t.chars.set(lo);
          ++j;
        }
      }
      tokens.push_back(std::move(t));
      i = close + 1;
    } else if (c == '{') {
      const auto close = p.find('}', i + 1);
      if (close == std::string_view::npos) throw Error(Errc::MalformedPattern, "unterminated '{' in \"" + std::string(p) + "\"");
      Token t(Token::Alternation);
      std::size_t start = i + 1;
      for (std::size_t j = start; j <= close; ++j) {
        if (j == close || p[j] == ',') {
          t.alternatives.emplace_back(p.substr(start, j - start));
          start = j + 1;
        }
      }
      tokens.push_back(std::move(t));
      i = close + 1;
    } else {
      tokens.emplace_back(Token::Literal, c);
      ++i;
    }
  }
  return tokens;
}

class Matcher {
 public:
  Matcher(const std::vector<Token>& tokens, std::string_view address)
      : tokens_(tokens), address_(address), memo_((tokens.size() + 1) * (address.size() + 1), kUnknown) {}

  bool run() { return match(0, 0); }

 private:
  static constexpr signed char kUnknown = -1;

  bool match(std::size_t ti, std::size_t ai) {
    auto& slot = memo_[ti * (address_.size() + 1) + ai];
    if (slot != kUnknown) return slot != 0;
    const bool result = step(ti, ai);
    slot = result ? 1 : 0;
    return result;
  }

  bool step(std::size_t ti, std::size_t ai) {
    if (ti == tokens_.size()) return ai == address_.size();
    const Token& t = tokens_[ti];
    const bool have = ai < address_.size();
    const char c = have ? address_[ai] : '\0';
    switch (t.kind) {
      case Token::Literal: return have && c == t.literal && match(ti + 1, ai + 1);
      case Token::AnyChar: return have && c != '/' && match(ti + 1, ai + 1);
      case Token::Star:
        for (std::size_t k = ai;; ++k) {
          if (match(ti + 1, k)) return true;
          if (k == address_.size() || address_[k] == '/') return false;
        }
      case Token::Class:
        return have && c != '/' && (t.chars.test(static_cast<unsigned char>(c)) != t.negated) && match(ti + 1, ai + 1);
      case Token::Alternation:
        for (const auto& alt : t.alternatives)
          if (address_.substr(ai).starts_with(alt) && match(ti + 1, ai + alt.size())) return true;
        return false;
    }
    return false;
  }

  const std::vector<Token>& tokens_;
  std::string_view address_;
  std::vector<signed char> memo_;
};

}  // namespace

void validate_pattern(std::string_view pattern) {
  if (pattern.empty() || pattern.front() != '/')
    throw Error(Errc::InvalidAddress, "pattern must start with '/': \"" + std::string(pattern) + "\"");
  tokenize(pattern);
}

bool match_address(std::string_view pattern, std::string_view address) {
  if (pattern.empty() || pattern.front() != '/')
    throw Error(Errc::InvalidAddress, "pattern must start with '/': \"" + std::string(pattern) + "\"");
  if (address.empty() || address.front() != '/')
    throw Error(Errc::InvalidAddress, "address must start with '/': \"" + std::string(address) + "\"");
  const auto tokens = tokenize(pattern);
  return Matcher(tokens, address).run();
}

}  // namespace stagewire::osc
