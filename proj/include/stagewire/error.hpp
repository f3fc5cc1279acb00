#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stagewire {

enum class Errc {
  // osc
  InvalidAddress,
  InvalidArgument,
  OversizeBlob,
  Oversize,
  Truncated,
  BadAlignment,
  BadPadding,
  MissingTypeTags,
  UnknownTypeTag,
  TrailingBytes,
  BadMagic,
  DepthExceeded,
  MalformedPattern,
  // tuio
  NotTuio,
  MalformedRow,
  MissingFseq,
  InconsistentAlive,
  InvariantViolation,
  // pulse
  InsufficientHistory,
  NonMonotonicTime,
  InsufficientEvents,
  InvalidConfig,
  // bus
  InvalidEndpoint,
  DuplicateName,
  Closed,
  SocketFailure,
  BindFailure,
  // cue / sim / cli
  ParseError,
  InvalidRule,
  ScriptInvalid,
  WriteFailure,
};

std::string_view errc_name(Errc code) noexcept;

/// All failures in the toolkit surface as this exception; `code()` is the
/// stable machine-readable part, `what()` is "<Code>: detail".
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// ParseError that remembers the 1-based line it refers to (0 = unknown).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& detail);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace stagewire
