#include "stagewire/error.hpp"

namespace stagewire {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidAddress: return "InvalidAddress";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::OversizeBlob: return "OversizeBlob";
    case Errc::Oversize: return "Oversize";
    case Errc::Truncated: return "Truncated";
    case Errc::BadAlignment: return "BadAlignment";
    case Errc::BadPadding: return "BadPadding";
    case Errc::MissingTypeTags: return "MissingTypeTags";
    case Errc::UnknownTypeTag: return "UnknownTypeTag";
    case Errc::TrailingBytes: return "TrailingBytes";
    case Errc::BadMagic: return "BadMagic";
    case Errc::DepthExceeded: return "DepthExceeded";
    case Errc::MalformedPattern: return "MalformedPattern";
    case Errc::NotTuio: return "NotTuio";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::MissingFseq: return "MissingFseq";
    case Errc::InconsistentAlive: return "InconsistentAlive";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::InsufficientHistory: return "InsufficientHistory";
    case Errc::NonMonotonicTime: return "NonMonotonicTime";
    case Errc::InsufficientEvents: return "InsufficientEvents";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::InvalidEndpoint: return "InvalidEndpoint";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::Closed: return "Closed";
    case Errc::SocketFailure: return "SocketFailure";
    case Errc::BindFailure: return "BindFailure";
    case Errc::ParseError: return "ParseError";
    case Errc::InvalidRule: return "InvalidRule";
    case Errc::ScriptInvalid: return "ScriptInvalid";
    case Errc::WriteFailure: return "WriteFailure";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

ParseError::ParseError(std::size_t line, const std::string& detail)
    : Error(Errc::ParseError, (line ? "line " + std::to_string(line) + ": " : std::string()) + detail),
      line_(line) {}

}  // namespace stagewire
