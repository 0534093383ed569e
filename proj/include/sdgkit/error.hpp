#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdgkit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: malformed records, invariant violations, missing files.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A parse failure tied to a line of an input file.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Failure talking to a chat-completion endpoint.
class TransportError : public Error {
 public:
  enum class Kind { auth_failed, rate_limited, transport_failed, malformed_response, not_cached };

  TransportError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline const char* to_string(TransportError::Kind kind) {
  switch (kind) {
    case TransportError::Kind::auth_failed: return "AuthFailed";
    case TransportError::Kind::rate_limited: return "RateLimited";
    case TransportError::Kind::transport_failed: return "TransportFailed";
    case TransportError::Kind::malformed_response: return "MalformedResponse";
    case TransportError::Kind::not_cached: return "NotCached";
  }
  return "Unknown";
}

}  // namespace sdgkit
