#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace quicaudit {

// Base class for every error raised by the library. Callers that only care
// about "something in quicaudit failed" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trace violates a structural invariant (first datagram not a client
// Initial, byte sums inconsistent, ...).
class TraceError : public Error {
 public:
  using Error::Error;
};

// amplification_factor with zero client bytes.
class UndefinedRatioError : public Error {
 public:
  using Error::Error;
};

// Trace outcome or content does not admit a handshake class.
class NotClassifiableError : public Error {
 public:
  using Error::Error;
};

// Operation needs a transport capability that was not available when the
// trace was captured (e.g. frame visibility).
class CapabilityMissingError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace quicaudit
