#pragma once

#include <stdexcept>
#include <string>
#include <system_error>

namespace rowe {

/// Caller violated an API precondition (non-object message, duplicate id, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A frame or message does not conform to the wire format.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by blocking calls that cannot return a value because the endpoint
/// was closed (as opposed to a timeout, which yields an empty result).
class ClosedError : public std::runtime_error {
 public:
  ClosedError() : std::runtime_error("rowe: endpoint closed") {}
};

class QueueFullError : public std::runtime_error {
 public:
  QueueFullError() : std::runtime_error("rowe: queue capacity exceeded") {}
};

/// Opening an endpoint failed; code() carries the OS cause.
class OpenError : public std::system_error {
 public:
  OpenError(std::error_code ec, const std::string& what) : std::system_error(ec, what) {}
};

}  // namespace rowe
