#pragma once

/// @file endpoint.hpp
/// One side of a single-peer JSON-over-WebSocket connection.
///
/// An endpoint is opened either as a local server (`open_local`) or as a
/// client of a remote one (`open_remote`); every other operation behaves the
/// same in both roles. A dedicated service thread owns the socket and moves
/// messages between the network and two queues:
///
///   caller --send/async_send/invoke/reply--> outgoing --> peer
///   peer --> correlation table (replies) | incoming --receive--> caller
///
/// Messages carry an optional lifetime. One that cannot be written before it
/// expires is discarded; one that arrives with a lifetime and is not
/// received in time is discarded on the receiving side.
///
/// @code
/// auto ep = rowe::Endpoint::open_remote("localhost", 8080);
/// auto reply = ep.invoke(rowe::build_message({{"service", "add-two-numbers"}, {"a", 38}, {"b", 4}}),
///                        rowe::Timeout::millis(1000));
/// @endcode

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "rowe/ttl.hpp"
#include "rowe/wire.hpp"

namespace rowe {

enum class SendStatus {
  sent,       ///< handed to the transport write path
  discarded,  ///< lifetime ran out before the message could be written
  queued,     ///< accepted by a non-blocking operation
  queue_full, ///< outgoing queue at capacity; message dropped (non-blocking only)
  closed,     ///< endpoint closed
};

std::string_view to_string(SendStatus s);

enum class EndpointState { starting, awaiting_peer, connected, closed };

std::string_view to_string(EndpointState s);

enum class Role { local_server, remote_client };

struct EndpointConfig {
  std::optional<std::size_t> outgoing_capacity = 1024;
  std::optional<std::size_t> incoming_capacity = std::nullopt;
  Millis reconnect_initial = Millis{100};
  Millis reconnect_max = Millis{5000};
  std::size_t max_frame_bytes = 16 * 1024 * 1024;
};

struct Counters {
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  /// Messages dropped because their lifetime expired, in either queue.
  std::uint64_t discarded_ttl = 0;
  std::uint64_t dropped_malformed = 0;
  std::uint64_t late_replies = 0;
  /// WebSocket upgrades refused because a peer was already connected.
  std::uint64_t refused_peers = 0;

  friend bool operator==(const Counters&, const Counters&) = default;
};

class Endpoint {
 public:
  /// Listens on @p port (0 picks an ephemeral port, see port()).
  /// Throws OpenError if the port cannot be bound.
  static Endpoint open_local(std::uint16_t port, EndpointConfig config = {});

  /// Connects to @p host:@p port in the background, retrying with
  /// exponential backoff until closed. Never fails at call time.
  static Endpoint open_remote(std::string host, std::uint16_t port, EndpointConfig config = {});

  Endpoint(Endpoint&&) noexcept;
  Endpoint& operator=(Endpoint&&) noexcept;
  ~Endpoint();

  /// Blocks until @p m is written or discarded. If the outgoing queue is
  /// full, first waits for room. The lifetime counts from the enqueue.
  SendStatus send(const Message& m, Ttl ttl = Ttl::infinite());

  /// Enqueues @p m and returns `queued` (or `queue_full` / `closed`).
  SendStatus async_send(const Message& m, Ttl ttl = Ttl::infinite());

  /// Oldest unexpired non-reply message, or nullopt on timeout.
  /// Throws ClosedError if the endpoint is or becomes closed.
  std::optional<Message> receive(Timeout timeout = Timeout::infinite());

  /// Sends @p request with a fresh `message_id` (replacing any present) and
  /// waits for the matching reply. The request's lifetime equals @p timeout.
  /// Returns nullopt on timeout; throws ClosedError on close.
  std::optional<Message> invoke(Message request, Timeout timeout = Timeout::infinite());

  /// Sends a copy of @p body with `in_reply_to` set to @p request's
  /// `message_id`. Throws UsageError if the request has no string
  /// `message_id` or the body already has `in_reply_to`.
  SendStatus reply(const Message& request, const Message& body, Ttl ttl = Ttl::infinite());
  SendStatus async_reply(const Message& request, const Message& body, Ttl ttl = Ttl::infinite());

  /// Idempotent. Wakes every blocked caller and stops the service thread.
  void close();

  [[nodiscard]] Counters counters() const;
  [[nodiscard]] EndpointState state() const;
  [[nodiscard]] Role role() const;
  /// Bound port for local endpoints, target port for remote ones.
  [[nodiscard]] std::uint16_t port() const;
  [[nodiscard]] const std::string& id_nonce() const;

  /// Test hook: true when neither queue holds a message whose expiry is at
  /// or before the service thread's last wake-up.
  [[nodiscard]] bool queues_purged_at_last_wake() const;
  [[nodiscard]] std::size_t pending_invocations() const;
  [[nodiscard]] std::size_t outgoing_size() const;
  [[nodiscard]] std::size_t incoming_size() const;

 private:
  class Impl;
  explicit Endpoint(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace rowe
