#pragma once

/// @file correlation.hpp
/// Matching RPC replies to blocked invokers. An invocation carries a fresh
/// `message_id`; its reply carries the same value as `in_reply_to`.

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>

#include "rowe/notification.hpp"
#include "rowe/wire.hpp"

namespace rowe {

/// Produces ids of the form `<32 hex digits>-<counter>`. The nonce is drawn
/// from std::random_device once per generator.
class MessageIdGenerator {
 public:
  MessageIdGenerator();
  explicit MessageIdGenerator(std::string nonce) : nonce_(std::move(nonce)) {}

  std::string next() { return nonce_ + "-" + std::to_string(++counter_); }
  [[nodiscard]] const std::string& nonce() const { return nonce_; }

  static std::string random_nonce();

 private:
  std::string nonce_;
  std::uint64_t counter_ = 0;
};

/// Pending invocations keyed by message id. Not synchronized; the endpoint
/// serializes access.
class CorrelationTable {
 public:
  /// Throws UsageError if @p message_id is already pending.
  NotificationHandle register_invocation(const std::string& message_id);

  /// Routes a decoded message. Returns false for non-replies (no string
  /// `in_reply_to`), which belong on the incoming queue. Replies are always
  /// consumed: a matching one completes its waiter with the message as
  /// result, an unmatched one is counted as late and dropped.
  bool try_complete(const Message& m);

  /// Signals `timed_out` and forgets the entry. Returns whether it existed.
  bool cancel(const std::string& message_id);

  /// Signals `closed` to every pending waiter and empties the table.
  void close_all();

  [[nodiscard]] std::size_t size() const { return pending_.size(); }
  [[nodiscard]] bool empty() const { return pending_.empty(); }
  [[nodiscard]] bool contains(const std::string& id) const { return pending_.contains(id); }
  [[nodiscard]] std::uint64_t late_reply_count() const { return late_replies_; }

 private:
  std::unordered_map<std::string, NotificationHandle> pending_;
  std::uint64_t late_replies_ = 0;
};

}  // namespace rowe
