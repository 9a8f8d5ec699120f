#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <string_view>
#include <utility>

#include "rowe/ttl.hpp"
#include "rowe/wire.hpp"

namespace rowe {

enum class WaitStatus { pending, sent, discarded, completed, timed_out, closed };

std::string_view to_string(WaitStatus s);

/// One-shot waiter: a status that leaves `pending` exactly once, plus an
/// optional result message. One thread waits, another signals; signals after
/// the first are ignored.
class Notification {
 public:
  /// Returns false if the handle had already been signaled.
  bool signal(WaitStatus status, std::optional<Message> result = std::nullopt) {
    {
      std::lock_guard lock(mu_);
      if (status_ != WaitStatus::pending) return false;
      status_ = status;
      result_ = std::move(result);
    }
    cv_.notify_all();
    return true;
  }

  WaitStatus wait() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return status_ != WaitStatus::pending; });
    return status_;
  }

  /// Returns `pending` if @p deadline passed first.
  WaitStatus wait_until(TimePoint deadline) {
    std::unique_lock lock(mu_);
    if (deadline == kNever) {
      cv_.wait(lock, [&] { return status_ != WaitStatus::pending; });
    } else {
      cv_.wait_until(lock, deadline, [&] { return status_ != WaitStatus::pending; });
    }
    return status_;
  }

  [[nodiscard]] WaitStatus status() const {
    std::lock_guard lock(mu_);
    return status_;
  }

  std::optional<Message> take_result() {
    std::lock_guard lock(mu_);
    return std::exchange(result_, std::nullopt);
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  WaitStatus status_ = WaitStatus::pending;
  std::optional<Message> result_;
};

using NotificationHandle = std::shared_ptr<Notification>;

inline NotificationHandle make_notification() { return std::make_shared<Notification>(); }

inline std::string_view to_string(WaitStatus s) {
  switch (s) {
    case WaitStatus::pending: return "pending";
    case WaitStatus::sent: return "sent";
    case WaitStatus::discarded: return "discarded";
    case WaitStatus::completed: return "completed";
    case WaitStatus::timed_out: return "timed-out";
    case WaitStatus::closed: return "closed";
  }
  return "?";
}

}  // namespace rowe
