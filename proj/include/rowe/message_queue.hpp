#pragma once

#include "rowe/notification.hpp"
#include "rowe/ttl_queue.hpp"
#include "rowe/wire.hpp"

namespace rowe {

/// Queue entry: the message plus, for blocking sends, the caller's waiter.
struct QueuedMessage {
  Message message;
  NotificationHandle waiter;
  TimePoint expiry = kNever;
};

using MessageQueue = DualOrderQueue<QueuedMessage>;

/// Purge callback that reports the discard to a blocked sender, if any.
inline void signal_discarded(QueuedMessage&& q) {
  if (q.waiter) q.waiter->signal(WaitStatus::discarded);
}

}  // namespace rowe
