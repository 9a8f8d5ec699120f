#include "rowe/correlation.hpp"

#include <array>
#include <random>

#include <fmt/format.h>

#include "rowe/errors.hpp"

namespace rowe {

MessageIdGenerator::MessageIdGenerator() : nonce_(random_nonce()) {}

std::string MessageIdGenerator::random_nonce() {
  std::random_device rd;
  std::array<std::uint32_t, 4> words{};
  for (auto& w : words) w = rd();
  return fmt::format("{:08x}{:08x}{:08x}{:08x}", words[0], words[1], words[2], words[3]);
}

NotificationHandle CorrelationTable::register_invocation(const std::string& message_id) {
  auto handle = make_notification();
  if (!pending_.emplace(message_id, handle).second) {
    throw UsageError("rowe: invocation '" + message_id + "' is already pending");
  }
  return handle;
}

bool CorrelationTable::try_complete(const Message& m) {
  const auto it = m.find(std::string(kInReplyToKey));
  if (it == m.end() || !it->is_string()) return false;
  const auto entry = pending_.find(it->get_ref<const std::string&>());
  if (entry == pending_.end()) {
    ++late_replies_;
    return true;
  }
  entry->second->signal(WaitStatus::completed, std::optional<Message>(std::in_place, m));
  pending_.erase(entry);
  return true;
}

bool CorrelationTable::cancel(const std::string& message_id) {
  const auto entry = pending_.find(message_id);
  if (entry == pending_.end()) return false;
  entry->second->signal(WaitStatus::timed_out);
  pending_.erase(entry);
  return true;
}

void CorrelationTable::close_all() {
  for (auto& [id, waiter] : pending_) waiter->signal(WaitStatus::closed);
  pending_.clear();
}

}  // namespace rowe
