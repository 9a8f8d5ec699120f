#pragma once

// Reference model for DualOrderQueue: a flat vector, linear scans, sorts.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "rowe/ttl.hpp"

namespace rowe::test {

class NaiveQueue {
 public:
  struct Entry {
    int value;
    std::uint64_t seq;
    TimePoint expiry;
  };

  void enqueue(int value, TimePoint expiry) { items_.push_back({value, next_seq_++, expiry}); }

  // Expired values, earliest expiry first (ties by insertion).
  std::vector<int> purge(TimePoint now) {
    std::vector<Entry> dead;
    std::vector<Entry> live;
    for (const auto& e : items_) (e.expiry <= now ? dead : live).push_back(e);
    std::stable_sort(dead.begin(), dead.end(), [](const Entry& a, const Entry& b) { return a.expiry < b.expiry; });
    items_ = std::move(live);
    std::vector<int> out;
    for (const auto& e : dead) out.push_back(e.value);
    return out;
  }

  std::optional<int> dequeue(TimePoint now, std::vector<int>& purged) {
    purged = purge(now);
    if (items_.empty()) return std::nullopt;
    const int v = items_.front().value;
    items_.erase(items_.begin());
    return v;
  }

  bool remove(int value) {
    const auto it = std::find_if(items_.begin(), items_.end(), [&](const Entry& e) { return e.value == value; });
    if (it == items_.end()) return false;
    items_.erase(it);
    return true;
  }

  [[nodiscard]] TimePoint next_expiry() const {
    TimePoint best = kNever;
    for (const auto& e : items_) best = std::min(best, e.expiry);
    return best;
  }

  [[nodiscard]] std::vector<int> fifo() const {
    std::vector<int> out;
    for (const auto& e : items_) out.push_back(e.value);
    return out;
  }

  [[nodiscard]] std::vector<int> by_expiry() const {
    auto sorted = items_;
    std::stable_sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) { return a.expiry < b.expiry; });
    std::vector<int> out;
    for (const auto& e : sorted) out.push_back(e.value);
    return out;
  }

  [[nodiscard]] std::size_t size() const { return items_.size(); }

 private:
  std::vector<Entry> items_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace rowe::test
