#pragma once

/// @file ttl_queue.hpp
/// A message queue that is simultaneously a FIFO and a list ordered by
/// expiry date. Every node sits on two doubly-linked lists at once:
///
///   fifo:   head -> ... -> tail      (strictly increasing enqueue sequence)
///   expiry: head -> ... -> tail      (non-decreasing expiry, ties by sequence)
///
/// Expired messages are always a prefix of the expiry list, so purging costs
/// one link inspection per purged node plus one. Removing any node given its
/// handle is O(1).
///
/// Not synchronized: one owner mutates the queue at a time.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rowe/errors.hpp"
#include "rowe/ttl.hpp"

namespace rowe {

template <class T>
class DualOrderQueue {
  struct Node {
    T value;
    std::uint64_t seq = 0;
    TimePoint expiry = kNever;
    Node* fifo_prev = nullptr;
    Node* fifo_next = nullptr;
    Node* exp_prev = nullptr;
    Node* exp_next = nullptr;
    const DualOrderQueue* owner = nullptr;
    // Owning reference while linked; reset on unlink so handles observe removal.
    std::shared_ptr<Node> self;
  };

 public:
  /// Refers to one enqueued node. Stays safe to hold after the node is
  /// removed; remove() then reports a usage error.
  class Handle {
   public:
    Handle() = default;
    [[nodiscard]] bool linked() const {
      auto n = node_.lock();
      return n && n->owner != nullptr;
    }

   private:
    friend class DualOrderQueue;
    explicit Handle(std::weak_ptr<Node> n) : node_(std::move(n)) {}
    std::weak_ptr<Node> node_;
  };

  explicit DualOrderQueue(std::optional<std::size_t> capacity = std::nullopt) : capacity_(capacity) {}
  DualOrderQueue(const DualOrderQueue&) = delete;
  DualOrderQueue& operator=(const DualOrderQueue&) = delete;
  ~DualOrderQueue() { clear(); }

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] bool empty() const { return size_ == 0; }
  [[nodiscard]] bool full() const { return capacity_ && size_ >= *capacity_; }
  [[nodiscard]] std::optional<std::size_t> capacity() const { return capacity_; }

  /// Appends at the FIFO tail with expiry now + ttl. Throws QueueFullError.
  Handle enqueue(T value, Ttl ttl, TimePoint now) { return enqueue_until(std::move(value), ttl.deadline_from(now)); }

  /// Appends with an absolute expiry (kNever for no expiry).
  Handle enqueue_until(T value, TimePoint expiry) {
    if (full()) throw QueueFullError();
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->seq = next_seq_++;
    node->expiry = expiry;
    node->owner = this;
    node->self = node;
    Node* n = node.get();

    n->fifo_prev = fifo_tail_;
    if (fifo_tail_) fifo_tail_->fifo_next = n; else fifo_head_ = n;
    fifo_tail_ = n;

    // Backward scan: near-monotone deadlines stop after one step.
    Node* after = exp_tail_;
    while (after && after->expiry > expiry) after = after->exp_prev;
    n->exp_prev = after;
    n->exp_next = after ? after->exp_next : exp_head_;
    if (n->exp_next) n->exp_next->exp_prev = n; else exp_tail_ = n;
    if (after) after->exp_next = n; else exp_head_ = n;

    ++size_;
    return Handle{node};
  }

  /// Removes every node with expiry <= now, oldest deadline first, handing
  /// each value to @p on_expired. Returns the number removed.
  template <class OnExpired>
  std::size_t purge_expired(TimePoint now, OnExpired&& on_expired) {
    std::size_t purged = 0;
    while (exp_head_) {
      ++inspections_;
      if (exp_head_->expiry > now) break;
      on_expired(unlink(exp_head_));
      ++purged;
    }
    return purged;
  }
  std::size_t purge_expired(TimePoint now) {
    return purge_expired(now, [](T&&) {});
  }

  /// Purges, then pops the FIFO head. Never returns an expired value.
  template <class OnExpired>
  std::optional<T> dequeue_front(TimePoint now, OnExpired&& on_expired) {
    purge_expired(now, on_expired);
    if (!fifo_head_) return std::nullopt;
    return unlink(fifo_head_);
  }
  std::optional<T> dequeue_front(TimePoint now) {
    return dequeue_front(now, [](T&&) {});
  }

  /// O(1) removal. Throws UsageError if @p h is not linked in this queue.
  T remove(const Handle& h) {
    auto n = h.node_.lock();
    if (!n || n->owner != this) throw UsageError("rowe: queue handle is not linked in this queue");
    return unlink(n.get());
  }

  /// Earliest expiry in the queue, or kNever.
  [[nodiscard]] TimePoint next_expiry() const { return exp_head_ ? exp_head_->expiry : kNever; }

  /// Removes everything, in FIFO order.
  std::vector<T> drain() {
    std::vector<T> out;
    out.reserve(size_);
    while (fifo_head_) out.push_back(unlink(fifo_head_));
    return out;
  }

  void clear() {
    while (fifo_head_) unlink(fifo_head_);
  }

  /// Visits (value, seq, expiry) in FIFO order.
  template <class F>
  void for_each_fifo(F&& f) const {
    for (const Node* n = fifo_head_; n; n = n->fifo_next) f(n->value, n->seq, n->expiry);
  }

  /// Visits (value, seq, expiry) in expiry order.
  template <class F>
  void for_each_expiry(F&& f) const {
    for (const Node* n = exp_head_; n; n = n->exp_next) f(n->value, n->seq, n->expiry);
  }

  /// Number of expiry comparisons made by purges so far.
  [[nodiscard]] std::uint64_t expiry_inspections() const { return inspections_; }
  void reset_expiry_inspections() { inspections_ = 0; }

  /// Checks both link structures. Returns a description of the first broken
  /// invariant, or nullopt when consistent. O(n log n); meant for tests.
  [[nodiscard]] std::optional<std::string> check_invariants() const {
    std::vector<const Node*> fifo;
    const Node* prev = nullptr;
    for (const Node* n = fifo_head_; n; n = n->fifo_next) {
      if (n->fifo_prev != prev) return "fifo back-link mismatch";
      if (prev && prev->seq >= n->seq) return "fifo sequence not increasing";
      if (n->owner != this || n->self.get() != n) return "fifo node not owned";
      fifo.push_back(n);
      prev = n;
      if (fifo.size() > size_) return "fifo longer than size";
    }
    if (prev != fifo_tail_) return "fifo tail mismatch";

    std::vector<const Node*> exp;
    prev = nullptr;
    for (const Node* n = exp_head_; n; n = n->exp_next) {
      if (n->exp_prev != prev) return "expiry back-link mismatch";
      if (prev && (prev->expiry > n->expiry || (prev->expiry == n->expiry && prev->seq >= n->seq))) {
        return "expiry order broken";
      }
      exp.push_back(n);
      prev = n;
      if (exp.size() > size_) return "expiry list longer than size";
    }
    if (prev != exp_tail_) return "expiry tail mismatch";

    if (fifo.size() != size_ || exp.size() != size_) return "size mismatch";
    std::sort(fifo.begin(), fifo.end());
    std::sort(exp.begin(), exp.end());
    if (fifo != exp) return "node sets differ";
    return std::nullopt;
  }

 private:
  T unlink(Node* n) {
    if (n->fifo_prev) n->fifo_prev->fifo_next = n->fifo_next; else fifo_head_ = n->fifo_next;
    if (n->fifo_next) n->fifo_next->fifo_prev = n->fifo_prev; else fifo_tail_ = n->fifo_prev;
    if (n->exp_prev) n->exp_prev->exp_next = n->exp_next; else exp_head_ = n->exp_next;
    if (n->exp_next) n->exp_next->exp_prev = n->exp_prev; else exp_tail_ = n->exp_prev;
    n->fifo_prev = n->fifo_next = n->exp_prev = n->exp_next = nullptr;
    n->owner = nullptr;
    --size_;
    T value = std::move(n->value);
    auto keep = std::move(n->self);  // frees the node on return unless a handle is locking it
    return value;
  }

  std::optional<std::size_t> capacity_;
  std::size_t size_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t inspections_ = 0;
  Node* fifo_head_ = nullptr;
  Node* fifo_tail_ = nullptr;
  Node* exp_head_ = nullptr;
  Node* exp_tail_ = nullptr;
};

}  // namespace rowe
