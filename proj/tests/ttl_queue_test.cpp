#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "rowe/message_queue.hpp"
#include "rowe/ttl_queue.hpp"
#include "support/queue_model_check.hpp"

using namespace rowe;
using namespace std::chrono_literals;

namespace {

const TimePoint t0 = TimePoint{} + std::chrono::hours(1);

std::vector<int> fifo_of(const DualOrderQueue<int>& q) {
  std::vector<int> out;
  q.for_each_fifo([&](int v, auto, auto) { out.push_back(v); });
  return out;
}

std::vector<int> expiry_of(const DualOrderQueue<int>& q) {
  std::vector<int> out;
  q.for_each_expiry([&](int v, auto, auto) { out.push_back(v); });
  return out;
}

}  // namespace

TEST(DualOrderQueue, InfiniteTtlKeepsInsertionOrder) {
  DualOrderQueue<int> q;
  q.enqueue(1, Ttl::infinite(), t0);
  q.enqueue(2, Ttl::infinite(), t0);
  q.enqueue(3, Ttl::infinite(), t0);
  EXPECT_EQ(fifo_of(q), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(q.size(), 3u);
  EXPECT_FALSE(q.check_invariants());
}

TEST(DualOrderQueue, ExpiryOrderMatchesSortedTtls) {
  DualOrderQueue<int> q;
  const std::vector<int> ttls{300, 100, 200};
  for (int ttl : ttls) q.enqueue(ttl, Ttl::millis(ttl), t0);

  auto oracle = ttls;
  std::sort(oracle.begin(), oracle.end());
  EXPECT_EQ(expiry_of(q), oracle);
  EXPECT_EQ(fifo_of(q), ttls);
}

TEST(DualOrderQueue, InfiniteNodesSortAfterFiniteOnes) {
  DualOrderQueue<int> q;
  q.enqueue(1, Ttl::infinite(), t0);
  q.enqueue(2, Ttl::millis(50), t0);
  q.enqueue(3, Ttl::infinite(), t0);
  q.enqueue(4, Ttl::millis(10), t0);
  EXPECT_EQ(expiry_of(q), (std::vector<int>{4, 2, 1, 3}));
  EXPECT_FALSE(q.check_invariants());
}

TEST(DualOrderQueue, EqualExpiriesStayInEnqueueOrder) {
  DualOrderQueue<int> q;
  for (int i = 0; i < 5; ++i) q.enqueue(i, Ttl::millis(100), t0);
  EXPECT_EQ(expiry_of(q), (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(DualOrderQueue, ZeroTtlIsExpiredAtTheSameInstant) {
  DualOrderQueue<int> q;
  q.enqueue(7, Ttl::millis(0), t0);
  EXPECT_EQ(q.purge_expired(t0), 1u);
  EXPECT_TRUE(q.empty());
}

TEST(DualOrderQueue, DequeueFromEmpty) {
  DualOrderQueue<int> q;
  EXPECT_EQ(q.dequeue_front(t0), std::nullopt);
}

TEST(DualOrderQueue, DequeueIsFifo) {
  DualOrderQueue<int> q;
  q.enqueue(1, Ttl::infinite(), t0);
  q.enqueue(2, Ttl::infinite(), t0);
  EXPECT_EQ(q.dequeue_front(t0), 1);
  EXPECT_EQ(q.dequeue_front(t0), 2);
  EXPECT_EQ(q.dequeue_front(t0), std::nullopt);
}

TEST(DualOrderQueue, DequeueSkipsExpiredAndSignalsItsWaiter) {
  MessageQueue q;
  auto waiter = make_notification();
  q.enqueue(QueuedMessage{Message{{"n", "A"}}, waiter}, Ttl::millis(10), t0);
  q.enqueue(QueuedMessage{Message{{"n", "B"}}, nullptr}, Ttl::infinite(), t0);

  const auto got = q.dequeue_front(t0 + 10ms, signal_discarded);
  ASSERT_TRUE(got);
  EXPECT_EQ(got->message["n"], "B");
  EXPECT_EQ(waiter->status(), WaitStatus::discarded);
  EXPECT_TRUE(q.empty());
}

TEST(DualOrderQueue, PurgeCounts) {
  DualOrderQueue<int> q;
  EXPECT_EQ(q.purge_expired(t0), 0u);
  for (int i = 0; i < 10; ++i) q.enqueue(i, Ttl::millis(i), t0);
  EXPECT_EQ(q.purge_expired(t0 + 100ms), 10u);
  EXPECT_TRUE(q.empty());
  EXPECT_EQ(q.next_expiry(), kNever);
}

TEST(DualOrderQueue, PurgeMatchesBruteForceFilter) {
  std::mt19937 rng(12345);
  for (int round = 0; round < 50; ++round) {
    DualOrderQueue<int> q;
    std::vector<std::pair<int, TimePoint>> all;
    for (int i = 0; i < 200; ++i) {
      const Ttl ttl = rng() % 5 == 0 ? Ttl::infinite() : Ttl::millis(rng() % 1000);
      q.enqueue(i, ttl, t0);
      all.emplace_back(i, ttl.deadline_from(t0));
    }
    const TimePoint now = t0 + Millis(rng() % 1000);
    std::vector<int> purged;
    q.purge_expired(now, [&](int&& v) { purged.push_back(v); });

    std::vector<int> expected;
    for (const auto& [v, expiry] : all) {
      if (expiry <= now) expected.push_back(v);
    }
    std::sort(purged.begin(), purged.end());
    EXPECT_EQ(purged, expected);
    q.for_each_fifo([&](int, auto, TimePoint expiry) { EXPECT_GT(expiry, now); });
  }
}

TEST(DualOrderQueue, RemoveMiddle) {
  DualOrderQueue<int> q;
  q.enqueue(1, Ttl::millis(30), t0);
  auto mid = q.enqueue(2, Ttl::millis(10), t0);
  q.enqueue(3, Ttl::millis(20), t0);
  EXPECT_EQ(q.remove(mid), 2);
  EXPECT_EQ(q.size(), 2u);
  EXPECT_EQ(fifo_of(q), (std::vector<int>{1, 3}));
  EXPECT_EQ(expiry_of(q), (std::vector<int>{3, 1}));
  EXPECT_FALSE(q.check_invariants());
}

TEST(DualOrderQueue, RemoveHeadThenTail) {
  DualOrderQueue<int> q;
  auto a = q.enqueue(1, Ttl::millis(5), t0);
  q.enqueue(2, Ttl::millis(50), t0);
  auto c = q.enqueue(3, Ttl::infinite(), t0);
  q.remove(a);
  q.remove(c);
  EXPECT_EQ(fifo_of(q), std::vector<int>{2});
  EXPECT_EQ(expiry_of(q), std::vector<int>{2});
  EXPECT_EQ(q.next_expiry(), t0 + 50ms);
  EXPECT_FALSE(q.check_invariants());
}

TEST(DualOrderQueue, RemoveUnlinkedHandleIsUsageError) {
  DualOrderQueue<int> q;
  auto h = q.enqueue(1, Ttl::infinite(), t0);
  EXPECT_TRUE(h.linked());
  q.remove(h);
  EXPECT_FALSE(h.linked());
  EXPECT_THROW(q.remove(h), UsageError);

  DualOrderQueue<int> other;
  auto foreign = other.enqueue(2, Ttl::infinite(), t0);
  EXPECT_THROW(q.remove(foreign), UsageError);
  EXPECT_THROW(q.remove(DualOrderQueue<int>::Handle{}), UsageError);
}

TEST(DualOrderQueue, HandleOutlivesQueue) {
  DualOrderQueue<int>::Handle h;
  {
    DualOrderQueue<int> q;
    h = q.enqueue(1, Ttl::infinite(), t0);
  }
  EXPECT_FALSE(h.linked());
}

TEST(DualOrderQueue, NextExpiry) {
  DualOrderQueue<int> q;
  EXPECT_EQ(q.next_expiry(), kNever);
  q.enqueue(1, Ttl::millis(250), t0);
  q.enqueue(2, Ttl::millis(100), t0);
  EXPECT_EQ(q.next_expiry(), t0 + std::min(250ms, 100ms));
  q.purge_expired(t0 + 100ms);
  EXPECT_EQ(q.next_expiry(), t0 + 250ms);
  q.purge_expired(t0 + 250ms);
  q.enqueue(3, Ttl::infinite(), t0);
  EXPECT_EQ(q.next_expiry(), kNever);
}

TEST(DualOrderQueue, CapacityBound) {
  DualOrderQueue<int> q(2);
  q.enqueue(1, Ttl::infinite(), t0);
  q.enqueue(2, Ttl::infinite(), t0);
  EXPECT_TRUE(q.full());
  EXPECT_THROW(q.enqueue(3, Ttl::infinite(), t0), QueueFullError);
  q.dequeue_front(t0);
  EXPECT_NO_THROW(q.enqueue(3, Ttl::infinite(), t0));
}

TEST(DualOrderQueue, PurgeInspectsAtMostPurgedPlusOne) {
  for (std::size_t k : {0u, 1u, 17u, 500u}) {
    DualOrderQueue<int> q;
    for (int i = 0; i < 500; ++i) {
      q.enqueue(i, static_cast<std::size_t>(i) < k ? Ttl::millis(1) : Ttl::millis(1000), t0);
    }
    q.reset_expiry_inspections();
    EXPECT_EQ(q.purge_expired(t0 + 10ms), k);
    EXPECT_LE(q.expiry_inspections(), k + 1) << "k=" << k;
  }
}

TEST(DualOrderQueue, DrainReturnsFifoOrder) {
  DualOrderQueue<int> q;
  q.enqueue(1, Ttl::millis(30), t0);
  q.enqueue(2, Ttl::millis(10), t0);
  EXPECT_EQ(q.drain(), (std::vector<int>{1, 2}));
  EXPECT_TRUE(q.empty());
  EXPECT_FALSE(q.check_invariants());
}

TEST(DualOrderQueue, MatchesNaiveModel) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto r = rowe::test::run_queue_model_check(seed, 400, true);
    ASSERT_TRUE(r.ok) << r.failure;
  }
}
