#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <regex>
#include <set>
#include <thread>
#include <vector>

#include "rowe/correlation.hpp"
#include "rowe/errors.hpp"
#include "rowe/notification.hpp"

using namespace rowe;
using namespace std::chrono_literals;

TEST(MessageId, FormatAndMonotonicCounter) {
  MessageIdGenerator gen;
  const std::regex shape("[0-9a-f]{32}-[0-9]+");
  const auto a = gen.next();
  const auto b = gen.next();
  EXPECT_TRUE(std::regex_match(a, shape)) << a;
  EXPECT_NE(a, b);
  EXPECT_EQ(a, gen.nonce() + "-1");
  EXPECT_EQ(b, gen.nonce() + "-2");
}

TEST(MessageId, TenThousandDistinct) {
  MessageIdGenerator gen;
  std::set<std::string> ids;
  for (int i = 0; i < 10000; ++i) ids.insert(gen.next());
  EXPECT_EQ(ids.size(), 10000u);
}

TEST(MessageId, IndependentNoncesDoNotCollide) {
  std::set<std::string> nonces;
  for (int i = 0; i < 1000; ++i) nonces.insert(MessageIdGenerator{}.nonce());
  EXPECT_EQ(nonces.size(), 1000u);
}

TEST(CorrelationTable, RegisterAndCancel) {
  CorrelationTable t;
  auto h = t.register_invocation("n-1");
  EXPECT_EQ(t.size(), 1u);
  EXPECT_THROW(t.register_invocation("n-1"), UsageError);
  EXPECT_TRUE(t.cancel("n-1"));
  EXPECT_TRUE(t.empty());
  EXPECT_EQ(h->status(), WaitStatus::timed_out);
  EXPECT_FALSE(t.cancel("n-1"));
  EXPECT_FALSE(t.cancel("unknown"));
}

TEST(CorrelationTable, NonReplyIsNotConsumed) {
  CorrelationTable t;
  t.register_invocation("X");
  EXPECT_FALSE(t.try_complete(Message{{"message_id", "X"}}));
  EXPECT_FALSE(t.try_complete(Message{{"in_reply_to", 5}}));
  EXPECT_EQ(t.size(), 1u);
}

TEST(CorrelationTable, MatchingReplyCompletesWaiter) {
  CorrelationTable t;
  auto h = t.register_invocation("X");
  const Message reply = {{"in_reply_to", "X"}, {"r", 1}};
  EXPECT_TRUE(t.try_complete(reply));
  EXPECT_TRUE(t.empty());
  EXPECT_EQ(h->wait(), WaitStatus::completed);
  EXPECT_EQ(h->take_result(), reply);
  EXPECT_EQ(t.late_reply_count(), 0u);
}

TEST(CorrelationTable, UnmatchedReplyIsDroppedAndCounted) {
  CorrelationTable t;
  EXPECT_TRUE(t.try_complete(Message{{"in_reply_to", "unknown"}}));
  EXPECT_EQ(t.late_reply_count(), 1u);
}

TEST(CorrelationTable, ReplyAfterCancelIsLate) {
  CorrelationTable t;
  auto h = t.register_invocation("n-9");
  t.cancel("n-9");
  EXPECT_TRUE(t.try_complete(Message{{"in_reply_to", "n-9"}}));
  EXPECT_EQ(t.late_reply_count(), 1u);
  EXPECT_EQ(h->status(), WaitStatus::timed_out);
  EXPECT_FALSE(h->take_result());
}

TEST(CorrelationTable, CloseAllSignalsEveryWaiter) {
  CorrelationTable t;
  auto a = t.register_invocation("a");
  auto b = t.register_invocation("b");
  t.close_all();
  EXPECT_TRUE(t.empty());
  EXPECT_EQ(a->status(), WaitStatus::closed);
  EXPECT_EQ(b->status(), WaitStatus::closed);
}

TEST(CorrelationTable, ShuffledRepliesReachTheirInvokers) {
  std::mt19937 rng(99);
  for (int round = 0; round < 20; ++round) {
    CorrelationTable t;
    MessageIdGenerator gen;
    const int k = 1 + static_cast<int>(rng() % 64);
    std::vector<std::pair<std::string, NotificationHandle>> calls;
    for (int i = 0; i < k; ++i) {
      auto id = gen.next();
      calls.emplace_back(id, t.register_invocation(id));
    }
    auto order = calls;
    std::shuffle(order.begin(), order.end(), rng);
    for (const auto& [id, h] : order) ASSERT_TRUE(t.try_complete(Message{{"in_reply_to", id}, {"for", id}}));
    for (const auto& [id, h] : calls) {
      ASSERT_EQ(h->status(), WaitStatus::completed);
      ASSERT_EQ((*h->take_result())["for"], id);
    }
    EXPECT_TRUE(t.empty());
    EXPECT_EQ(t.late_reply_count(), 0u);
  }
}

TEST(Notification, FirstSignalWins) {
  Notification n;
  EXPECT_EQ(n.status(), WaitStatus::pending);
  EXPECT_TRUE(n.signal(WaitStatus::sent));
  EXPECT_FALSE(n.signal(WaitStatus::discarded));
  EXPECT_EQ(n.wait(), WaitStatus::sent);
}

TEST(Notification, WaitUntilTimesOut) {
  Notification n;
  const auto start = Clock::now();
  EXPECT_EQ(n.wait_until(start + 30ms), WaitStatus::pending);
  EXPECT_GE(Clock::now() - start, 30ms);
}

TEST(Notification, CrossThreadSignal) {
  auto n = make_notification();
  std::thread signaler([n] {
    std::this_thread::sleep_for(20ms);
    n->signal(WaitStatus::completed, std::optional<Message>(std::in_place, Message{{"ok", true}}));
  });
  EXPECT_EQ(n->wait_until(kNever), WaitStatus::completed);
  EXPECT_EQ((*n->take_result())["ok"], true);
  signaler.join();
}
