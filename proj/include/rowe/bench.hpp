#pragma once

/// @file bench.hpp
/// Loopback latency/throughput measurement between two endpoints.
///
/// The server side runs serve_bench(): it echoes every invocation and
/// counts plain messages. The client side runs run_bench() in one of two
/// modes:
///   invoke  `count` echo invocations, one at a time; reports RTT percentiles
///   stream  `count` async sends followed by a barrier invocation whose reply
///           carries the number of messages the server saw; reports msgs/s

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rowe/endpoint.hpp"

namespace rowe {

enum class BenchMode { invoke, stream };

struct BenchOptions {
  BenchMode mode = BenchMode::invoke;
  std::size_t count = 1000;
  std::size_t payload_bytes = 256;
  Ttl ttl = Ttl::infinite();
  Millis reach_timeout = Millis{10000};
};

struct BenchReport {
  BenchMode mode = BenchMode::invoke;
  std::size_t count = 0;
  std::size_t payload_bytes = 0;
  std::optional<double> rtt_p50_us;
  std::optional<double> rtt_p99_us;
  double throughput_msgs_per_s = 0.0;
  std::uint64_t discarded = 0;
  /// stream mode: messages the server acknowledged at the barrier
  std::optional<std::uint64_t> delivered;
};

Message to_json(const BenchReport& r);

/// The peer did not answer a probe within BenchOptions::reach_timeout.
class PeerUnreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

BenchReport run_bench(Endpoint& client, const BenchOptions& options);

/// Answers bench traffic until @p stop is set or the endpoint closes.
void serve_bench(Endpoint& server, const std::atomic<bool>& stop);

/// Nearest-rank percentile of @p samples (0 < q <= 1). Sorts in place.
double percentile(std::vector<double>& samples, double q);

/// Copy of @p m without `message_id` and `in_reply_to`, for echo replies.
Message echo_body(const Message& m);

}  // namespace rowe
