#include "rowe/bench.hpp"

#include <algorithm>
#include <cmath>

#include "rowe/errors.hpp"

namespace rowe {

namespace {

constexpr std::string_view kBenchKey = "bench";

Message bench_message(std::string_view kind, std::size_t seq, const std::string& pad) {
  Message m = Message::object();
  m[std::string(kBenchKey)] = kind;
  m["seq"] = seq;
  if (!pad.empty()) m["pad"] = pad;
  return m;
}

std::string_view bench_kind(const Message& m) {
  const auto it = m.find(std::string(kBenchKey));
  if (it == m.end() || !it->is_string()) return {};
  return it->get_ref<const std::string&>();
}

}  // namespace

double percentile(std::vector<double>& samples, double q) {
  if (samples.empty()) throw UsageError("rowe: percentile of no samples");
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size())));
  return samples[std::clamp<std::size_t>(rank, 1, samples.size()) - 1];
}

Message echo_body(const Message& m) {
  Message body = m;
  body.erase(std::string(kMessageIdKey));
  body.erase(std::string(kInReplyToKey));
  return body;
}

Message to_json(const BenchReport& r) {
  Message j = Message::object();
  j["mode"] = r.mode == BenchMode::invoke ? "invoke" : "stream";
  j["count"] = r.count;
  j["payload_bytes"] = r.payload_bytes;
  j["rtt_p50_us"] = r.rtt_p50_us ? Message(*r.rtt_p50_us) : Message(nullptr);
  j["rtt_p99_us"] = r.rtt_p99_us ? Message(*r.rtt_p99_us) : Message(nullptr);
  j["throughput_msgs_per_s"] = r.throughput_msgs_per_s;
  j["discarded"] = r.discarded;
  if (r.delivered) j["delivered"] = *r.delivered;
  return j;
}

BenchReport run_bench(Endpoint& client, const BenchOptions& options) {
  BenchReport report;
  report.mode = options.mode;
  report.count = options.count;
  report.payload_bytes = options.payload_bytes;

  if (!client.invoke(bench_message("ping", 0, {}), Timeout{options.reach_timeout})) {
    throw PeerUnreachable("rowe: bench peer did not answer within " +
                          std::to_string(options.reach_timeout.count()) + " ms");
  }
  if (options.count == 0) return report;

  const std::string pad(options.payload_bytes, 'x');
  const std::uint64_t discarded_before = client.counters().discarded_ttl;
  const auto per_call = options.ttl.is_infinite() ? Timeout{options.reach_timeout} : options.ttl;

  if (options.mode == BenchMode::invoke) {
    std::vector<double> rtts;
    rtts.reserve(options.count);
    const auto start = Clock::now();
    for (std::size_t i = 0; i < options.count; ++i) {
      const auto t0 = Clock::now();
      const auto reply = client.invoke(bench_message("echo", i, pad), per_call);
      const auto t1 = Clock::now();
      if (reply) rtts.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (!rtts.empty()) {
      report.rtt_p50_us = percentile(rtts, 0.50);
      report.rtt_p99_us = percentile(rtts, 0.99);
      report.throughput_msgs_per_s = static_cast<double>(rtts.size()) / secs;
    }
  } else {
    client.invoke(bench_message("reset", 0, {}), Timeout{options.reach_timeout});
    const auto start = Clock::now();
    for (std::size_t i = 0; i < options.count; ++i) {
      const Message m = bench_message("data", i, pad);
      if (client.async_send(m, options.ttl) == SendStatus::queue_full) client.send(m, options.ttl);
    }
    const auto barrier = client.invoke(bench_message("barrier", options.count, {}), Timeout{options.reach_timeout});
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (barrier && barrier->contains("received")) {
      report.delivered = (*barrier)["received"].get<std::uint64_t>();
      report.throughput_msgs_per_s = static_cast<double>(*report.delivered) / secs;
    }
  }
  report.discarded = client.counters().discarded_ttl - discarded_before;
  return report;
}

void serve_bench(Endpoint& server, const std::atomic<bool>& stop) {
  std::uint64_t received = 0;
  while (!stop.load()) {
    std::optional<Message> m;
    try {
      m = server.receive(Timeout::millis(100));
    } catch (const ClosedError&) {
      return;
    }
    if (!m) continue;
    const bool is_call = m->contains(std::string(kMessageIdKey));
    const auto kind = bench_kind(*m);
    if (!is_call) {
      ++received;
      continue;
    }
    if (kind == "reset") {
      received = 0;
      server.async_reply(*m, Message::object());
    } else if (kind == "barrier") {
      Message body = Message::object();
      body["received"] = received;
      server.async_reply(*m, body);
    } else {
      server.async_reply(*m, echo_body(*m));
    }
  }
}

}  // namespace rowe
