// rowe: command-line front end for the rowe library.
//
// Exit codes: 0 ok, 1 unexpected error, 2 usage or bind failure,
// 3 message discarded, 4 invoke timed out, 5 bench peer unreachable.

#include <atomic>
#include <csignal>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rowe/bench.hpp"
#include "rowe/rowe.hpp"

namespace {

using namespace rowe;

enum Exit : int { kOk = 0, kFailure = 1, kUsage = 2, kDiscarded = 3, kTimedOut = 4, kUnreachable = 5 };

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

void install_signal_handlers() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

struct UsageFailure {
  std::string what;
};

Message parse_object(const std::string& text) {
  Message m;
  try {
    m = Message::parse(text);
  } catch (const Message::parse_error& e) {
    throw UsageFailure{std::string("invalid JSON: ") + e.what()};
  }
  if (!m.is_object()) throw UsageFailure{"message must be a JSON object"};
  if (m.contains(std::string(kTtlKey))) throw UsageFailure{"'rowe_ttl' is reserved; use --ttl"};
  return m;
}

std::optional<Endpoint> open_listener(std::uint16_t port) {
  try {
    return Endpoint::open_local(port);
  } catch (const OpenError& e) {
    std::cerr << e.what() << '\n';
    return std::nullopt;
  }
}

/// Calls @p handle for each received message until interrupted.
template <class Handler>
int serve(Endpoint& ep, Handler handle) {
  while (!g_stop.load()) {
    std::optional<Message> m;
    try {
      m = ep.receive(Timeout::millis(200));
    } catch (const ClosedError&) {
      break;
    }
    if (m) handle(*m);
  }
  ep.close();
  return kOk;
}

bool is_call(const Message& m) { return m.contains(std::string(kMessageIdKey)); }

int cmd_listen(std::uint16_t port, bool echo) {
  auto ep = open_listener(port);
  if (!ep) return kUsage;
  return serve(*ep, [&](const Message& m) {
    if (!echo) {
      std::cout << m.dump() << std::endl;
    } else if (is_call(m)) {
      ep->async_reply(m, echo_body(m));
    }
  });
}

int cmd_send(const std::string& host, std::uint16_t port, const std::string& json, std::int64_t ttl_ms) {
  const Message m = parse_object(json);
  auto ep = Endpoint::open_remote(host, port);
  const SendStatus st = ep.send(m, Ttl::from_api(ttl_ms));
  ep.close();
  if (st == SendStatus::sent) return kOk;
  std::cerr << "rowe: message " << to_string(st) << '\n';
  return st == SendStatus::discarded ? kDiscarded : kFailure;
}

int cmd_invoke(const std::string& host, std::uint16_t port, const std::string& json, std::int64_t timeout_ms) {
  Message m = parse_object(json);
  auto ep = Endpoint::open_remote(host, port);
  const auto reply = ep.invoke(std::move(m), Timeout::from_api(timeout_ms));
  ep.close();
  if (!reply) {
    std::cerr << "rowe: no reply within " << timeout_ms << " ms\n";
    return kTimedOut;
  }
  std::cout << reply->dump() << std::endl;
  return kOk;
}

Message add_two_numbers(const Message& m) {
  const auto service = m.find("service");
  if (service == m.end() || *service != "add-two-numbers") return {{"error", "unknown-service"}};
  const auto a = m.find("a");
  const auto b = m.find("b");
  std::int64_t sum = 0;
  if (a == m.end() || b == m.end() || !a->is_number_integer() || !b->is_number_integer() ||
      __builtin_add_overflow(a->get<std::int64_t>(), b->get<std::int64_t>(), &sum)) {
    return {{"error", "invalid-arguments"}};
  }
  return {{"result", sum}};
}

int cmd_addserver(std::uint16_t port) {
  auto ep = open_listener(port);
  if (!ep) return kUsage;
  return serve(*ep, [&](const Message& m) {
    if (is_call(m)) ep->async_reply(m, add_two_numbers(m));
  });
}

struct BenchArgs {
  std::string role = "client";
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::size_t count = 1000;
  std::size_t payload_bytes = 256;
  std::string mode = "invoke";
  std::int64_t ttl_ms = -1;
};

int cmd_bench(const BenchArgs& args) {
  if (args.role == "server") {
    auto ep = open_listener(args.port);
    if (!ep) return kUsage;
    serve_bench(*ep, g_stop);
    ep->close();
    return kOk;
  }
  BenchOptions opts;
  opts.mode = args.mode == "stream" ? BenchMode::stream : BenchMode::invoke;
  opts.count = args.count;
  opts.payload_bytes = args.payload_bytes;
  opts.ttl = Ttl::from_api(args.ttl_ms);
  auto ep = Endpoint::open_remote(args.host, args.port);
  try {
    const BenchReport report = run_bench(ep, opts);
    ep.close();
    std::cout << to_json(report).dump() << std::endl;
    return kOk;
  } catch (const PeerUnreachable& e) {
    std::cerr << e.what() << '\n';
    return kUnreachable;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rowe: JSON messaging between two peers over WebSocket"};
  app.require_subcommand(1);

  std::uint16_t port = 0;
  std::string host;
  std::string json;
  std::int64_t ttl_ms = -1;
  std::int64_t timeout_ms = 5000;

  auto* listen = app.add_subcommand("listen", "Accept one peer at a time and print or echo its messages");
  listen->add_option("--port", port, "Port to listen on")->required();
  auto* print_flag = listen->add_flag("--print", "Write each message as one JSON line (default)");
  auto* echo_flag = listen->add_flag("--echo", "Reply to every invocation with its own body");
  print_flag->excludes(echo_flag);

  auto* send = app.add_subcommand("send", "Send one message and wait until it is written or discarded");
  send->add_option("host", host)->required();
  send->add_option("port", port)->required();
  send->add_option("json", json, "JSON object to send")->required();
  send->add_option("--ttl", ttl_ms, "Time to live in ms; negative means forever");

  auto* invoke = app.add_subcommand("invoke", "Invoke a remote service and print its reply");
  invoke->add_option("host", host)->required();
  invoke->add_option("port", port)->required();
  invoke->add_option("json", json, "JSON object request")->required();
  invoke->add_option("--timeout", timeout_ms, "Reply timeout in ms; negative means forever")->capture_default_str();

  auto* addserver = app.add_subcommand("addserver", "Serve the add-two-numbers example service");
  addserver->add_option("--port", port, "Port to listen on")->required();

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Loopback latency and throughput benchmark");
  bench->add_option("--role", bench_args.role)->check(CLI::IsMember({"server", "client"}))->capture_default_str();
  bench->add_option("--host", bench_args.host)->capture_default_str();
  bench->add_option("--port", bench_args.port)->required();
  bench->add_option("--count", bench_args.count)->capture_default_str();
  bench->add_option("--payload-bytes", bench_args.payload_bytes)->capture_default_str();
  bench->add_option("--mode", bench_args.mode)->check(CLI::IsMember({"invoke", "stream"}))->capture_default_str();
  bench->add_option("--ttl", bench_args.ttl_ms, "Per-message TTL in ms; negative means forever");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  install_signal_handlers();
  try {
    if (*listen) return cmd_listen(port, echo_flag->count() > 0);
    if (*send) return cmd_send(host, port, json, ttl_ms);
    if (*invoke) return cmd_invoke(host, port, json, timeout_ms);
    if (*addserver) return cmd_addserver(port);
    if (*bench) return cmd_bench(bench_args);
  } catch (const UsageFailure& e) {
    std::cerr << "rowe: " << e.what << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "rowe: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
