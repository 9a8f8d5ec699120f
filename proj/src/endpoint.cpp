#include "rowe/endpoint.hpp"

#include <algorithm>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <utility>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "log.hpp"
#include "rowe/correlation.hpp"
#include "rowe/errors.hpp"
#include "rowe/message_queue.hpp"

namespace rowe {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using boost::system::error_code;

namespace {

constexpr auto kHandshakeTimeout = std::chrono::seconds(5);
constexpr auto kCloseGrace = std::chrono::milliseconds(250);

struct Connection {
  explicit Connection(beast::tcp_stream&& s) : ws(std::move(s)) {}
  websocket::stream<beast::tcp_stream> ws;
  beast::flat_buffer read_buf;
  std::string write_buf;
};

struct PendingUpgrade {
  explicit PendingUpgrade(tcp::socket s) : stream(std::move(s)) {}
  beast::tcp_stream stream;
  beast::flat_buffer buf;
  http::request<http::string_body> req;
};

websocket::stream_base::timeout ws_timeouts() {
  websocket::stream_base::timeout t{};
  t.handshake_timeout = kHandshakeTimeout;
  t.idle_timeout = websocket::stream_base::none();
  t.keep_alive_pings = false;
  return t;
}

bool offers_subprotocol(std::string_view header) {
  while (!header.empty()) {
    const auto comma = header.find(',');
    auto token = header.substr(0, comma);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (token == kSubprotocol) return true;
    if (comma == std::string_view::npos) break;
    header.remove_prefix(comma + 1);
  }
  return false;
}

std::string_view sv(beast::string_view s) { return {s.data(), s.size()}; }
beast::string_view bsv(std::string_view s) { return {s.data(), s.size()}; }

std::string_view target_path(std::string_view target) {
  return target.substr(0, target.find('?'));
}

}  // namespace

class Endpoint::Impl {
 public:
  Impl(Role role, std::string host, std::uint16_t port, EndpointConfig config)
      : role_(role),
        host_(std::move(host)),
        port_(port),
        config_(config),
        incoming_(config.incoming_capacity),
        outgoing_(config.outgoing_capacity),
        backoff_(config.reconnect_initial) {}

  ~Impl() { close(); }

  // Counts and reports discards; mu_ must be held while it runs.
  auto discard_counter() {
    return [this](QueuedMessage&& q) {
      ++counters_.discarded_ttl;
      signal_discarded(std::move(q));
    };
  }

  void listen() {
    error_code ec;
    const tcp::endpoint where(tcp::v4(), port_);
    acceptor_.open(where.protocol(), ec);
    if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(where, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw OpenError(ec, "rowe: cannot listen on port " + std::to_string(port_));
    port_ = acceptor_.local_endpoint().port();
    detail::log().info("listening on port {}", port_);
    net::post(io_, [this] { accept_next(); });
    start_thread();
  }

  void connect_in_background() {
    net::post(io_, [this] { connect(); });
    start_thread();
  }

  // ---- caller side -------------------------------------------------------

  SendStatus send(const Message& m, Ttl ttl, bool blocking) {
    require_object(m, "message");
    NotificationHandle waiter = blocking ? make_notification() : nullptr;
    {
      std::unique_lock lock(mu_);
      if (blocking) space_cv_.wait(lock, [&] { return closed_ || !outgoing_.full(); });
      if (closed_) return SendStatus::closed;
      if (outgoing_.full()) return SendStatus::queue_full;
      const TimePoint expiry = ttl.deadline_from(Clock::now());
      outgoing_.enqueue_until(QueuedMessage{m, waiter, expiry}, expiry);
    }
    kick();
    if (!blocking) return SendStatus::queued;
    switch (waiter->wait()) {
      case WaitStatus::sent: return SendStatus::sent;
      case WaitStatus::closed: return SendStatus::closed;
      default: return SendStatus::discarded;
    }
  }

  std::optional<Message> receive(Timeout timeout) {
    const TimePoint deadline = timeout.deadline_from(Clock::now());
    std::unique_lock lock(mu_);
    for (;;) {
      if (closed_) throw ClosedError();
      if (auto q = incoming_.dequeue_front(Clock::now(), discard_counter())) return std::optional<Message>(std::in_place, std::move(q->message));
      if (deadline == kNever) {
        incoming_cv_.wait(lock);
      } else if (incoming_cv_.wait_until(lock, deadline) == std::cv_status::timeout) {
        if (closed_) throw ClosedError();
        if (auto q = incoming_.dequeue_front(Clock::now(), discard_counter())) return std::optional<Message>(std::in_place, std::move(q->message));
        return std::nullopt;
      }
    }
  }

  std::optional<Message> invoke(Message request, Timeout timeout) {
    require_object(request, "invocation");
    const TimePoint deadline = timeout.deadline_from(Clock::now());
    std::string id;
    NotificationHandle waiter;
    {
      std::unique_lock lock(mu_);
      const auto has_room = [&] { return closed_ || !outgoing_.full(); };
      if (deadline == kNever) {
        space_cv_.wait(lock, has_room);
      } else if (!space_cv_.wait_until(lock, deadline, has_room)) {
        return std::nullopt;
      }
      if (closed_) throw ClosedError();
      id = ids_.next();
      request[std::string(kMessageIdKey)] = id;
      waiter = table_.register_invocation(id);
      outgoing_.enqueue_until(QueuedMessage{std::move(request), nullptr, deadline}, deadline);
    }
    kick();
    if (waiter->wait_until(deadline) == WaitStatus::pending) {
      std::lock_guard lock(mu_);
      table_.cancel(id);
    }
    switch (waiter->status()) {
      case WaitStatus::completed: return waiter->take_result();
      case WaitStatus::closed: throw ClosedError();
      default: return std::nullopt;
    }
  }

  SendStatus reply(const Message& request, const Message& body, Ttl ttl, bool blocking) {
    require_object(request, "request");
    require_object(body, "reply body");
    const auto id = request.find(std::string(kMessageIdKey));
    if (id == request.end() || !id->is_string()) throw UsageError("rowe: request has no string 'message_id'");
    if (body.contains(std::string(kInReplyToKey))) throw UsageError("rowe: reply body already has 'in_reply_to'");
    Message m = body;
    m[std::string(kInReplyToKey)] = *id;
    return send(m, ttl, blocking);
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      if (closed_) return;
      closed_ = true;
      state_ = EndpointState::closed;
      for (auto& q : outgoing_.drain()) {
        if (q.waiter) q.waiter->signal(WaitStatus::closed);
      }
      incoming_.clear();
      table_.close_all();
      if (inflight_waiter_) inflight_waiter_->signal(WaitStatus::closed);
    }
    incoming_cv_.notify_all();
    space_cv_.notify_all();
    net::post(io_, [this] { shutdown_io(); });
    if (thread_.joinable() && thread_.get_id() != std::this_thread::get_id()) thread_.join();
  }

  Counters counters() const {
    std::lock_guard lock(mu_);
    Counters c = counters_;
    c.late_replies = table_.late_reply_count();
    return c;
  }

  EndpointState state() const {
    std::lock_guard lock(mu_);
    return state_;
  }

  bool queues_purged_at_last_wake() const {
    std::lock_guard lock(mu_);
    return outgoing_.next_expiry() > last_wake_ && incoming_.next_expiry() > last_wake_;
  }

  std::size_t pending_invocations() const {
    std::lock_guard lock(mu_);
    return table_.size();
  }
  std::size_t outgoing_size() const {
    std::lock_guard lock(mu_);
    return outgoing_.size();
  }
  std::size_t incoming_size() const {
    std::lock_guard lock(mu_);
    return incoming_.size();
  }

  Role role() const { return role_; }
  std::uint16_t port() const { return port_; }
  const std::string& nonce() const { return ids_.nonce(); }

 private:
  void start_thread() {
    {
      std::lock_guard lock(mu_);
      state_ = EndpointState::awaiting_peer;
    }
    work_.emplace(io_.get_executor());
    thread_ = std::thread([this] {
      for (;;) {
        try {
          io_.run();
          return;
        } catch (const std::exception& e) {
          detail::log().error("service thread: {}", e.what());
        }
      }
    });
  }

  void kick() {
    net::post(io_, [this] { pump(); });
  }

  // ---- service thread ----------------------------------------------------

  // Purges both queues, writes the next outgoing message if the connection
  // is idle, and re-arms the expiry timer.
  void pump() {
    if (stopping_) return;
    std::optional<QueuedMessage> next;
    TimePoint now = Clock::now();
    {
      std::lock_guard lock(mu_);
      const std::size_t freed = outgoing_.purge_expired(now, discard_counter());
      incoming_.purge_expired(now, discard_counter());
      last_wake_ = now;
      if (conn_ && !writing_) {
        next = outgoing_.dequeue_front(now, discard_counter());
        if (next) {
          writing_ = true;
          inflight_waiter_ = next->waiter;
        }
      }
      if (freed > 0 || next) space_cv_.notify_all();
    }
    if (next) start_write(std::move(*next), now);
    arm_expiry_timer();
  }

  void start_write(QueuedMessage q, TimePoint now) {
    Ttl remaining;
    if (q.expiry != kNever) {
      remaining = Ttl{std::chrono::ceil<Millis>(q.expiry - now)};
    }
    try {
      conn_->write_buf = encode_message(q.message, remaining);
    } catch (const ProtocolError& e) {
      detail::log().error("dropping unencodable message: {}", e.what());
      finish_write(false);
      net::post(io_, [this] { pump(); });
      return;
    }
    conn_->ws.text(true);
    conn_->ws.async_write(net::buffer(conn_->write_buf), [this, conn = conn_](error_code ec, std::size_t) {
      finish_write(!ec);
      if (ec) detach(conn, ec);
      pump();
    });
  }

  void finish_write(bool ok) {
    NotificationHandle waiter;
    {
      std::lock_guard lock(mu_);
      writing_ = false;
      waiter = std::exchange(inflight_waiter_, nullptr);
      if (ok) ++counters_.sent;
    }
    if (waiter) waiter->signal(ok ? WaitStatus::sent : WaitStatus::discarded);
  }

  void arm_expiry_timer() {
    if (stopping_) return;
    TimePoint next;
    {
      std::lock_guard lock(mu_);
      next = std::min(outgoing_.next_expiry(), incoming_.next_expiry());
    }
    if (next == timer_deadline_) return;
    timer_deadline_ = next;
    if (next == kNever) {
      expiry_timer_.cancel();
      return;
    }
    expiry_timer_.expires_at(next);
    expiry_timer_.async_wait([this](error_code ec) {
      if (ec == net::error::operation_aborted) return;
      timer_deadline_ = kNever;
      pump();
    });
  }

  void read_next(const std::shared_ptr<Connection>& conn) {
    conn->ws.async_read(conn->read_buf, [this, conn](error_code ec, std::size_t) {
      if (ec) {
        detach(conn, ec);
        return;
      }
      on_frame(*conn);
      if (!stopping_) read_next(conn);
    });
  }

  void on_frame(Connection& conn) {
    const bool text = conn.ws.got_text();
    const std::string bytes = beast::buffers_to_string(conn.read_buf.data());
    conn.read_buf.consume(conn.read_buf.size());
    const TimePoint now = Clock::now();

    DecodedFrame frame;
    try {
      if (!text) throw ProtocolError("rowe: binary frames are not supported");
      frame = decode_frame(bytes, now);
    } catch (const ProtocolError& e) {
      detail::log().warn("dropping frame: {}", e.what());
      std::lock_guard lock(mu_);
      ++counters_.dropped_malformed;
      return;
    }

    bool queued = false;
    {
      std::lock_guard lock(mu_);
      if (closed_) return;
      ++counters_.received;
      if (table_.try_complete(frame.message)) {
        // reply: delivered to the invoker or counted as late
      } else if (frame.local_expiry <= now) {
        ++counters_.discarded_ttl;
      } else if (incoming_.full()) {
        detail::log().warn("incoming queue full; dropping message");
      } else {
        incoming_.enqueue_until(QueuedMessage{std::move(frame.message), nullptr, frame.local_expiry},
                                frame.local_expiry);
        queued = true;
      }
    }
    if (queued) {
      incoming_cv_.notify_all();
      if (frame.local_expiry != kNever) arm_expiry_timer();
    }
  }

  void attach(std::shared_ptr<Connection> conn) {
    conn->ws.read_message_max(config_.max_frame_bytes);
    conn_ = std::move(conn);
    upgrade_in_progress_ = false;
    backoff_ = config_.reconnect_initial;
    {
      std::lock_guard lock(mu_);
      if (!closed_) state_ = EndpointState::connected;
    }
    detail::log().info("peer connected");
    read_next(conn_);
    pump();
  }

  void detach(const std::shared_ptr<Connection>& conn, error_code ec) {
    if (conn_ != conn) return;
    detail::log().info("peer disconnected: {}", ec.message());
    conn_.reset();
    error_code ignored;
    beast::get_lowest_layer(conn->ws).socket().close(ignored);
    {
      std::lock_guard lock(mu_);
      if (!closed_) state_ = EndpointState::awaiting_peer;
    }
    if (!stopping_ && role_ == Role::remote_client) schedule_reconnect();
  }

  // server role

  void accept_next() {
    acceptor_.async_accept([this](error_code ec, tcp::socket sock) {
      if (stopping_ || ec == net::error::operation_aborted) return;
      if (!ec) {
        error_code ignored;
        sock.set_option(tcp::no_delay(true), ignored);
        read_upgrade(std::make_shared<PendingUpgrade>(std::move(sock)));
      } else {
        detail::log().warn("accept failed: {}", ec.message());
      }
      accept_next();
    });
  }

  void read_upgrade(std::shared_ptr<PendingUpgrade> p) {
    p->stream.expires_after(kHandshakeTimeout);
    http::async_read(p->stream, p->buf, p->req, [this, p](error_code ec, std::size_t) {
      if (ec || stopping_) return;
      if (!websocket::is_upgrade(p->req)) return refuse(p, http::status::bad_request, "expected a WebSocket upgrade");
      if (target_path(sv(p->req.target())) != kUpgradePath) return refuse(p, http::status::not_found, "unknown path");
      if (conn_ || upgrade_in_progress_) {
        {
          std::lock_guard lock(mu_);
          ++counters_.refused_peers;
        }
        detail::log().info("refusing second peer");
        return refuse(p, http::status::service_unavailable, "a peer is already connected");
      }
      upgrade_in_progress_ = true;
      const bool offered = offers_subprotocol(sv(p->req[http::field::sec_websocket_protocol]));
      if (!offered) detail::log().info("peer did not offer subprotocol {}; accepting anyway", kSubprotocol);

      beast::get_lowest_layer(p->stream).expires_never();
      auto conn = std::make_shared<Connection>(std::move(p->stream));
      conn->ws.set_option(ws_timeouts());
      conn->ws.set_option(websocket::stream_base::decorator([offered](websocket::response_type& res) {
        res.set(http::field::server, "rowe");
        if (offered) res.set(http::field::sec_websocket_protocol, bsv(kSubprotocol));
      }));
      conn->ws.async_accept(p->req, [this, conn](error_code ec) {
        if (stopping_) return;
        if (ec) {
          upgrade_in_progress_ = false;
          detail::log().warn("upgrade failed: {}", ec.message());
          return;
        }
        attach(conn);
      });
    });
  }

  void refuse(const std::shared_ptr<PendingUpgrade>& p, http::status status, std::string_view why) {
    auto res = std::make_shared<http::response<http::string_body>>(status, p->req.version());
    res->set(http::field::server, "rowe");
    res->set(http::field::content_type, "text/plain");
    res->keep_alive(false);
    res->body() = std::string(why) + "\n";
    res->prepare_payload();
    http::async_write(p->stream, *res, [p, res](error_code, std::size_t) {
      error_code ignored;
      p->stream.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  // client role

  void connect() {
    if (stopping_) return;
    resolver_.async_resolve(host_, std::to_string(port_), [this](error_code ec, tcp::resolver::results_type results) {
      if (stopping_) return;
      if (ec) {
        detail::log().debug("resolve {} failed: {}", host_, ec.message());
        return schedule_reconnect();
      }
      auto stream = std::make_shared<beast::tcp_stream>(io_);
      stream->expires_after(kHandshakeTimeout);
      stream->async_connect(results, [this, stream](error_code ec, const tcp::endpoint&) {
        if (stopping_) return;
        if (ec) {
          detail::log().debug("connect failed: {}", ec.message());
          return schedule_reconnect();
        }
        error_code ignored;
        stream->socket().set_option(tcp::no_delay(true), ignored);
        stream->expires_never();
        auto conn = std::make_shared<Connection>(std::move(*stream));
        conn->ws.set_option(ws_timeouts());
        conn->ws.set_option(websocket::stream_base::decorator([](websocket::request_type& req) {
          req.set(http::field::user_agent, "rowe");
          req.set(http::field::sec_websocket_protocol, bsv(kSubprotocol));
        }));
        auto res = std::make_shared<websocket::response_type>();
        const std::string authority = host_ + ":" + std::to_string(port_);
        conn->ws.async_handshake(*res, authority, std::string(kUpgradePath), [this, conn, res](error_code ec) {
          if (stopping_) return;
          if (ec) {
            detail::log().debug("handshake failed: {}", ec.message());
            return schedule_reconnect();
          }
          if (sv((*res)[http::field::sec_websocket_protocol]) != kSubprotocol) {
            detail::log().info("server did not confirm subprotocol {}", kSubprotocol);
          }
          attach(conn);
        });
      });
    });
  }

  void schedule_reconnect() {
    if (stopping_) return;
    reconnect_timer_.expires_after(backoff_);
    backoff_ = std::min(backoff_ * 2, config_.reconnect_max);
    reconnect_timer_.async_wait([this](error_code ec) {
      if (!ec) connect();
    });
  }

  void shutdown_io() {
    stopping_ = true;
    error_code ignored;
    expiry_timer_.cancel();
    reconnect_timer_.cancel();
    resolver_.cancel();
    acceptor_.close(ignored);
    work_.reset();
    auto conn = std::exchange(conn_, nullptr);
    if (!conn) {
      io_.stop();
      return;
    }
    auto grace = std::make_shared<net::steady_timer>(io_, kCloseGrace);
    grace->async_wait([this, conn](error_code ec) {
      if (!ec) {
        error_code ignored;
        beast::get_lowest_layer(conn->ws).socket().close(ignored);
      }
      io_.stop();
    });
    conn->ws.async_close(websocket::close_code::normal, [this, conn, grace](error_code) {
      grace->cancel();
      io_.stop();
    });
  }

  const Role role_;
  const std::string host_;
  std::uint16_t port_;
  const EndpointConfig config_;

  // Shared with callers; guarded by mu_.
  mutable std::mutex mu_;
  std::condition_variable incoming_cv_;
  std::condition_variable space_cv_;
  MessageQueue incoming_;
  MessageQueue outgoing_;
  CorrelationTable table_;
  MessageIdGenerator ids_;
  Counters counters_;
  EndpointState state_ = EndpointState::starting;
  bool closed_ = false;
  bool writing_ = false;
  NotificationHandle inflight_waiter_;
  TimePoint last_wake_{};

  // Service thread only.
  net::io_context io_{1};
  std::optional<net::executor_work_guard<net::io_context::executor_type>> work_;
  tcp::acceptor acceptor_{io_};
  tcp::resolver resolver_{io_};
  net::steady_timer expiry_timer_{io_};
  net::steady_timer reconnect_timer_{io_};
  TimePoint timer_deadline_ = kNever;
  Millis backoff_;
  std::shared_ptr<Connection> conn_;
  bool upgrade_in_progress_ = false;
  bool stopping_ = false;
  std::thread thread_;
};

// ---- Endpoint -------------------------------------------------------------

Endpoint::Endpoint(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Endpoint::Endpoint(Endpoint&&) noexcept = default;
Endpoint& Endpoint::operator=(Endpoint&& other) noexcept {
  if (this != &other) {
    if (impl_) impl_->close();
    impl_ = std::move(other.impl_);
  }
  return *this;
}
Endpoint::~Endpoint() = default;

Endpoint Endpoint::open_local(std::uint16_t port, EndpointConfig config) {
  auto impl = std::make_unique<Impl>(Role::local_server, "", port, config);
  impl->listen();
  return Endpoint(std::move(impl));
}

Endpoint Endpoint::open_remote(std::string host, std::uint16_t port, EndpointConfig config) {
  if (host.empty()) throw UsageError("rowe: empty host");
  auto impl = std::make_unique<Impl>(Role::remote_client, std::move(host), port, config);
  impl->connect_in_background();
  return Endpoint(std::move(impl));
}

namespace {
template <class Impl>
Impl& live(const std::unique_ptr<Impl>& impl) {
  if (!impl) throw UsageError("rowe: use of a moved-from endpoint");
  return *impl;
}
}  // namespace

SendStatus Endpoint::send(const Message& m, Ttl ttl) { return live(impl_).send(m, ttl, true); }
SendStatus Endpoint::async_send(const Message& m, Ttl ttl) { return live(impl_).send(m, ttl, false); }
std::optional<Message> Endpoint::receive(Timeout timeout) { return live(impl_).receive(timeout); }
std::optional<Message> Endpoint::invoke(Message request, Timeout timeout) {
  return live(impl_).invoke(std::move(request), timeout);
}
SendStatus Endpoint::reply(const Message& request, const Message& body, Ttl ttl) {
  return live(impl_).reply(request, body, ttl, true);
}
SendStatus Endpoint::async_reply(const Message& request, const Message& body, Ttl ttl) {
  return live(impl_).reply(request, body, ttl, false);
}
void Endpoint::close() {
  if (impl_) impl_->close();
}
Counters Endpoint::counters() const { return live(impl_).counters(); }
EndpointState Endpoint::state() const { return impl_ ? impl_->state() : EndpointState::closed; }
Role Endpoint::role() const { return live(impl_).role(); }
std::uint16_t Endpoint::port() const { return live(impl_).port(); }
const std::string& Endpoint::id_nonce() const { return live(impl_).nonce(); }
bool Endpoint::queues_purged_at_last_wake() const { return live(impl_).queues_purged_at_last_wake(); }
std::size_t Endpoint::pending_invocations() const { return live(impl_).pending_invocations(); }
std::size_t Endpoint::outgoing_size() const { return live(impl_).outgoing_size(); }
std::size_t Endpoint::incoming_size() const { return live(impl_).incoming_size(); }

std::string_view to_string(SendStatus s) {
  switch (s) {
    case SendStatus::sent: return "sent";
    case SendStatus::discarded: return "discarded";
    case SendStatus::queued: return "queued";
    case SendStatus::queue_full: return "queue-full";
    case SendStatus::closed: return "closed";
  }
  return "?";
}

std::string_view to_string(EndpointState s) {
  switch (s) {
    case EndpointState::starting: return "starting";
    case EndpointState::awaiting_peer: return "awaiting-peer";
    case EndpointState::connected: return "connected";
    case EndpointState::closed: return "closed";
  }
  return "?";
}

}  // namespace rowe
