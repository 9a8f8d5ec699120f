#pragma once

/// @file wire.hpp
/// Wire format: one JSON object per WebSocket text frame, UTF-8.
///
/// Three top-level keys are reserved:
///   - `message_id`  string, injected by invoke()
///   - `in_reply_to` string, set by reply()
///   - `rowe_ttl`    non-negative integer milliseconds, injected when a
///                   message with a finite lifetime is transmitted and
///                   stripped before the receiver sees the message
///
/// Key order is preserved on encode, so identical messages serialize to
/// identical bytes.

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "rowe/ttl.hpp"

namespace rowe {

using Message = nlohmann::ordered_json;

inline constexpr std::string_view kMessageIdKey = "message_id";
inline constexpr std::string_view kInReplyToKey = "in_reply_to";
inline constexpr std::string_view kTtlKey = "rowe_ttl";

inline constexpr std::string_view kSubprotocol = "rowe.v1";
inline constexpr std::string_view kUpgradePath = "/rowe";

enum class ValueKind { null, boolean, integer, number, string, object, array };

/// One entry for build_message(). The typed constructors infer the kind; the
/// (key, kind, value) form checks the value against the declared kind.
struct Field {
  Field(std::string k, ValueKind declared, Message v);
  Field(std::string k, std::nullptr_t) : key(std::move(k)), kind(ValueKind::null) {}
  Field(std::string k, bool v) : key(std::move(k)), kind(ValueKind::boolean), value(v) {}
  Field(std::string k, int v) : key(std::move(k)), kind(ValueKind::integer), value(v) {}
  Field(std::string k, long v) : key(std::move(k)), kind(ValueKind::integer), value(v) {}
  Field(std::string k, long long v) : key(std::move(k)), kind(ValueKind::integer), value(v) {}
  Field(std::string k, double v) : key(std::move(k)), kind(ValueKind::number), value(v) {}
  Field(std::string k, const char* v) : key(std::move(k)), kind(ValueKind::string), value(v) {}
  Field(std::string k, std::string v) : key(std::move(k)), kind(ValueKind::string), value(std::move(v)) {}

  std::string key;
  ValueKind kind;
  Message value;
};

/// Builds an object from key/value pairs, in order.
/// Throws UsageError on an empty or duplicate key, on a value that does not
/// match its declared kind, and on the reserved `rowe_ttl` key (lifetimes go
/// through the ttl argument of the send operations).
Message build_message(std::initializer_list<Field> fields);

/// Serializes @p m as the payload of one text frame. A finite @p remaining_ttl
/// adds `"rowe_ttl": <ms>`; @p m itself is not modified.
/// Throws ProtocolError if @p m is not an object or holds invalid UTF-8.
std::string encode_message(const Message& m, Ttl remaining_ttl = Ttl::infinite());

struct DecodedFrame {
  Message message;
  TimePoint local_expiry = kNever;
};

/// Parses one text-frame payload received at @p arrival. `rowe_ttl` is
/// removed from the message and turned into an absolute local expiry.
/// Throws ProtocolError on malformed JSON or UTF-8, a non-object top level, or
/// ill-typed reserved keys.
DecodedFrame decode_frame(std::string_view bytes, TimePoint arrival);

/// Throws UsageError unless @p m is a JSON object.
void require_object(const Message& m, std::string_view what);

}  // namespace rowe
