#include "rowe/wire.hpp"

#include <string>

#include "rowe/errors.hpp"

namespace rowe {

namespace {

bool matches_kind(const Message& v, ValueKind kind) {
  switch (kind) {
    case ValueKind::null: return v.is_null();
    case ValueKind::boolean: return v.is_boolean();
    case ValueKind::integer: return v.is_number_integer();
    case ValueKind::number: return v.is_number();
    case ValueKind::string: return v.is_string();
    case ValueKind::object: return v.is_object();
    case ValueKind::array: return v.is_array();
  }
  return false;
}

void check_reserved_string(const Message& m, std::string_view key) {
  const auto it = m.find(std::string(key));
  if (it != m.end() && !it->is_string()) {
    throw ProtocolError("rowe: reserved key '" + std::string(key) + "' must be a string");
  }
}

}  // namespace

Field::Field(std::string k, ValueKind declared, Message v)
    : key(std::move(k)), kind(declared), value(std::move(v)) {
  if (!matches_kind(value, kind)) {
    throw UsageError("rowe: value for '" + key + "' does not match its declared kind");
  }
}

Message build_message(std::initializer_list<Field> fields) {
  Message m = Message::object();
  for (const Field& f : fields) {
    if (f.key.empty()) throw UsageError("rowe: empty key");
    if (f.key == kTtlKey) throw UsageError("rowe: 'rowe_ttl' is reserved; pass a ttl to send instead");
    if (m.contains(f.key)) throw UsageError("rowe: duplicate key '" + f.key + "'");
    m[f.key] = f.value;
  }
  return m;
}

void require_object(const Message& m, std::string_view what) {
  if (!m.is_object()) throw UsageError("rowe: " + std::string(what) + " must be a JSON object");
}

std::string encode_message(const Message& m, Ttl remaining_ttl) {
  if (!m.is_object()) throw ProtocolError("rowe: only JSON objects can be sent");
  try {
    if (remaining_ttl.is_infinite()) return m.dump();
    Message copy = m;
    copy[std::string(kTtlKey)] = remaining_ttl.count().count();
    return copy.dump();
  } catch (const nlohmann::json::type_error& e) {
    throw ProtocolError(std::string("rowe: cannot encode message: ") + e.what());
  }
}

DecodedFrame decode_frame(std::string_view bytes, TimePoint arrival) {
  DecodedFrame out;
  try {
    out.message = Message::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("rowe: malformed frame: ") + e.what());
  }
  if (!out.message.is_object()) throw ProtocolError("rowe: frame is not a JSON object");
  check_reserved_string(out.message, kMessageIdKey);
  check_reserved_string(out.message, kInReplyToKey);

  const auto ttl = out.message.find(std::string(kTtlKey));
  if (ttl != out.message.end()) {
    if (ttl->is_number_unsigned()) {
      const auto ms = ttl->get<std::uint64_t>();
      out.local_expiry = ms > static_cast<std::uint64_t>(INT64_MAX)
                             ? kNever
                             : Ttl::millis(static_cast<std::int64_t>(ms)).deadline_from(arrival);
    } else if (ttl->is_number_integer() && ttl->get<std::int64_t>() >= 0) {
      out.local_expiry = Ttl::millis(ttl->get<std::int64_t>()).deadline_from(arrival);
    } else {
      throw ProtocolError("rowe: 'rowe_ttl' must be a non-negative integer");
    }
    out.message.erase(std::string(kTtlKey));
  }
  return out;
}

}  // namespace rowe
