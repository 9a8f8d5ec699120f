#pragma once

#include <chrono>
#include <cstdint>
#include <optional>

namespace rowe {

using Clock = std::chrono::steady_clock;
using TimePoint = Clock::time_point;
using Millis = std::chrono::milliseconds;

/// Absolute deadline. TimePoint::max() stands for "never".
inline constexpr TimePoint kNever = TimePoint::max();

/// A lifetime in milliseconds, possibly infinite. Used both for message
/// time-to-live and for blocking-call timeouts.
class Ttl {
 public:
  constexpr Ttl() = default;  // infinite
  constexpr explicit Ttl(Millis ms) : ms_(ms < Millis::zero() ? std::nullopt : std::optional(ms)) {}

  static constexpr Ttl infinite() { return Ttl{}; }
  static constexpr Ttl millis(std::int64_t ms) { return Ttl{Millis{ms}}; }
  /// API-boundary conversion: a negative count means infinite.
  static constexpr Ttl from_api(std::int64_t ms) { return ms < 0 ? Ttl{} : Ttl{Millis{ms}}; }

  [[nodiscard]] constexpr bool is_infinite() const { return !ms_.has_value(); }
  [[nodiscard]] constexpr Millis count() const { return ms_.value_or(Millis::max()); }

  /// now + ttl, saturating at kNever.
  [[nodiscard]] TimePoint deadline_from(TimePoint now) const {
    if (!ms_) return kNever;
    if (*ms_ >= std::chrono::duration_cast<Millis>(kNever - now)) return kNever;
    return now + *ms_;
  }

  friend constexpr bool operator==(const Ttl&, const Ttl&) = default;

 private:
  std::optional<Millis> ms_;
};

using Timeout = Ttl;

}  // namespace rowe
