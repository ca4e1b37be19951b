#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace intentran {

enum class KpiKind : std::uint8_t { throughput, delay, energy_efficiency };

inline constexpr std::array<KpiKind, 3> kAllKpis{KpiKind::throughput, KpiKind::delay,
                                                 KpiKind::energy_efficiency};

constexpr std::string_view to_string(KpiKind k) {
  switch (k) {
    case KpiKind::throughput: return "throughput";
    case KpiKind::delay: return "delay";
    case KpiKind::energy_efficiency: return "energy_efficiency";
  }
  return "?";
}

inline std::optional<KpiKind> parse_kpi(std::string_view s) {
  for (auto k : kAllKpis)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// Delay is the only KPI where a smaller value is an improvement.
constexpr bool higher_is_better(KpiKind k) { return k != KpiKind::delay; }

enum class TrafficKind : std::uint8_t { video, gaming, voice, urllc };

inline constexpr std::size_t kNumTrafficKinds = 4;
inline constexpr std::array<TrafficKind, kNumTrafficKinds> kAllTrafficKinds{
    TrafficKind::video, TrafficKind::gaming, TrafficKind::voice, TrafficKind::urllc};

constexpr std::string_view to_string(TrafficKind k) {
  switch (k) {
    case TrafficKind::video: return "video";
    case TrafficKind::gaming: return "gaming";
    case TrafficKind::voice: return "voice";
    case TrafficKind::urllc: return "urllc";
  }
  return "?";
}

inline std::optional<TrafficKind> parse_traffic_kind(std::string_view s) {
  for (auto k : kAllTrafficKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

constexpr std::size_t index_of(TrafficKind k) { return static_cast<std::size_t>(k); }

struct BsId {
  std::uint32_t value{};
  friend constexpr auto operator<=>(BsId, BsId) = default;
};

struct UeId {
  std::uint32_t value{};
  friend constexpr auto operator<=>(UeId, UeId) = default;
};

}  // namespace intentran
