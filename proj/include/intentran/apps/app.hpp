#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "intentran/core/errors.hpp"
#include "intentran/core/types.hpp"

namespace intentran::apps {

/// App1 traffic steering, App2 cell sleeping, App3 beamforming,
/// App4 power allocation, App5 energy-efficient handover.
enum class AppId : std::uint8_t { app1 = 1, app2, app3, app4, app5 };

inline constexpr std::size_t kNumApps = 5;
inline constexpr std::array<AppId, kNumApps> kAllApps{AppId::app1, AppId::app2, AppId::app3, AppId::app4,
                                                      AppId::app5};

constexpr std::size_t app_index(AppId a) { return static_cast<std::size_t>(a) - 1; }

constexpr std::string_view to_string(AppId a) {
  switch (a) {
    case AppId::app1: return "App1";
    case AppId::app2: return "App2";
    case AppId::app3: return "App3";
    case AppId::app4: return "App4";
    case AppId::app5: return "App5";
  }
  return "?";
}

inline std::optional<AppId> parse_app(std::string_view s) {
  for (auto a : kAllApps)
    if (to_string(a) == s) return a;
  return std::nullopt;
}

enum class Timescale : std::uint8_t { tactical, strategic };

struct AppDescriptor {
  AppId id;
  std::string_view name;
  Timescale timescale;
  std::vector<KpiKind> improves;
  std::vector<AppId> conflicts_with;
};

inline const AppDescriptor& descriptor(AppId a) {
  static const std::array<AppDescriptor, kNumApps> table{{
      {AppId::app1, "traffic_steering", Timescale::tactical, {KpiKind::throughput, KpiKind::delay}, {}},
      {AppId::app2, "cell_sleeping", Timescale::strategic, {KpiKind::energy_efficiency},
       {AppId::app3, AppId::app4}},
      {AppId::app3, "beamforming", Timescale::tactical, {KpiKind::throughput}, {AppId::app2}},
      {AppId::app4, "power_allocation", Timescale::tactical, {KpiKind::throughput}, {AppId::app2}},
      {AppId::app5, "handover_management", Timescale::tactical, {KpiKind::energy_efficiency}, {}},
  }};
  return table[app_index(a)];
}

/// ζ(O): 1 when the application can improve the KPI.
inline int capability(AppId a, KpiKind k) {
  for (auto i : descriptor(a).improves)
    if (i == k) return 1;
  return 0;
}

inline bool conflicts(AppId a, AppId b) {
  for (auto c : descriptor(a).conflicts_with)
    if (c == b) return true;
  return false;
}

/// Subset of the five applications; bit i is App(i+1).
class AppSet {
 public:
  constexpr AppSet() = default;
  constexpr explicit AppSet(std::uint8_t mask) : mask_(mask & 0x1F) {}
  constexpr AppSet(std::initializer_list<AppId> apps) {
    for (auto a : apps) mask_ |= bit(a);
  }

  constexpr std::uint8_t mask() const { return mask_; }
  constexpr bool contains(AppId a) const { return (mask_ & bit(a)) != 0; }
  constexpr bool empty() const { return mask_ == 0; }
  constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(mask_)); }
  constexpr AppSet with(AppId a) const { return AppSet(static_cast<std::uint8_t>(mask_ | bit(a))); }
  constexpr AppSet without(AppId a) const { return AppSet(static_cast<std::uint8_t>(mask_ & ~bit(a))); }

  std::vector<AppId> apps() const {
    std::vector<AppId> out;
    for (auto a : kAllApps)
      if (contains(a)) out.push_back(a);
    return out;
  }

  /// Text form "App1+App3"; "none" for the empty set.
  std::string to_string() const {
    if (empty()) return "none";
    std::string s;
    for (auto a : apps()) {
      if (!s.empty()) s += '+';
      s += apps::to_string(a);
    }
    return s;
  }

  static AppSet parse(std::string_view s) {
    AppSet out;
    if (s == "none" || s.empty()) return out;
    std::size_t start = 0;
    while (start <= s.size()) {
      auto end = s.find_first_of("+,", start);
      if (end == std::string_view::npos) end = s.size();
      auto tok = s.substr(start, end - start);
      while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
      while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
      auto a = parse_app(tok);
      if (!a) throw ConfigurationError("unknown application '" + std::string(tok) + "'");
      out = out.with(*a);
      start = end + 1;
    }
    return out;
  }

  friend constexpr bool operator==(AppSet, AppSet) = default;

 private:
  static constexpr std::uint8_t bit(AppId a) { return static_cast<std::uint8_t>(1u << app_index(a)); }
  std::uint8_t mask_{0};
};

/// Learning hyperparameters shared by the per-app tabular learners.
struct AppLearningParams {
  double alpha{0.05};
  double gamma{0.9};
  std::size_t batch_size{32};
  std::size_t exploring_steps{3000};
  double exploit_epsilon{0.05};
};

}  // namespace intentran::apps
