#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "intentran/core/types.hpp"
#include "intentran/sim/config.hpp"

namespace intentran::sim {

struct Position {
  double x{};
  double y{};
  friend bool operator==(const Position&, const Position&) = default;
};

enum class BsKind : std::uint8_t { macro, small };

struct UeSnapshot {
  TrafficKind cls{};
  BsId serving{};
  std::optional<std::size_t> beam;
  double sinr_db{};
  /// Age of the head-of-line packet; zero when the queue is empty.
  double queue_delay_s{};
  double queue_bits{};
  std::size_t queue_packets{};
  /// Cumulative since the start of the run.
  double offered_bits{};
  double delivered_bits{};
  Position position;
  friend bool operator==(const UeSnapshot&, const UeSnapshot&) = default;
};

struct BsSnapshot {
  BsKind kind{};
  RatKind rat{};
  Position position;
  bool sleeping{false};
  /// Busy fraction of the last slot, in [0, 1].
  double load{};
  /// Highest per-slot load seen during the last completed strategic tick.
  double tick_peak_load{};
  double tick_mean_load{};
  std::size_t queue_packets{};
  std::size_t attached{};
  std::size_t power_index{};
  double tx_power_dbm{};
  friend bool operator==(const BsSnapshot&, const BsSnapshot&) = default;
};

/// Per-slot snapshot of the network; the MDP state is `traffic_mix`.
struct NetworkState {
  std::uint64_t slot{};
  std::vector<UeSnapshot> ues;
  std::vector<BsSnapshot> bss;
  /// Fraction of offered bits per class over the last completed tick; sums to 1.
  std::array<double, kNumTrafficKinds> traffic_mix{0.25, 0.25, 0.25, 0.25};

  double mean_load() const {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& b : bss) {
      if (b.sleeping) continue;
      s += b.tick_mean_load;
      ++n;
    }
    return n == 0 ? 0.0 : s / static_cast<double>(n);
  }

  std::size_t dominant_class() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < kNumTrafficKinds; ++k)
      if (traffic_mix[k] > traffic_mix[best]) best = k;
    return best;
  }

  friend bool operator==(const NetworkState&, const NetworkState&) = default;
};

struct ClassKpi {
  double throughput_bps{};
  double per_ue_throughput_bps{};
  double mean_delay_s{};
  double energy_efficiency{};
  double delivered_bits{};
  double offered_bits{};
  std::size_t packets{};
  std::size_t ues{};
  friend bool operator==(const ClassKpi&, const ClassKpi&) = default;
};

struct KpiSnapshot {
  double throughput_bps{};
  double mean_delay_s{};
  double energy_efficiency{};
  double total_energy_j{};
  double delivered_bits{};
  double offered_bits{};
  double duration_s{};
  std::size_t packets{};
  std::size_t dropped_packets{};
  std::array<ClassKpi, kNumTrafficKinds> per_class{};

  double offered_bps() const { return duration_s > 0.0 ? offered_bits / duration_s : 0.0; }

  double value(KpiKind k) const {
    switch (k) {
      case KpiKind::throughput: return throughput_bps;
      case KpiKind::delay: return mean_delay_s;
      case KpiKind::energy_efficiency: return energy_efficiency;
    }
    return 0.0;
  }

  friend bool operator==(const KpiSnapshot&, const KpiSnapshot&) = default;
};

/// Per-UE QoS view of one strategic tick.
struct UeTickStats {
  TrafficKind cls{};
  double throughput_bps{};
  double mean_delay_s{};
  std::size_t packets{};
  bool violated{false};
  friend bool operator==(const UeTickStats&, const UeTickStats&) = default;
};

struct TickReport {
  std::uint64_t tick{};
  /// Slot index at the end of the tick.
  std::uint64_t slot{};
  KpiSnapshot kpi;
  std::vector<UeTickStats> ues;

  std::size_t violations() const {
    std::size_t n = 0;
    for (const auto& u : ues) n += u.violated ? 1 : 0;
    return n;
  }
  friend bool operator==(const TickReport&, const TickReport&) = default;
};

/// KPI view used for QoS checks: throughput is the mean per-UE rate of the class.
inline KpiSnapshot qos_view(const KpiSnapshot& s, TrafficKind k) {
  const auto& c = s.per_class[index_of(k)];
  KpiSnapshot v;
  v.throughput_bps = c.per_ue_throughput_bps;
  v.mean_delay_s = c.mean_delay_s;
  v.energy_efficiency = c.energy_efficiency;
  v.delivered_bits = c.delivered_bits;
  v.offered_bits = c.offered_bits;
  v.duration_s = s.duration_s;
  v.total_energy_j = s.total_energy_j;
  v.packets = c.packets;
  return v;
}

}  // namespace intentran::sim
