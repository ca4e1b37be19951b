#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "intentran/core/errors.hpp"
#include "intentran/core/types.hpp"

namespace intentran::sim {

enum class RatKind : std::uint8_t { lte, nr_mid, nr_high };

inline constexpr std::size_t kNumRats = 3;

constexpr std::string_view to_string(RatKind r) {
  switch (r) {
    case RatKind::lte: return "lte";
    case RatKind::nr_mid: return "nr_mid";
    case RatKind::nr_high: return "nr_high";
  }
  return "?";
}

inline std::optional<RatKind> parse_rat(std::string_view s) {
  for (auto r : {RatKind::lte, RatKind::nr_mid, RatKind::nr_high})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

struct RatParams {
  double bandwidth_hz{};
  double carrier_hz{};
  double scs_hz{};
  double max_tx_power_dbm{};
  double pathloss_exponent{};
  /// Highest modulation/coding efficiency the scheduler will grant (bit/s/Hz).
  double max_spectral_efficiency{};
  /// High-band carriers get analog beamforming gain when a beam is set.
  bool beamforming{false};
};

inline std::array<RatParams, kNumRats> default_rats() {
  return {{
      {40e6, 800e6, 15e3, 38.0, 2.8, 5.5, false},
      {60e6, 3.5e9, 15e3, 43.0, 3.0, 7.4, false},
      {60e6, 30e9, 15e3, 43.0, 3.5, 7.4, true},
  }};
}

enum class Distribution : std::uint8_t { pareto, uniform, poisson };

constexpr std::string_view to_string(Distribution d) {
  switch (d) {
    case Distribution::pareto: return "pareto";
    case Distribution::uniform: return "uniform";
    case Distribution::poisson: return "poisson";
  }
  return "?";
}

inline std::optional<Distribution> parse_distribution(std::string_view s) {
  for (auto d : {Distribution::pareto, Distribution::uniform, Distribution::poisson})
    if (to_string(d) == s) return d;
  return std::nullopt;
}

enum class Direction : std::uint8_t { at_least, at_most };

constexpr std::string_view to_string(Direction d) {
  return d == Direction::at_least ? "at_least" : "at_most";
}

inline std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "at_least") return Direction::at_least;
  if (s == "at_most") return Direction::at_most;
  return std::nullopt;
}

struct QosRequirement {
  KpiKind metric{};
  double target{};  // D_QoS in metric units (bit/s per UE, s, bit/J)
  Direction direction{};
};

struct QoSProfile {
  std::vector<QosRequirement> requirements;

  const QosRequirement* find(KpiKind k) const {
    auto it = std::find_if(requirements.begin(), requirements.end(),
                           [k](const QosRequirement& r) { return r.metric == k; });
    return it == requirements.end() ? nullptr : &*it;
  }

  bool covers(KpiKind k) const { return find(k) != nullptr; }

  void validate(std::string_view owner) const {
    std::array<bool, 3> seen{};
    for (const auto& r : requirements) {
      if (!(r.target > 0.0))
        throw ConfigurationError(std::string(owner) + ": QoS target must be positive");
      auto& s = seen[static_cast<std::size_t>(r.metric)];
      if (s)
        throw ConfigurationError(std::string(owner) + ": duplicate QoS requirement for " +
                                 std::string(to_string(r.metric)));
      s = true;
    }
  }
};

struct TrafficClass {
  TrafficKind kind{};
  double mean_interarrival_s{};
  Distribution distribution{};
  double packet_bits{};
  QoSProfile qos;
};

/// Pareto shape used for heavy-tailed inter-arrivals; finite mean, infinite variance.
inline constexpr double kParetoShape = 1.5;

inline std::array<TrafficClass, kNumTrafficKinds> default_traffic_classes() {
  using enum TrafficKind;
  return {{
      {video, 12.5e-3, Distribution::pareto, 1500.0 * 8,
       {{{KpiKind::delay, 0.150, Direction::at_most}}}},
      {gaming, 40e-3, Distribution::uniform, 1500.0 * 8,
       {{{KpiKind::delay, 0.080, Direction::at_most}}}},
      {voice, 20e-3, Distribution::poisson, 500.0 * 8,
       {{{KpiKind::delay, 0.100, Direction::at_most}}}},
      {urllc, 0.5e-3, Distribution::poisson, 256.0 * 8,
       {{{KpiKind::delay, 0.020, Direction::at_most}}}},
  }};
}

struct EnergyParams {
  double idle_w{};   // P0
  double slope{};    // Δ, multiplies radiated watts
  double sleep_w{};  // P_sleep
};

struct SimConfig {
  std::size_t num_macro_bs{1};
  std::size_t num_small_bs{6};
  std::size_t num_ues{60};
  double slot_duration_s{0.01};
  std::size_t strategic_period_slots{100};

  double macro_radius_m{500.0};
  double small_radius_m{100.0};
  double small_ring_radius_m{250.0};
  /// Fraction of UEs dropped inside a small-cell disc rather than anywhere in the macro cell.
  double hotspot_fraction{0.67};
  double ue_speed_mps{1.0};

  std::array<RatParams, kNumRats> rats{default_rats()};
  RatKind macro_rat{RatKind::lte};
  /// Small cell i uses small_rats[i % size].
  std::vector<RatKind> small_rats{RatKind::nr_mid, RatKind::nr_high};

  std::vector<double> macro_power_dbm{32.0, 35.0, 38.0};
  std::size_t macro_default_power{2};
  std::vector<double> small_power_dbm{20.0, 24.0, 27.0, 30.0};
  std::size_t small_default_power{0};

  std::size_t num_antennas{16};
  std::size_t codebook_size{12};

  EnergyParams macro_energy{130.0, 4.7, 10.0};
  EnergyParams small_energy{6.8, 4.0, 1.0};

  double shadowing_sigma_db{6.0};
  double noise_figure_db{7.0};

  std::array<TrafficClass, kNumTrafficKinds> classes{default_traffic_classes()};
  std::array<double, kNumTrafficKinds> class_mix{0.25, 0.25, 0.25, 0.25};
  /// When set, packet sizes are scaled so the mean offered load equals this value.
  std::optional<double> offered_load_bps;
  double diurnal_amplitude{0.0};
  std::size_t diurnal_period_ticks{24};
  std::size_t max_queue_packets{5000};

  std::uint64_t seed{1};

  std::size_t num_bs() const { return num_macro_bs + num_small_bs; }
  const RatParams& rat(RatKind r) const { return rats[static_cast<std::size_t>(r)]; }
  const TrafficClass& traffic(TrafficKind k) const { return classes[index_of(k)]; }
  double strategic_duration_s() const { return slot_duration_s * static_cast<double>(strategic_period_slots); }

  void validate() const {
    if (num_bs() < 1) throw ConfigurationError("simulation: at least one base station is required");
    if (num_macro_bs < 1) throw ConfigurationError("simulation: at least one macro base station is required");
    if (num_ues < 1) throw ConfigurationError("simulation: at least one UE is required");
    if (!(slot_duration_s > 0.0)) throw ConfigurationError("simulation: slot_duration must be positive");
    if (strategic_period_slots < 1) throw ConfigurationError("simulation: strategic_period must be >= 1");
    if (small_rats.empty() && num_small_bs > 0) throw ConfigurationError("simulation: small_rats is empty");
    for (auto r : {RatKind::lte, RatKind::nr_mid, RatKind::nr_high}) {
      const auto& p = rat(r);
      if (!(p.bandwidth_hz > 0.0))
        throw ConfigurationError("rats." + std::string(to_string(r)) + ": bandwidth must be positive");
      if (!(p.carrier_hz > 0.0) || !(p.pathloss_exponent > 0.0) || !(p.max_spectral_efficiency > 0.0))
        throw ConfigurationError("rats." + std::string(to_string(r)) + ": invalid radio parameters");
    }
    auto check_powers = [&](const std::vector<double>& p, std::size_t def, RatKind r, std::string_view who) {
      if (p.empty()) throw ConfigurationError(std::string(who) + ": power candidates are empty");
      if (!std::is_sorted(p.begin(), p.end()))
        throw ConfigurationError(std::string(who) + ": power candidates must be sorted ascending");
      if (p.back() > rat(r).max_tx_power_dbm)
        throw ConfigurationError(std::string(who) + ": power candidate exceeds RAT maximum");
      if (def >= p.size()) throw ConfigurationError(std::string(who) + ": default power index out of range");
    };
    check_powers(macro_power_dbm, macro_default_power, macro_rat, "macro_power_dbm");
    for (auto r : small_rats) check_powers(small_power_dbm, small_default_power, r, "small_power_dbm");
    if (num_antennas < 1 || codebook_size < 1) throw ConfigurationError("beams: codebook must be non-empty");
    double mix = 0.0;
    for (std::size_t k = 0; k < kNumTrafficKinds; ++k) {
      const auto& c = classes[k];
      if (!(c.mean_interarrival_s > 0.0))
        throw ConfigurationError("traffic." + std::string(to_string(c.kind)) + ": mean_interarrival must be positive");
      if (!(c.packet_bits > 0.0))
        throw ConfigurationError("traffic." + std::string(to_string(c.kind)) + ": packet_bits must be positive");
      c.qos.validate("qos." + std::string(to_string(c.kind)));
      if (class_mix[k] < 0.0) throw ConfigurationError("traffic.mix: fractions must be non-negative");
      mix += class_mix[k];
    }
    if (std::abs(mix - 1.0) > 1e-9) throw ConfigurationError("traffic.mix: fractions must sum to 1");
    if (offered_load_bps && !(*offered_load_bps > 0.0))
      throw ConfigurationError("traffic.offered_load_bps must be positive");
    if (diurnal_amplitude < 0.0 || diurnal_amplitude >= 1.0)
      throw ConfigurationError("traffic.diurnal_amplitude must be in [0, 1)");
    if (max_queue_packets < 1) throw ConfigurationError("simulation: max_queue_packets must be >= 1");
  }
};

}  // namespace intentran::sim
