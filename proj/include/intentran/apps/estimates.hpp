#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>

#include "intentran/apps/app.hpp"
#include "intentran/sim/simulator.hpp"

namespace intentran::apps {

/// Everything an application may know besides the network itself.
struct AppContext {
  AppSet enabled;
};

/// Beam a UE would get on BS b: the current one when already served there,
/// the nearest codebook beam when beamforming is running, none otherwise.
inline std::optional<std::size_t> expected_beam(const sim::Simulator& sim, const AppContext& ctx, std::size_t u,
                                                std::size_t b) {
  if (!sim.bs_rat_params(b).beamforming) return std::nullopt;
  if (sim.serving(u) == b && sim.beam(u)) return sim.beam(u);
  if (ctx.enabled.contains(AppId::app3)) return sim.codebook().nearest(sim.bearing(u, b));
  return std::nullopt;
}

/// Rate UE u would get from BS b when sharing its bandwidth with `sharers` UEs.
inline double estimated_rate(const sim::Simulator& sim, const sim::RadioSetting& setting, std::size_t u, std::size_t b,
                             std::size_t sharers, std::optional<std::size_t> beam) {
  if (setting.sleeping[b]) return 0.0;
  const double share = sim.bs_rat_params(b).bandwidth_hz / static_cast<double>(std::max<std::size_t>(sharers, 1));
  return sim.capped_rate(b, sim.sinr_linear(u, b, setting, beam), share);
}

/// Sum over UEs of the rate each gets from its serving BS with an equal share
/// among all attached UEs. Used as the power-allocation objective.
inline double estimated_sum_throughput(const sim::Simulator& sim, const sim::RadioSetting& setting) {
  double total = 0.0;
  for (std::size_t u = 0; u < sim.num_ues(); ++u) {
    const std::size_t b = sim.serving(u);
    total += estimated_rate(sim, setting, u, b, setting.attached[b], sim.beam(u));
  }
  return total;
}

}  // namespace intentran::apps
