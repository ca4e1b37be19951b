#pragma once

#include <limits>
#include <vector>

#include "intentran/apps/controls.hpp"
#include "intentran/apps/estimates.hpp"
#include "intentran/sim/energy.hpp"

namespace intentran::apps {

/// App5. Moves a UE to the awake BS with the lowest estimated energy per bit,
/// when that beats the current serving BS by the hysteresis margin.
class HandoverManager {
 public:
  double hysteresis{0.05};

  /// Operating power of BS b split over its attached UEs (including a newcomer
  /// when u is not already there), divided by the bits u would get per second.
  static double energy_per_bit(const sim::Simulator& sim, const sim::RadioSetting& setting, const AppContext& ctx,
                               std::size_t u, std::size_t b) {
    if (setting.sleeping[b]) return std::numeric_limits<double>::infinity();
    const bool here = sim.serving(u) == b;
    const std::size_t n = setting.attached[b] + (here ? 0 : 1);
    const auto& p = sim.bs_kind(b) == sim::BsKind::macro ? sim.config().macro_energy : sim.config().small_energy;
    const double watts = sim::bs_energy_watts(p, false, sim::dbm_to_watts(setting.tx_dbm[b]), 1.0);
    const double rate = estimated_rate(sim, setting, u, b, std::max<std::size_t>(sim.backlogged(b) + (here ? 0 : 1), 1),
                                       here ? sim.beam(u) : expected_beam(sim, ctx, u, b));
    const double bits = std::min(sim.offered_rate(u), rate);
    if (!(bits > 0.0)) return std::numeric_limits<double>::infinity();
    return watts / static_cast<double>(std::max<std::size_t>(n, 1)) / bits;
  }

  AppControls act(const sim::Simulator& sim, const AppContext& ctx) const {
    AppControls c;
    auto setting = sim.current_setting();
    for (std::size_t u = 0; u < sim.num_ues(); ++u) {
      const std::size_t cur = sim.serving(u);
      const double here = energy_per_bit(sim, setting, ctx, u, cur);
      std::size_t best = cur;
      double best_e = here;
      for (std::size_t b = 0; b < sim.num_bs(); ++b) {
        if (b == cur) continue;
        const double e = energy_per_bit(sim, setting, ctx, u, b);
        if (e < best_e) {
          best_e = e;
          best = b;
        }
      }
      if (best == cur || !(best_e < here * (1.0 - hysteresis))) continue;
      c.handovers.push_back({UeId{static_cast<std::uint32_t>(u)}, BsId{static_cast<std::uint32_t>(cur)},
                             BsId{static_cast<std::uint32_t>(best)}});
      --setting.attached[cur];
      ++setting.attached[best];
    }
    return c;
  }
};

}  // namespace intentran::apps
