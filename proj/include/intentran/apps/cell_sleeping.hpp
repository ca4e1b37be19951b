#pragma once

#include <vector>

#include "intentran/apps/controls.hpp"
#include "intentran/apps/estimates.hpp"

namespace intentran::apps {

/// App2. Strategic-tick decision: small cells that stayed below the sleep
/// threshold for the whole tick and have nothing queued are put to sleep while
/// their umbrella macro can absorb the traffic.
class CellSleeping {
 public:
  double sleep_threshold{0.1};
  double wake_threshold{0.8};

  AppControls act(const sim::Simulator& sim) const {
    AppControls c;
    std::vector<BsId> sleep;
    const auto& st = sim.state();
    if (sim.num_ues() == 0) {
      c.sleep_set = sleep;
      return c;
    }
    double umbrella = 0.0;
    for (std::size_t b = 0; b < st.bss.size(); ++b)
      if (st.bss[b].kind == sim::BsKind::macro) umbrella = std::max(umbrella, st.bss[b].tick_mean_load);
    const bool umbrella_has_room = umbrella < wake_threshold;
    for (std::size_t b = 0; b < st.bss.size(); ++b) {
      const auto& bs = st.bss[b];
      if (bs.kind != sim::BsKind::small) continue;
      if (!umbrella_has_room) continue;
      const bool idle = bs.sleeping || (bs.tick_peak_load < sleep_threshold && bs.load < sleep_threshold);
      if (idle && bs.queue_packets == 0) sleep.push_back(BsId{static_cast<std::uint32_t>(b)});
    }
    c.sleep_set = std::move(sleep);
    return c;
  }
};

}  // namespace intentran::apps
