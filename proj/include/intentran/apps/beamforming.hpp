#pragma once

#include "intentran/apps/controls.hpp"
#include "intentran/apps/estimates.hpp"

namespace intentran::apps {

/// App3. Points each served UE's beam at the codebook entry nearest its bearing.
class Beamforming {
 public:
  AppControls act(const sim::Simulator& sim) const {
    AppControls c;
    const auto& st = sim.state();
    for (std::size_t u = 0; u < sim.num_ues(); ++u) {
      const std::size_t b = sim.serving(u);
      if (st.bss[b].sleeping || !sim.bs_rat_params(b).beamforming) continue;
      const std::size_t beam = sim.codebook().nearest(sim.bearing(u, b));
      if (sim.beam(u) == beam) continue;
      c.beams.push_back({BsId{static_cast<std::uint32_t>(b)}, UeId{static_cast<std::uint32_t>(u)}, beam});
    }
    return c;
  }
};

}  // namespace intentran::apps
