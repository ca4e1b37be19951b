#pragma once

#include <algorithm>
#include <vector>

#include "intentran/apps/controls.hpp"
#include "intentran/apps/estimates.hpp"

namespace intentran::apps {

/// App4. Coordinate ascent over per-BS power indices on the estimated sum
/// throughput. Ties keep the lower power.
class PowerAllocation {
 public:
  std::size_t max_passes{3};

  std::vector<std::size_t> optimise(const sim::Simulator& sim) const {
    auto setting = sim.current_setting();
    const std::size_t nb = sim.num_bs();
    std::vector<std::size_t> idx(nb);
    for (std::size_t b = 0; b < nb; ++b) idx[b] = sim.state().bss[b].power_index;
    double best_total = estimated_sum_throughput(sim, setting);
    for (std::size_t pass = 0; pass < max_passes; ++pass) {
      bool improved = false;
      for (std::size_t b = 0; b < nb; ++b) {
        if (setting.sleeping[b]) continue;
        const auto& cands = sim.power_candidates(b);
        std::size_t best_i = idx[b];
        for (std::size_t i = 0; i < cands.size(); ++i) {
          if (i == idx[b]) continue;
          setting.tx_dbm[b] = cands[i];
          const double total = estimated_sum_throughput(sim, setting);
          const double tol = 1e-9 * std::max(best_total, 1.0);
          if (total > best_total + tol || (total >= best_total - tol && i < best_i)) {
            best_total = total;
            best_i = i;
          }
        }
        setting.tx_dbm[b] = cands[best_i];
        if (best_i != idx[b]) {
          idx[b] = best_i;
          improved = true;
        }
      }
      if (!improved) break;
    }
    return idx;
  }

  AppControls act(const sim::Simulator& sim) const {
    AppControls c;
    if (sim.num_ues() == 0) return c;
    const auto idx = optimise(sim);
    for (std::size_t b = 0; b < idx.size(); ++b)
      if (!sim.state().bss[b].sleeping && idx[b] != sim.state().bss[b].power_index)
        c.power.push_back({BsId{static_cast<std::uint32_t>(b)}, idx[b]});
    return c;
  }
};

}  // namespace intentran::apps
