#pragma once

#include "intentran/core/errors.hpp"
#include "intentran/sim/config.hpp"
#include "intentran/sim/radio.hpp"

namespace intentran::sim {

struct BsEnergyState {
  bool sleeping{false};
  double tx_power_dbm{0.0};
  EnergyParams params;
};

/// Linear load-independent BS power model: active (P0 + Δ·P_tx)·t, sleeping P_sleep·t.
inline double bs_energy(const BsEnergyState& bs, double slot_duration_s) {
  if (!(slot_duration_s > 0.0)) throw ConfigurationError("bs_energy: slot duration must be positive");
  if (bs.sleeping) return bs.params.sleep_w * slot_duration_s;
  return (bs.params.idle_w + bs.params.slope * dbm_to_watts(bs.tx_power_dbm)) * slot_duration_s;
}

/// Same model with the radiated power given in watts.
inline double bs_energy_watts(const EnergyParams& p, bool sleeping, double tx_watts, double slot_duration_s) {
  if (!(slot_duration_s > 0.0)) throw ConfigurationError("bs_energy: slot duration must be positive");
  if (sleeping) return p.sleep_w * slot_duration_s;
  return (p.idle_w + p.slope * tx_watts) * slot_duration_s;
}

}  // namespace intentran::sim
