#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "intentran/core/types.hpp"

namespace intentran::apps {

struct SteeringAssignment {
  UeId ue;
  BsId bs;
  friend bool operator==(const SteeringAssignment&, const SteeringAssignment&) = default;
};

/// Beam used by `bs` while serving `ue`; nullopt clears it (no array gain).
struct BeamAssignment {
  BsId bs;
  UeId ue;
  std::optional<std::size_t> beam;
  friend bool operator==(const BeamAssignment&, const BeamAssignment&) = default;
};

struct PowerAssignment {
  BsId bs;
  std::size_t index{};
  friend bool operator==(const PowerAssignment&, const PowerAssignment&) = default;
};

struct Handover {
  UeId ue;
  BsId source;
  BsId target;
  friend bool operator==(const Handover&, const Handover&) = default;
};

/// Control outputs for one tick. Every field is a delta against the simulator's
/// current configuration except `sleep_set`, which replaces the sleeping set.
struct AppControls {
  std::optional<std::vector<BsId>> sleep_set;
  std::vector<SteeringAssignment> steering;
  std::vector<BeamAssignment> beams;
  std::vector<PowerAssignment> power;
  std::vector<Handover> handovers;

  bool empty() const {
    return !sleep_set && steering.empty() && beams.empty() && power.empty() && handovers.empty();
  }

  void merge(const AppControls& o) {
    if (o.sleep_set) sleep_set = o.sleep_set;
    steering.insert(steering.end(), o.steering.begin(), o.steering.end());
    beams.insert(beams.end(), o.beams.begin(), o.beams.end());
    power.insert(power.end(), o.power.begin(), o.power.end());
    handovers.insert(handovers.end(), o.handovers.begin(), o.handovers.end());
  }

  bool sleeping(BsId b) const {
    return sleep_set && std::find(sleep_set->begin(), sleep_set->end(), b) != sleep_set->end();
  }

  /// True when no BS in the sleep set is referenced by another control.
  bool sleep_safe() const {
    if (!sleep_set) return true;
    for (const auto& s : steering)
      if (sleeping(s.bs)) return false;
    for (const auto& b : beams)
      if (sleeping(b.bs)) return false;
    for (const auto& p : power)
      if (sleeping(p.bs)) return false;
    for (const auto& h : handovers)
      if (sleeping(h.source) || sleeping(h.target)) return false;
    return true;
  }

  /// Removes every entry that references a BS in the sleep set.
  void drop_sleeping_references() {
    if (!sleep_set) return;
    std::erase_if(steering, [&](const auto& s) { return sleeping(s.bs); });
    std::erase_if(beams, [&](const auto& b) { return sleeping(b.bs); });
    std::erase_if(power, [&](const auto& p) { return sleeping(p.bs); });
    std::erase_if(handovers, [&](const auto& h) { return sleeping(h.source) || sleeping(h.target); });
  }

  friend bool operator==(const AppControls&, const AppControls&) = default;
};

}  // namespace intentran::apps
