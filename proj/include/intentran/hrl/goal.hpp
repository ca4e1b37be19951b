#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "intentran/apps/app.hpp"
#include "intentran/intent/intent.hpp"
#include "intentran/sim/state.hpp"

namespace intentran::hrl {

inline constexpr std::size_t kNumActions = 31;
inline constexpr std::array<double, 5> kGoalBuckets{5.0, 10.0, 15.0, 20.0, 30.0};
inline constexpr std::size_t kNumGoals = 3 * kGoalBuckets.size();
inline constexpr std::size_t kNumStates = kNumTrafficKinds;

/// Action index i in [0, 31) is the app set with mask i + 1.
constexpr apps::AppSet action_set(std::size_t index) { return apps::AppSet(static_cast<std::uint8_t>(index + 1)); }

inline std::size_t action_index(apps::AppSet s) {
  if (s.empty()) throw ContractViolation("the empty app set is not an action");
  return static_cast<std::size_t>(s.mask()) - 1;
}

/// Nearest bucket; ties go to the smaller bucket.
inline std::size_t snap_bucket(double magnitude_pct) {
  const double m = std::abs(magnitude_pct);
  std::size_t best = 0;
  for (std::size_t i = 1; i < kGoalBuckets.size(); ++i)
    if (std::abs(kGoalBuckets[i] - m) < std::abs(kGoalBuckets[best] - m)) best = i;
  return best;
}

inline std::size_t kpi_index(KpiKind k) { return static_cast<std::size_t>(k); }

inline std::size_t goal_index(KpiKind k, std::size_t bucket) { return kpi_index(k) * kGoalBuckets.size() + bucket; }

/// Discretised network state: the dominant traffic class.
inline std::size_t state_index(const sim::NetworkState& s) { return s.dominant_class(); }

struct Goal {
  KpiKind kpi{};
  double baseline{};
  double target_value{};
  std::size_t deadline{50};
  std::size_t bucket{};

  std::size_t index() const { return goal_index(kpi, bucket); }

  /// Goal reached within the given relative tolerance.
  bool reached(double achieved, double tolerance = 0.02) const {
    return higher_is_better(kpi) ? achieved >= target_value * (1.0 - tolerance)
                                 : achieved <= target_value * (1.0 + tolerance);
  }
};

inline Goal intent_to_goal(const intent::ProcessedIntent& in, double current, std::size_t deadline = 50) {
  if (!(current > 0.0)) throw DegenerateBaseline("current " + std::string(to_string(in.type)) + " is zero");
  if (deadline < 1) throw ConfigurationError("goal deadline must be >= 1 tick");
  Goal g;
  g.kpi = in.type;
  g.baseline = current;
  const double m = std::abs(in.magnitude_pct) / 100.0;
  g.target_value = higher_is_better(in.type) ? current * (1.0 + m) : current * (1.0 - m);
  if (!(g.target_value > 0.0)) throw DegenerateGoal("goal target is not positive");
  g.deadline = deadline;
  g.bucket = snap_bucket(in.magnitude_pct);
  return g;
}

}  // namespace intentran::hrl
