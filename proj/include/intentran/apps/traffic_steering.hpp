#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "intentran/apps/controls.hpp"
#include "intentran/apps/estimates.hpp"
#include "intentran/core/rng.hpp"

namespace intentran::apps {

/// App1. Per-UE choice between the anchor macro and the best small cell,
/// driven by a tabular Q-estimate of per-UE demand satisfaction.
///
/// Learner state: (class, log2 rate-ratio bucket, anchor load bucket).
/// Learner action: 0 = stay on anchor, 1 = best small cell.
class TrafficSteering {
 public:
  static constexpr std::size_t kRatioBuckets = 9;
  static constexpr std::size_t kLoadBuckets = 3;
  static constexpr std::size_t kStates = kNumTrafficKinds * kRatioBuckets * kLoadBuckets;
  static constexpr double kSwitchMargin = 0.02;

  using Table = std::vector<std::array<double, 2>>;

  struct Decision {
    std::size_t ue;
    std::size_t state;
    int action;
    std::size_t target_bs;
    double offered_bits{};
    double delivered_bits{};
  };

  explicit TrafficSteering(AppLearningParams params = {}) : params_(params), q_(kStates, {0.0, 0.0}) {}

  const Table& table() const { return q_; }
  void set_table(Table t) {
    if (t.size() != kStates) throw ConfigurationError("App1 table has wrong size");
    q_ = std::move(t);
  }
  const AppLearningParams& params() const { return params_; }
  std::size_t updates() const { return updates_; }

  /// Greedy (or ε-greedy when epsilon > 0) decisions for every UE.
  std::vector<Decision> decide(const sim::Simulator& sim, const AppContext& ctx, RngStream* rng = nullptr,
                               double epsilon = 0.0) const {
    std::vector<Decision> out;
    const std::size_t nb = sim.num_bs();
    if (sim.num_ues() == 0) return out;
    const auto setting = sim.current_setting();
    std::vector<std::size_t> sharers(nb);
    for (std::size_t b = 0; b < nb; ++b) sharers[b] = std::max<std::size_t>(sim.backlogged(b), 1);

    for (std::size_t u = 0; u < sim.num_ues(); ++u) {
      const std::size_t cur = sim.serving(u);
      const std::size_t anchor = sim.anchor(u);
      auto share_if = [&](std::size_t b) { return sharers[b] + (cur == b ? 0 : 1); };

      std::optional<std::size_t> best_small;
      double best_rate = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        if (sim.bs_kind(b) != sim::BsKind::small || setting.sleeping[b]) continue;
        const double r = estimated_rate(sim, setting, u, b, share_if(b), expected_beam(sim, ctx, u, b));
        if (r > best_rate) {
          best_rate = r;
          best_small = b;
        }
      }
      const double anchor_rate = estimated_rate(sim, setting, u, anchor, share_if(anchor), std::nullopt);
      const std::size_t s = state_index(sim.ue_class(u), best_small ? best_rate : 0.0, anchor_rate,
                                        sim.state().bss[anchor].tick_mean_load);
      int action;
      if (rng && epsilon > 0.0 && rng->bernoulli(epsilon)) {
        action = static_cast<int>(rng->index(2));
      } else {
        const int current_action = cur == anchor ? 0 : 1;
        const int other = 1 - current_action;
        action = q_[s][other] > q_[s][current_action] + kSwitchMargin ? other : current_action;
      }
      if (action == 1 && !best_small) action = 0;
      const std::size_t target = action == 0 ? anchor : *best_small;
      const auto& us = sim.state().ues[u];
      out.push_back({u, s, action, target, us.offered_bits, us.delivered_bits});
      if (target != cur) {
        --sharers[cur];
        if (sharers[cur] == 0) sharers[cur] = 1;
        ++sharers[target];
      }
    }
    return out;
  }

  AppControls act(const sim::Simulator& sim, const AppContext& ctx) const {
    AppControls c;
    for (const auto& d : decide(sim, ctx)) {
      if (d.target_bs == sim.serving(d.ue)) continue;
      c.steering.push_back({UeId{static_cast<std::uint32_t>(d.ue)}, BsId{static_cast<std::uint32_t>(d.target_bs)}});
    }
    return c;
  }

  /// Reward for a decision, observed at the next decision: the fraction of the
  /// UE's demand served in between, capped at 1.
  static double reward(const sim::Simulator& sim, const Decision& d) {
    const auto& us = sim.state().ues[d.ue];
    const double offered = us.offered_bits - d.offered_bits;
    const double served = us.delivered_bits - d.delivered_bits;
    if (offered <= 0.0) return us.queue_bits > 0.0 && served <= 0.0 ? 0.0 : 1.0;
    return std::min(1.0, served / offered);
  }

  struct Transition {
    std::size_t state;
    int action;
    double reward;
    std::size_t next_state;
  };

  /// One-step Q-learning over a batch of transitions.
  void learn(const std::vector<Transition>& batch) {
    for (const auto& t : batch) {
      const double target = t.reward + params_.gamma * std::max(q_[t.next_state][0], q_[t.next_state][1]);
      auto& q = q_[t.state][static_cast<std::size_t>(t.action)];
      q += params_.alpha * (target - q);
      ++updates_;
    }
  }

  static std::size_t state_index(TrafficKind cls, double small_rate, double anchor_rate, double anchor_load) {
    std::size_t ratio_bucket = 0;
    if (small_rate > 0.0) {
      const double lr = anchor_rate > 0.0 ? std::log2(small_rate / anchor_rate) : 4.0;
      const double clipped = std::clamp(lr, -4.0, 4.0);
      ratio_bucket = 1 + std::min<std::size_t>(kRatioBuckets - 2, static_cast<std::size_t>((clipped + 4.0) / 8.0 * 7.999));
    }
    const std::size_t load_bucket = anchor_load < 0.5 ? 0 : (anchor_load < 0.9 ? 1 : 2);
    return (index_of(cls) * kRatioBuckets + ratio_bucket) * kLoadBuckets + load_bucket;
  }

 private:
  AppLearningParams params_;
  Table q_;
  std::size_t updates_{0};
};

}  // namespace intentran::apps
