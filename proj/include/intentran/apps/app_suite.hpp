#pragma once

#include <cstdint>
#include <json.hpp>
#include <unordered_set>

#include "intentran/apps/beamforming.hpp"
#include "intentran/apps/cell_sleeping.hpp"
#include "intentran/apps/handover.hpp"
#include "intentran/apps/power_allocation.hpp"
#include "intentran/apps/traffic_steering.hpp"
#include "intentran/core/errors.hpp"

namespace intentran::apps {

/// The five RAN applications plus the rule for combining their outputs.
///
/// Strategic-timescale apps (App2) run on tick boundaries. Near-RT apps run
/// every `tactical_period` slots. App4 reruns only when its inputs can have
/// changed (new tick or a change in the enabled set).
class AppSuite {
 public:
  std::uint64_t tactical_period{10};

  explicit AppSuite(AppSet initial = {}, AppLearningParams params = {}) : enabled_(initial), app1_(params) {
    app2_dirty_ = true;
    app4_dirty_ = true;
  }

  AppSet enabled() const { return enabled_; }
  TrafficSteering& steering() { return app1_; }
  const TrafficSteering& steering() const { return app1_; }
  CellSleeping& sleeping() { return app2_; }
  const CellSleeping& sleeping() const { return app2_; }

  /// Switches the enabled set. Apps leaving the set have their settings rolled
  /// back; the rollback is returned and also queued for the next `controls()`.
  AppControls set_enabled(const sim::Simulator& sim, AppSet next) {
    AppControls revert;
    const AppSet prev = enabled_;
    auto leaving = [&](AppId a) { return prev.contains(a) && !next.contains(a); };
    const bool any_steer_next = next.contains(AppId::app1) || next.contains(AppId::app5);
    if ((leaving(AppId::app1) || leaving(AppId::app5)) && !any_steer_next) {
      for (std::size_t u = 0; u < sim.num_ues(); ++u)
        if (sim.serving(u) != sim.anchor(u))
          revert.steering.push_back({UeId{static_cast<std::uint32_t>(u)}, BsId{static_cast<std::uint32_t>(sim.anchor(u))}});
    }
    if (leaving(AppId::app2)) revert.sleep_set = std::vector<BsId>{};
    if (leaving(AppId::app3)) {
      for (std::size_t u = 0; u < sim.num_ues(); ++u)
        if (sim.beam(u))
          revert.beams.push_back({BsId{static_cast<std::uint32_t>(sim.serving(u))}, UeId{static_cast<std::uint32_t>(u)},
                                  std::nullopt});
    }
    if (leaving(AppId::app4)) {
      for (std::size_t b = 0; b < sim.num_bs(); ++b)
        if (sim.state().bss[b].power_index != sim.default_power_index(b))
          revert.power.push_back({BsId{static_cast<std::uint32_t>(b)}, sim.default_power_index(b)});
    }
    enabled_ = next;
    if (next.contains(AppId::app4) && !prev.contains(AppId::app4)) app4_dirty_ = true;
    if (next.contains(AppId::app2) && !prev.contains(AppId::app2)) app2_dirty_ = true;
    pending_.merge(revert);
    return revert;
  }

  /// Output of one app on the current network state.
  AppControls app_act(AppId a, const sim::Simulator& sim) const {
    if (!enabled_.contains(a)) throw AppDisabled(std::string(apps::to_string(a)) + " is not enabled");
    const AppContext ctx{enabled_};
    switch (a) {
      case AppId::app1: return app1_.act(sim, ctx);
      case AppId::app2: return app2_.act(sim);
      case AppId::app3: return app3_.act(sim);
      case AppId::app4: return app4_.act(sim);
      case AppId::app5: return app5_.act(sim, ctx);
    }
    return {};
  }

  /// Combined controls for the slot about to be simulated.
  AppControls controls(const sim::Simulator& sim) { return combine(sim, nullptr, 0.0, nullptr); }

  /// Pretrains App1 on a private copy of `sim` with random sets of the other
  /// apps switched on, then freezes the table. Returns the number of updates.
  std::size_t pretrain_steering(sim::Simulator sim, std::size_t decisions, std::uint64_t seed) {
    RngStream rng(seed, stream_tag("app1-pretrain"));
    AppSuite helper(AppSet{AppId::app1}, app1_.params());
    helper.tactical_period = tactical_period;
    helper.app1_ = app1_;
    std::vector<TrafficSteering::Decision> prev;
    std::vector<TrafficSteering::Transition> buffer;
    std::size_t made = 0;
    while (made < decisions) {
      if (sim.at_strategic_boundary()) {
        const auto others = static_cast<std::uint8_t>(rng.index(16) << 1);
        helper.set_enabled(sim, AppSet(static_cast<std::uint8_t>(others | 1)));
      }
      const bool decision_slot = sim.slot() % tactical_period == 0;
      const double eps = made < app1_.params().exploring_steps ? 1.0 : app1_.params().exploit_epsilon;
      std::vector<TrafficSteering::Decision> now;
      auto c = helper.combine(sim, &rng, eps, decision_slot ? &now : nullptr);
      if (decision_slot) {
        for (std::size_t i = 0; i < prev.size() && i < now.size(); ++i)
          buffer.push_back({prev[i].state, prev[i].action, TrafficSteering::reward(sim, prev[i]), now[i].state});
        while (buffer.size() >= app1_.params().batch_size) {
          std::vector<TrafficSteering::Transition> batch(buffer.begin(),
                                                         buffer.begin() + static_cast<long>(app1_.params().batch_size));
          buffer.erase(buffer.begin(), buffer.begin() + static_cast<long>(app1_.params().batch_size));
          helper.app1_.learn(batch);
        }
        prev = std::move(now);
        ++made;
      }
      sim.step(c);
    }
    app1_ = helper.app1_;
    return app1_.updates();
  }

  nlohmann::json checkpoint() const {
    nlohmann::json j;
    j["format"] = "intentran.apps";
    j["version"] = 1;
    j["enabled"] = enabled_.to_string();
    j["tactical_period"] = tactical_period;
    j["app1_updates"] = app1_.updates();
    auto& q = j["app1_q"] = nlohmann::json::array();
    for (const auto& row : app1_.table()) q.push_back({row[0], row[1]});
    return j;
  }

  static AppSuite restore(const nlohmann::json& j, AppLearningParams params = {}) {
    if (j.value("format", "") != "intentran.apps" || j.value("version", 0) != 1)
      throw ConfigurationError("unrecognised app checkpoint");
    AppSuite s(AppSet::parse(j.at("enabled").get<std::string>()), params);
    s.tactical_period = j.value("tactical_period", std::uint64_t{10});
    TrafficSteering::Table t;
    for (const auto& row : j.at("app1_q")) t.push_back({row.at(0).get<double>(), row.at(1).get<double>()});
    s.app1_.set_table(std::move(t));
    return s;
  }

 private:
  AppControls combine(const sim::Simulator& sim, RngStream* rng, double eps,
                      std::vector<TrafficSteering::Decision>* decisions) {
    AppControls out = std::move(pending_);
    pending_ = {};
    const AppContext ctx{enabled_};
    const bool strategic = sim.at_strategic_boundary();
    if (enabled_.contains(AppId::app2) && (strategic || app2_dirty_)) {
      out.merge(app2_.act(sim));
      app2_dirty_ = false;
    }
    if (sim.slot() % tactical_period == 0) {
      std::unordered_set<std::uint32_t> steered;
      if (enabled_.contains(AppId::app1)) {
        auto ds = app1_.decide(sim, ctx, rng, eps);
        for (const auto& d : ds) {
          if (d.target_bs == sim.serving(d.ue)) continue;
          out.steering.push_back({UeId{static_cast<std::uint32_t>(d.ue)}, BsId{static_cast<std::uint32_t>(d.target_bs)}});
          steered.insert(static_cast<std::uint32_t>(d.ue));
        }
        if (decisions) *decisions = std::move(ds);
      }
      if (enabled_.contains(AppId::app5)) {
        for (const auto& h : app5_.act(sim, ctx).handovers)
          if (!steered.count(h.ue.value)) out.handovers.push_back(h);
      }
      if (enabled_.contains(AppId::app3)) out.merge(app3_.act(sim));
    }
    if (enabled_.contains(AppId::app4) && (strategic || app4_dirty_)) {
      out.merge(app4_.act(sim));
      app4_dirty_ = false;
    }
    out.drop_sleeping_references();
    return out;
  }

  AppSet enabled_;
  TrafficSteering app1_;
  CellSleeping app2_;
  Beamforming app3_;
  PowerAllocation app4_;
  HandoverManager app5_;
  AppControls pending_;
  bool app2_dirty_{false};
  bool app4_dirty_{false};
};

}  // namespace intentran::apps
