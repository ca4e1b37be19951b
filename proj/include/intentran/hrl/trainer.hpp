#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "intentran/apps/app_suite.hpp"
#include "intentran/hrl/qlearning.hpp"

namespace intentran::hrl {

struct TrainerConfig {
  std::size_t episodes{200};
  std::size_t tau{10};
  KpiKind kpi{KpiKind::throughput};
  std::vector<double> magnitudes{5.0, 10.0, 15.0, 20.0, 30.0};
  bool use_attention{true};
  /// Restricts the controller to these actions (single-app baselines).
  std::optional<std::vector<std::size_t>> action_space;
  AttentionConfig attention;
  LearningParams learning;
  double penalty_weight{0.1};
  std::size_t warmup_ticks{4};
  std::size_t replay_sweeps{20};
  std::size_t app1_pretrain_decisions{2000};
  double anneal_fraction{0.6};
  std::uint64_t seed{1};
};

struct EpisodeLog {
  std::size_t episode{};
  double extrinsic{};
  std::size_t filtered_size{};
  double epsilon2{};
  std::size_t goal{};
};

/// Signed magnitude that improves `kpi` by `pct` percent.
inline intent::ProcessedIntent synthetic_intent(KpiKind kpi, double pct) {
  intent::ProcessedIntent p;
  p.raw = "synthetic";
  p.type = kpi;
  p.magnitude_pct = higher_is_better(kpi) ? pct : -pct;
  p.keywords = {std::string(to_string(kpi))};
  return p;
}

/// Mean of one KPI over a set of tick reports.
inline double mean_kpi(const std::vector<sim::TickReport>& ticks, KpiKind k) {
  if (ticks.empty()) return 0.0;
  double s = 0.0;
  for (const auto& t : ticks) s += t.kpi.value(k);
  return s / static_cast<double>(ticks.size());
}

/// Runs the simulator with the suite until the next strategic tick closes.
inline sim::TickReport run_tick(sim::Simulator& sim, apps::AppSuite& suite) {
  while (true) {
    auto r = sim.step(suite.controls(sim));
    if (r.tick) return *r.tick;
  }
}

/// Episodic trainer for the two-level controller on one scenario.
class Trainer {
 public:
  Trainer(sim::SimConfig cfg, TrainerConfig tc) : tc_(std::move(tc)), warm_(std::move(cfg)) {
    tc_.attention.validate();
    if (tc_.tau < 1) throw ConfigurationError("training deadline must be >= 1 tick");
    if (tc_.magnitudes.empty()) throw ConfigurationError("training needs at least one goal magnitude");
    apps::AppSuite none;
    std::vector<sim::TickReport> ticks;
    for (std::size_t i = 0; i < tc_.warmup_ticks; ++i) ticks.push_back(run_tick(warm_, none));
    if (ticks.size() > 1) ticks.erase(ticks.begin());  // first tick starts from empty queues
    baseline_ = mean_kpi(ticks, tc_.kpi);
    if (!(baseline_ > 0.0)) throw DegenerateBaseline("no-app baseline for " + std::string(to_string(tc_.kpi)) + " is zero");
    scoring_ = ScoringState::of(warm_.state());
    apps::AppSuite pre;
    pre.pretrain_steering(warm_, tc_.app1_pretrain_decisions, tc_.seed);
    app1_ = pre.steering().table();
  }

  /// Trainer sharing an already-prepared warm start and App1 table.
  Trainer(const Trainer& base, TrainerConfig tc) : Trainer(base) {
    tc_ = std::move(tc);
    q_ = QTable{};
    replay_ = StratifiedReplay{};
    log_.clear();
  }

  const TrainerConfig& config() const { return tc_; }
  const QTable& qtable() const { return q_; }
  void set_qtable(QTable q) { q_ = std::move(q); }
  const std::vector<EpisodeLog>& log() const { return log_; }
  double baseline() const { return baseline_; }
  const sim::Simulator& warm_start() const { return warm_; }
  const apps::TrafficSteering::Table& steering_table() const { return app1_; }
  const ScoringState& scoring_state() const { return scoring_; }

  FilteredActionSet feasible() const {
    if (tc_.action_space) {
      FilteredActionSet f;
      f.actions = *tc_.action_space;
      std::sort(f.actions.begin(), f.actions.end());
      f.scores.assign(f.actions.size(), 1.0);
      f.unfiltered = true;
      return f;
    }
    if (!tc_.use_attention) return all_actions();
    return feasible_actions(scoring_, tc_.kpi, tc_.attention);
  }

  Goal goal_for(double magnitude) const { return intent_to_goal(synthetic_intent(tc_.kpi, magnitude), baseline_, tc_.tau); }

  /// One training episode from the warm start. With `fixed`, that action is
  /// held throughout and nothing is learned.
  EpisodeLog run_episode(std::size_t episode, std::optional<std::size_t> fixed = std::nullopt, double eps2 = -1.0,
                         std::optional<double> magnitude = std::nullopt) {
    const bool learn = !fixed && eps2 < 0.0;
    if (eps2 < 0.0) eps2 = epsilon_schedule(tc_.learning, episode, tc_.episodes, tc_.anneal_fraction);
    const double mag = magnitude ? *magnitude : tc_.magnitudes[episode % tc_.magnitudes.size()];
    const Goal goal = goal_for(mag);
    const std::size_t g = goal.index();

    sim::Simulator sim = warm_;
    sim.reseed(episode + 1);
    apps::AppSuite suite;
    suite.steering().set_table(app1_);
    RngStream rng(tc_.seed, stream_tag("controller"), episode);

    const auto filtered = feasible();
    std::size_t s = state_index(sim.state());
    const std::size_t s0 = s;
    ExtrinsicReward ext;
    std::optional<std::size_t> held = fixed;
    for (std::size_t t = 0; t < tc_.tau; ++t) {
      const std::size_t a = held ? *held : select_action(q_, s, g, filtered, eps2, rng);
      suite.set_enabled(sim, action_set(a));
      const auto tick = run_tick(sim, suite);
      const auto r = compute_rewards(goal, tick.kpi.value(tc_.kpi), tick.violations(), tc_.penalty_weight);
      ext.add(r.r_in);
      const std::size_t s2 = state_index(sim.state());
      if (learn) {
        const Transition tr{s, g, a, r.r_in, s2};
        q_update(q_, tr, filtered.actions, tc_.learning);
        replay_.add(tr, filtered.actions);
        replay_.sweep(q_, tc_.learning, rng, tc_.replay_sweeps);
      }
      if (!held && goal.reached(tick.kpi.value(tc_.kpi))) held = a;
      s = s2;
    }
    if (learn) meta_update(q_, s0, g, ext.total, tc_.learning);
    EpisodeLog e{episode, ext.total, filtered.actions.size(), eps2, g};
    if (learn) log_.push_back(e);
    return e;
  }

  const std::vector<EpisodeLog>& train() {
    for (std::size_t e = log_.size(); e < tc_.episodes; ++e) run_episode(e);
    return log_;
  }

  /// Greedy action for a goal magnitude in the warm-start state.
  std::size_t greedy_action(double magnitude) const {
    const auto f = feasible();
    return q_.greedy(state_index(warm_.state()), goal_for(magnitude).index(), f.actions);
  }

  /// Mean extrinsic reward of the greedy policy over the configured magnitudes.
  double evaluate_greedy(std::size_t episode_offset = 100000) {
    double sum = 0.0;
    for (std::size_t i = 0; i < tc_.magnitudes.size(); ++i) {
      const auto a = greedy_action(tc_.magnitudes[i]);
      sum += run_episode(episode_offset + i, a, 0.0, tc_.magnitudes[i]).extrinsic;
    }
    return sum / static_cast<double>(tc_.magnitudes.size());
  }

  void write_log(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigurationError("cannot write training log " + path);
    out << "episode,extrinsic_reward,filtered_set_size,epsilon2\n";
    out.precision(10);
    for (const auto& e : log_) out << e.episode << ',' << e.extrinsic << ',' << e.filtered_size << ',' << e.epsilon2 << '\n';
  }

 private:
  TrainerConfig tc_;
  sim::Simulator warm_;
  double baseline_{};
  ScoringState scoring_;
  apps::TrafficSteering::Table app1_;
  QTable q_;
  StratifiedReplay replay_;
  std::vector<EpisodeLog> log_;
};

}  // namespace intentran::hrl
