#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <json.hpp>
#include <map>
#include <tuple>
#include <vector>

#include "intentran/hrl/attention.hpp"

namespace intentran::hrl {

struct LearningParams {
  double alpha{0.00025};
  double gamma{0.99};
  double epsilon_start{1.0};
  double epsilon_end{0.1};
};

/// ε₂ for episode e of n, falling linearly over the first `anneal_fraction` of training.
inline double epsilon_schedule(const LearningParams& p, std::size_t episode, std::size_t episodes,
                               double anneal_fraction = 0.6) {
  const double span = std::max(1.0, anneal_fraction * static_cast<double>(episodes));
  const double t = std::min(1.0, static_cast<double>(episode) / span);
  return p.epsilon_start + (p.epsilon_end - p.epsilon_start) * t;
}

/// Controller Q(s, g, a) and meta-controller Q(s, g).
class QTable {
 public:
  QTable() : ctrl_(kNumStates * kNumGoals * kNumActions, 0.0), meta_(kNumStates * kNumGoals, 0.0) {}

  double& q(std::size_t s, std::size_t g, std::size_t a) { return ctrl_.at((s * kNumGoals + g) * kNumActions + a); }
  double q(std::size_t s, std::size_t g, std::size_t a) const { return ctrl_.at((s * kNumGoals + g) * kNumActions + a); }
  double& meta(std::size_t s, std::size_t g) { return meta_.at(s * kNumGoals + g); }
  double meta(std::size_t s, std::size_t g) const { return meta_.at(s * kNumGoals + g); }

  /// Greedy action over `allowed`; ties go to the lowest index.
  std::size_t greedy(std::size_t s, std::size_t g, const std::vector<std::size_t>& allowed) const {
    if (allowed.empty()) throw ContractViolation("greedy over an empty action set");
    std::size_t best = allowed.front();
    for (auto a : allowed)
      if (q(s, g, a) > q(s, g, best) || (q(s, g, a) == q(s, g, best) && a < best)) best = a;
    return best;
  }

  double max_over(std::size_t s, std::size_t g, const std::vector<std::size_t>& allowed) const {
    return q(s, g, greedy(s, g, allowed));
  }

  nlohmann::json to_json() const {
    return {{"format", "intentran.qtable"}, {"version", 1},          {"states", kNumStates},
            {"goals", kNumGoals},           {"actions", kNumActions}, {"controller", ctrl_},
            {"meta", meta_}};
  }

  static QTable from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "intentran.qtable" || j.value("version", 0) != 1)
      throw ConfigurationError("unrecognised Q-table checkpoint");
    if (j.at("states") != kNumStates || j.at("goals") != kNumGoals || j.at("actions") != kNumActions)
      throw ConfigurationError("Q-table checkpoint has different dimensions");
    QTable t;
    t.ctrl_ = j.at("controller").get<std::vector<double>>();
    t.meta_ = j.at("meta").get<std::vector<double>>();
    if (t.ctrl_.size() != kNumStates * kNumGoals * kNumActions || t.meta_.size() != kNumStates * kNumGoals)
      throw ConfigurationError("Q-table checkpoint is truncated");
    for (double v : t.ctrl_)
      if (!std::isfinite(v)) throw ConfigurationError("Q-table checkpoint has non-finite entries");
    return t;
  }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::vector<double> ctrl_;
  std::vector<double> meta_;
};

/// ε₂-greedy choice restricted to the filtered set.
inline std::size_t select_action(const QTable& q, std::size_t s, std::size_t g, const FilteredActionSet& f, double eps2,
                                 RngStream& rng) {
  if (f.actions.empty()) throw ContractViolation("filtered action set is empty");
  if (f.actions.size() == 1) return f.actions.front();
  if (eps2 > 0.0 && rng.bernoulli(eps2)) return f.actions[rng.index(f.actions.size())];
  return q.greedy(s, g, f.actions);
}

struct Transition {
  std::size_t s{}, g{}, a{};
  double r{};
  std::size_t s_next{};
};

/// One-step Q-learning; the bootstrap max runs over the filtered set at s'.
inline void q_update(QTable& q, const Transition& t, const std::vector<std::size_t>& next_allowed,
                     const LearningParams& p) {
  const double boot = next_allowed.empty() ? 0.0 : q.max_over(t.s_next, t.g, next_allowed);
  auto& v = q.q(t.s, t.g, t.a);
  v += p.alpha * (t.r + p.gamma * boot - v);
}

inline void meta_update(QTable& q, std::size_t s, std::size_t g, double extrinsic, const LearningParams& p) {
  auto& v = q.meta(s, g);
  v += p.alpha * (extrinsic - v);
}

/// Transitions kept per (s, g, a) entry and replayed in uniform sweeps so every
/// visited entry sees the same number of updates regardless of how often it was
/// chosen.
class StratifiedReplay {
 public:
  explicit StratifiedReplay(std::size_t per_entry = 64) : cap_(per_entry) {}

  void add(const Transition& t, const std::vector<std::size_t>& next_allowed) {
    auto& e = entries_[std::make_tuple(t.s, t.g, t.a)];
    if (e.items.size() == cap_) e.items.pop_front();
    e.items.push_back({t, next_allowed});
  }

  void sweep(QTable& q, const LearningParams& p, RngStream& rng, std::size_t sweeps) const {
    for (std::size_t k = 0; k < sweeps; ++k)
      for (const auto& [key, e] : entries_) {
        const auto& item = e.items[rng.index(e.items.size())];
        q_update(q, item.first, item.second, p);
      }
  }

  std::size_t entries() const { return entries_.size(); }

 private:
  struct Entry {
    std::deque<std::pair<Transition, std::vector<std::size_t>>> items;
  };
  std::size_t cap_;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, Entry> entries_;
};

struct RewardBreakdown {
  double c_rho{};
  std::size_t violations{};
  double penalty_weight{0.1};
  double r_in{};
};

/// Normalised progress toward the goal, clamped to [−1, 1].
inline double goal_progress(double baseline, double target, double achieved) {
  if (target == baseline) throw DegenerateGoal("goal target equals its baseline");
  return std::clamp((achieved - baseline) / (target - baseline), -1.0, 1.0);
}

inline RewardBreakdown compute_rewards(const Goal& g, double achieved, std::size_t violations,
                                       double penalty_weight = 0.1) {
  if (penalty_weight < 0.0) throw ContractViolation("penalty weight must be non-negative");
  RewardBreakdown r;
  r.c_rho = goal_progress(g.baseline, g.target_value, achieved);
  r.violations = violations;
  r.penalty_weight = penalty_weight;
  r.r_in = r.c_rho - penalty_weight * static_cast<double>(violations);
  return r;
}

/// Running extrinsic reward: the undiscounted sum of intrinsic rewards.
struct ExtrinsicReward {
  double total{};
  std::size_t steps{};
  void add(double r_in) {
    total += r_in;
    ++steps;
  }
};

}  // namespace intentran::hrl
