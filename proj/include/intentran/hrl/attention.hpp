#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "intentran/core/rng.hpp"
#include "intentran/hrl/goal.hpp"

namespace intentran::hrl {

inline constexpr std::size_t kNumFeatures = 6;
using Features = std::array<double, kNumFeatures>;
using Theta = std::array<double, kNumFeatures>;

/// The parts of the network state the scorer looks at.
struct ScoringState {
  double mean_load{};
  double dominant_share{};

  static ScoringState of(const sim::NetworkState& s) {
    ScoringState out;
    out.mean_load = s.mean_load();
    out.dominant_share = *std::max_element(s.traffic_mix.begin(), s.traffic_mix.end());
    return out;
  }
};

inline bool boosts_capacity(apps::AppId a) {
  return a == apps::AppId::app1 || a == apps::AppId::app3 || a == apps::AppId::app4;
}

/// [bias, capability coverage, conflict, mix match, load × (boost − save), size / 5]
inline Features features(const ScoringState& s, KpiKind kpi, apps::AppSet a) {
  const auto list = a.apps();
  const double n = static_cast<double>(list.size());
  double covered = 0.0, boost = 0.0;
  bool conflict = false;
  for (std::size_t i = 0; i < list.size(); ++i) {
    covered += apps::capability(list[i], kpi);
    boost += boosts_capacity(list[i]) ? 1.0 : 0.0;
    for (std::size_t j = i + 1; j < list.size(); ++j) conflict = conflict || apps::conflicts(list[i], list[j]);
  }
  const double coverage = covered / n;
  const double boost_frac = boost / n;
  return {1.0, coverage, conflict ? 1.0 : 0.0, coverage * s.dominant_share, s.mean_load * (2.0 * boost_frac - 1.0),
          n / 5.0};
}

inline constexpr Theta kDefaultTheta{-9.5, 12.0, -4.0, 0.3, 0.5, -0.3};
inline constexpr double kDefaultEpsilon = 0.3;

struct AttentionConfig {
  double epsilon{kDefaultEpsilon};
  std::optional<Theta> theta{kDefaultTheta};

  void validate() const {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigurationError("attention threshold must lie in [0, 1)");
  }
};

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double score(const Theta& th, const Features& f) {
  double z = 0.0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) z += th[i] * f[i];
  return logistic(z);
}

using Scores = std::array<double, kNumActions>;

inline Scores attention_scores(const ScoringState& s, KpiKind kpi, const AttentionConfig& cfg) {
  if (!cfg.theta) throw ScorerUnavailable("attention scorer has no weights");
  Scores out{};
  for (std::size_t a = 0; a < kNumActions; ++a) out[a] = score(*cfg.theta, features(s, kpi, action_set(a)));
  return out;
}

struct FilteredActionSet {
  std::vector<std::size_t> actions;  // ascending action index
  std::vector<double> scores;
  bool fallback{false};
  bool unfiltered{false};

  bool contains(std::size_t a) const { return std::binary_search(actions.begin(), actions.end(), a); }
};

inline FilteredActionSet filter_actions(const Scores& scores, double epsilon) {
  FilteredActionSet f;
  for (std::size_t a = 0; a < kNumActions; ++a)
    if (scores[a] > epsilon) f.actions.push_back(a);
  if (f.actions.empty()) {
    std::vector<std::size_t> order(kNumActions);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
    f.actions.assign(order.begin(), order.begin() + 3);
    std::sort(f.actions.begin(), f.actions.end());
    f.fallback = true;
    spdlog::info("attention filter kept nothing above {}; using top-3 fallback", epsilon);
  }
  for (auto a : f.actions) f.scores.push_back(scores[a]);
  return f;
}

inline FilteredActionSet all_actions() {
  FilteredActionSet f;
  for (std::size_t a = 0; a < kNumActions; ++a) f.actions.push_back(a);
  f.scores.assign(kNumActions, 1.0);
  f.unfiltered = true;
  return f;
}

/// Scores and filters; without weights every action is kept and the set is flagged.
inline FilteredActionSet feasible_actions(const ScoringState& s, KpiKind kpi, const AttentionConfig& cfg) {
  if (!cfg.theta) {
    spdlog::warn("attention scorer unavailable; controller searches all {} actions", kNumActions);
    return all_actions();
  }
  return filter_actions(attention_scores(s, kpi, cfg), cfg.epsilon);
}

// ---- supervised training -------------------------------------------------

struct LabeledSample {
  ScoringState state;
  KpiKind kpi{};
  std::size_t action{};
  int fulfilled{};
};

struct ScorerFit {
  Theta theta{};
  double train_accuracy{};
  double heldout_accuracy{};
  std::size_t train_size{};
  std::size_t heldout_size{};
};

/// L2-regularised logistic regression by Newton's method on raw feature rows.
inline Theta fit_logistic(const std::vector<Features>& x, const std::vector<int>& y, double l2 = 1e-3,
                          std::size_t max_iter = 100) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd X(n, kNumFeatures);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < kNumFeatures; ++j) X(i, static_cast<Eigen::Index>(j)) = x[static_cast<std::size_t>(i)][j];
    Y(i) = y[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(kNumFeatures);
  Eigen::MatrixXd reg = Eigen::MatrixXd::Identity(kNumFeatures, kNumFeatures) * l2 * static_cast<double>(n);
  reg(0, 0) = 0.0;  // bias is not penalised
  for (std::size_t it = 0; it < max_iter; ++it) {
    Eigen::VectorXd p = (X * w).unaryExpr([](double z) { return logistic(z); });
    Eigen::VectorXd grad = X.transpose() * (p - Y) + reg * w;
    Eigen::VectorXd s = (p.array() * (1.0 - p.array())).matrix();
    Eigen::MatrixXd H = X.transpose() * s.asDiagonal() * X + reg;
    H += 1e-9 * Eigen::MatrixXd::Identity(kNumFeatures, kNumFeatures);
    Eigen::VectorXd step = H.ldlt().solve(grad);
    w -= step;
    if (step.norm() < 1e-10) break;
  }
  Theta th{};
  for (std::size_t j = 0; j < kNumFeatures; ++j) th[j] = w(static_cast<Eigen::Index>(j));
  return th;
}

inline double accuracy(const Theta& th, const std::vector<Features>& x, const std::vector<int>& y) {
  if (x.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < x.size(); ++i) ok += (score(th, x[i]) > 0.5) == (y[i] == 1);
  return static_cast<double>(ok) / static_cast<double>(x.size());
}

/// Fits on a seeded 80/20 split of raw feature rows.
inline ScorerFit train_on_features(const std::vector<Features>& x, const std::vector<int>& y, std::uint64_t seed = 1,
                                   double l2 = 1e-3) {
  if (x.size() != y.size()) throw ContractViolation("feature and label counts differ");
  if (x.empty()) throw TrainingDegenerate("labelled set is empty");
  const auto pos = std::count(y.begin(), y.end(), 1);
  if (pos == 0 || pos == static_cast<long>(y.size())) throw TrainingDegenerate("labelled set has a single class");
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(seed, stream_tag("scorer-split"));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  const std::size_t cut = order.size() * 4 / 5;
  std::vector<Features> xt, xh;
  std::vector<int> yt, yh;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < cut ? xt : xh).push_back(x[order[k]]);
    (k < cut ? yt : yh).push_back(y[order[k]]);
  }
  if (std::count(yt.begin(), yt.end(), 1) == 0 || std::count(yt.begin(), yt.end(), 0) == 0)
    throw TrainingDegenerate("training split has a single class");
  ScorerFit fit;
  fit.theta = fit_logistic(xt, yt, l2);
  fit.train_accuracy = accuracy(fit.theta, xt, yt);
  fit.heldout_accuracy = accuracy(fit.theta, xh, yh);
  fit.train_size = xt.size();
  fit.heldout_size = xh.size();
  return fit;
}

inline ScorerFit train_scorer(const std::vector<LabeledSample>& samples, std::uint64_t seed = 1) {
  std::vector<Features> x;
  std::vector<int> y;
  for (const auto& s : samples) {
    x.push_back(features(s.state, s.kpi, action_set(s.action)));
    y.push_back(s.fulfilled);
  }
  return train_on_features(x, y, seed);
}

/// Label oracle from the capability and conflict tables: an action fulfils an
/// intent when most of its apps can move the KPI and none of them clash.
inline int oracle_label(KpiKind kpi, apps::AppSet a) {
  const auto f = features(ScoringState{}, kpi, a);
  return f[1] >= 0.75 && f[2] == 0.0 ? 1 : 0;
}

/// Label file: CSV `kpi,mean_load,dominant_share,action,fulfilled`.
inline void save_labels(const std::string& path, const std::vector<LabeledSample>& xs) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write " + path);
  out << "kpi,mean_load,dominant_share,action,fulfilled\n";
  out.precision(17);
  for (const auto& s : xs)
    out << to_string(s.kpi) << ',' << s.state.mean_load << ',' << s.state.dominant_share << ','
        << action_set(s.action).to_string() << ',' << s.fulfilled << '\n';
}

inline std::vector<LabeledSample> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open label file " + path);
  std::vector<LabeledSample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || (n == 1 && line.rfind("kpi", 0) == 0)) continue;
    std::stringstream ss(line);
    std::string kpi, load, share, action, label;
    if (!std::getline(ss, kpi, ',') || !std::getline(ss, load, ',') || !std::getline(ss, share, ',') ||
        !std::getline(ss, action, ',') || !std::getline(ss, label, ','))
      throw ConfigurationError(path + ":" + std::to_string(n) + ": expected 5 columns");
    LabeledSample s;
    auto k = parse_kpi(kpi);
    if (!k) throw ConfigurationError(path + ":" + std::to_string(n) + ": unknown kpi '" + kpi + "'");
    s.kpi = *k;
    try {
      s.state.mean_load = std::stod(load);
      s.state.dominant_share = std::stod(share);
      s.action = action_index(apps::AppSet::parse(action));
      s.fulfilled = std::stoi(label);
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigurationError(path + ":" + std::to_string(n) + ": malformed row");
    }
    out.push_back(s);
  }
  return out;
}

/// Oracle-labelled samples over random states, every KPI and every action.
inline std::vector<LabeledSample> oracle_samples(std::size_t states, std::uint64_t seed) {
  RngStream rng(seed, stream_tag("oracle-labels"));
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < states; ++i) {
    ScoringState s{rng.uniform01(), 0.25 + 0.75 * rng.uniform01()};
    for (auto k : kAllKpis)
      for (std::size_t a = 0; a < kNumActions; ++a) out.push_back({s, k, a, oracle_label(k, action_set(a))});
  }
  return out;
}

inline nlohmann::json scorer_to_json(const AttentionConfig& cfg) {
  nlohmann::json j{{"format", "intentran.scorer"}, {"version", 1}, {"epsilon", cfg.epsilon}};
  j["theta"] = cfg.theta ? nlohmann::json(*cfg.theta) : nlohmann::json(nullptr);
  return j;
}

inline AttentionConfig scorer_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "intentran.scorer" || j.value("version", 0) != 1)
    throw ConfigurationError("unrecognised scorer file");
  AttentionConfig c;
  c.epsilon = j.at("epsilon").get<double>();
  if (j.at("theta").is_null()) c.theta.reset();
  else c.theta = j.at("theta").get<Theta>();
  c.validate();
  return c;
}

}  // namespace intentran::hrl
