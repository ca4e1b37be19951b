#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "intentran/intent/intent.hpp"
#include "intentran/sim/config.hpp"
#include "intentran/sim/state.hpp"
#include "intentran/validation/forecast.hpp"

namespace intentran::validation {

struct ValidationConfig {
  double th_p{};  // high threshold, bit/s
  double th_t{};  // low threshold, bit/s
  double percentile_high{0.8};
  double percentile_low{0.2};
  std::size_t window{24};

  void validate() const {
    if (!(th_t > 0.0) || !(th_t < th_p)) throw ConfigurationError("validation thresholds need 0 < Th_t < Th_p");
    if (!(percentile_low >= 0.0 && percentile_low < percentile_high && percentile_high <= 1.0))
      throw ConfigurationError("validation percentiles need 0 <= low < high <= 1");
    if (window < 1) throw ConfigurationError("validation window must be >= 1");
  }
};

struct DriftEntry {
  TrafficKind cls{};
  KpiKind metric{};
  double desired{};   // D_QoS, raw units
  double achieved{};  // A_QoS, raw units
  double i_q{};       // D − A, raw units
  double i_q_normalized{};
  bool drifted{};
};

struct DriftReport {
  std::vector<DriftEntry> entries;
  bool any_drift() const {
    return std::any_of(entries.begin(), entries.end(), [](const DriftEntry& e) { return e.drifted; });
  }
  void append(const DriftReport& o) { entries.insert(entries.end(), o.entries.begin(), o.entries.end()); }
};

enum class Branch { high_traffic, low_traffic, thresholds_recomputed };

constexpr std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::high_traffic: return "high_traffic";
    case Branch::low_traffic: return "low_traffic";
    case Branch::thresholds_recomputed: return "thresholds_recomputed";
  }
  return "?";
}

struct ValidationVerdict {
  bool valid{};
  Branch branch{};
  DriftReport drift_report;
  intent::ProcessedIntent intent;
  ForecastResult forecast;
  std::optional<std::string> conflict;
  std::optional<ValidationConfig> recomputed;
};

/// Linear-interpolation percentile of an unsorted sample, p in [0, 1].
inline double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) throw ContractViolation("percentile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline ValidationConfig recompute_thresholds(const std::vector<double>& history, ValidationConfig cfg) {
  if (history.size() < cfg.window)
    throw InsufficientHistory("threshold recomputation needs " + std::to_string(cfg.window) + " ticks of history");
  std::vector<double> w(history.end() - static_cast<long>(cfg.window), history.end());
  if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; }))
    throw ConfigurationError("traffic history is all zero; thresholds are undefined");
  cfg.th_p = percentile(w, cfg.percentile_high);
  cfg.th_t = percentile(w, cfg.percentile_low);
  if (cfg.th_t >= cfg.th_p) {
    const double c = cfg.th_p;
    cfg.th_t = 0.99 * c;
    cfg.th_p = 1.01 * c;
  }
  if (!(cfg.th_t > 0.0)) cfg.th_t = 0.01 * cfg.th_p;
  return cfg;
}

inline double achieved_value(const sim::KpiSnapshot& s, KpiKind k) { return s.value(k); }

/// Per-requirement QoS drift of one class; at-most metrics are compared as reciprocals.
inline DriftReport compute_drift(const sim::QoSProfile& profile, const sim::KpiSnapshot& achieved,
                                 TrafficKind cls = TrafficKind::video) {
  DriftReport r;
  for (const auto& q : profile.requirements) {
    const double a = achieved_value(achieved, q.metric);
    if (!(a > 0.0))
      throw DegenerateMeasurement("achieved " + std::string(to_string(q.metric)) + " for " +
                                  std::string(to_string(cls)) + " is not positive");
    const bool invert = q.direction == sim::Direction::at_most;
    const double dn = invert ? 1.0 / q.target : q.target;
    const double an = invert ? 1.0 / a : a;
    DriftEntry e;
    e.cls = cls;
    e.metric = q.metric;
    e.desired = q.target;
    e.achieved = a;
    e.i_q = q.target - a;
    e.i_q_normalized = dn - an;
    e.drifted = an <= dn && e.i_q_normalized != 0.0;
    r.entries.push_back(e);
  }
  return r;
}

using ClassProfiles = std::array<sim::QoSProfile, kNumTrafficKinds>;

inline ClassProfiles profiles_of(const sim::SimConfig& cfg) {
  ClassProfiles p;
  for (auto k : kAllTrafficKinds) p[index_of(k)] = cfg.traffic(k).qos;
  return p;
}

inline std::vector<TrafficKind> target_classes(const intent::ProcessedIntent& i) {
  if (!i.target_classes.empty()) return i.target_classes;
  return {kAllTrafficKinds.begin(), kAllTrafficKinds.end()};
}

inline DriftReport class_drift(const ClassProfiles& profiles, const sim::KpiSnapshot& current, TrafficKind k) {
  const auto& c = current.per_class[index_of(k)];
  if (c.packets == 0 && c.delivered_bits == 0.0) return {};  // nothing measured for this class this tick
  return compute_drift(profiles[index_of(k)], sim::qos_view(current, k), k);
}

/// Validation of one intent against the forecast traffic and the current KPIs.
/// `history` is used only when the forecast falls between the thresholds.
inline ValidationVerdict validate(const intent::ProcessedIntent& in, const ForecastResult& forecast,
                                  const ValidationConfig& cfg, const sim::KpiSnapshot& current,
                                  const ClassProfiles& profiles, const std::vector<double>& history = {}) {
  cfg.validate();
  if (in.magnitude_pct == 0.0) throw ContractViolation("intent magnitude is zero");
  ValidationVerdict v;
  v.intent = in;
  v.forecast = forecast;
  const auto classes = target_classes(in);

  // Drift over the classes whose profile mentions the intent's metric.
  for (auto k : classes)
    if (profiles[index_of(k)].covers(in.type)) v.drift_report.append(class_drift(profiles, current, k));

  const double tp = forecast.predicted_bps;
  if (tp > cfg.th_p) {
    v.branch = Branch::high_traffic;
    if (in.type == KpiKind::energy_efficiency && in.is_improvement()) {
      DriftReport full;
      for (auto k : classes) full.append(class_drift(profiles, current, k));
      if (full.any_drift()) {
        v.conflict = "energy-efficiency increase under high traffic with QoS already drifting";
        for (const auto& e : full.entries)
          if (!profiles[index_of(e.cls)].covers(in.type)) v.drift_report.entries.push_back(e);
      }
    }
  } else if (tp < cfg.th_t) {
    v.branch = Branch::low_traffic;
    if (in.type == KpiKind::throughput && in.is_improvement())
      v.conflict = "throughput increase under low traffic degrades energy efficiency";
  } else {
    v.branch = Branch::thresholds_recomputed;
    v.recomputed = recompute_thresholds(history, cfg);
  }
  v.valid = !v.drift_report.any_drift() && !v.conflict;
  return v;
}

inline nlohmann::json to_json(const ValidationVerdict& v) {
  nlohmann::json j{{"valid", v.valid},
                   {"branch", std::string(to_string(v.branch))},
                   {"intent", intent::to_json(v.intent)},
                   {"forecast",
                    {{"predicted_bps", v.forecast.predicted_bps},
                     {"model_id", v.forecast.model_id},
                     {"history_window", v.forecast.history_window}}}};
  auto& d = j["drift"] = nlohmann::json::array();
  for (const auto& e : v.drift_report.entries)
    d.push_back({{"class", std::string(to_string(e.cls))},
                 {"metric", std::string(to_string(e.metric))},
                 {"desired", e.desired},
                 {"achieved", e.achieved},
                 {"i_q", e.i_q},
                 {"drifted", e.drifted}});
  j["conflict"] = v.conflict ? nlohmann::json(*v.conflict) : nlohmann::json(nullptr);
  if (v.recomputed) j["thresholds"] = {{"th_p", v.recomputed->th_p}, {"th_t", v.recomputed->th_t}};
  return j;
}

}  // namespace intentran::validation
