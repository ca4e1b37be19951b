#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <json.hpp>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "intentran/apps/app.hpp"
#include "intentran/sim/state.hpp"

namespace intentran::service {

enum class PipelineStep { received, processed, validated, goal_issued, action_selected, apps_applied };

constexpr std::string_view to_string(PipelineStep s) {
  switch (s) {
    case PipelineStep::received: return "received";
    case PipelineStep::processed: return "processed";
    case PipelineStep::validated: return "validated";
    case PipelineStep::goal_issued: return "goal_issued";
    case PipelineStep::action_selected: return "action_selected";
    case PipelineStep::apps_applied: return "apps_applied";
  }
  return "?";
}

/// Timestamps are simulated time so that logs are reproducible.
struct PipelineEvent {
  std::uint64_t id{};
  std::uint64_t intent{};
  PipelineStep step{};
  std::uint64_t tick{};
  std::uint64_t slot{};
  double time_s{};
  bool terminal{false};
  nlohmann::json payload = nlohmann::json::object();

  nlohmann::json to_json() const {
    return {{"id", id},     {"intent", intent}, {"step", std::string(to_string(step))}, {"tick", tick},
            {"slot", slot}, {"time_s", time_s}, {"terminal", terminal},                 {"payload", payload}};
  }
  std::string line() const { return to_json().dump(); }
};

/// One strategic tick of the KPI trace; `csv` holds the exact lines written to kpis.csv.
struct KpiRow {
  std::uint64_t tick{};
  std::uint64_t slot{};
  sim::KpiSnapshot kpi;
  std::vector<std::string> csv;
};

struct TimelineEntry {
  std::uint64_t tick{};
  apps::AppSet apps;
  std::optional<std::uint64_t> intent;
};

struct AppInterval {
  apps::AppId app{};
  std::uint64_t from{};
  std::optional<std::uint64_t> to;
};

inline std::vector<AppInterval> app_intervals(const std::vector<TimelineEntry>& tl) {
  std::vector<AppInterval> out;
  std::array<std::optional<std::uint64_t>, apps::kNumApps> open{};
  for (const auto& e : tl)
    for (auto a : apps::kAllApps) {
      auto& o = open[apps::app_index(a)];
      if (e.apps.contains(a) && !o) o = e.tick;
      if (!e.apps.contains(a) && o) {
        out.push_back({a, *o, e.tick});
        o.reset();
      }
    }
  for (auto a : apps::kAllApps)
    if (const auto& o = open[apps::app_index(a)]) out.push_back({a, *o, std::nullopt});
  std::stable_sort(out.begin(), out.end(), [](const AppInterval& x, const AppInterval& y) { return x.from < y.from; });
  return out;
}

struct KpiSlice {
  std::vector<KpiRow> rows;
  std::uint64_t from{};
  std::uint64_t to{};
  bool clipped{false};
  std::vector<AppInterval> timeline;
};

/// Inputs a what-if validation needs, frozen at a tick boundary.
struct ValidationView {
  std::uint64_t tick{};
  sim::KpiSnapshot current;
  std::vector<double> history;
};

/// Append-only record shared between the simulation worker and readers.
class RunJournal {
 public:
  void add_event(const PipelineEvent& e) {
    {
      std::lock_guard lk(mu_);
      events_.push_back(e);
    }
    cv_.notify_all();
  }

  void add_row(KpiRow r) {
    {
      std::lock_guard lk(mu_);
      rows_.push_back(std::move(r));
    }
    cv_.notify_all();
  }

  void set_apps(std::uint64_t tick, apps::AppSet a, std::optional<std::uint64_t> intent) {
    std::lock_guard lk(mu_);
    if (!timeline_.empty() && timeline_.back().apps == a) return;
    timeline_.push_back({tick, a, intent});
  }

  void publish(std::shared_ptr<const ValidationView> v) {
    std::lock_guard lk(mu_);
    view_ = std::move(v);
  }

  void close() {
    {
      std::lock_guard lk(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  std::shared_ptr<const ValidationView> view() const {
    std::lock_guard lk(mu_);
    return view_;
  }

  std::vector<PipelineEvent> events_after(std::uint64_t last_id) const {
    std::lock_guard lk(mu_);
    std::vector<PipelineEvent> out;
    for (const auto& e : events_)
      if (e.id > last_id) out.push_back(e);
    return out;
  }

  /// Blocks until an event newer than `last_id` exists, the journal closes, or the timeout passes.
  bool wait_for_events(std::uint64_t last_id, std::chrono::milliseconds timeout) const {
    std::unique_lock lk(mu_);
    return cv_.wait_for(lk, timeout, [&] { return closed_ || (!events_.empty() && events_.back().id > last_id); }) &&
           !events_.empty() && events_.back().id > last_id;
  }

  /// Like wait_for_events, but also wakes on new KPI rows.
  void wait_for_update(std::uint64_t last_id, std::size_t last_row, std::chrono::milliseconds timeout) const {
    std::unique_lock lk(mu_);
    cv_.wait_for(lk, timeout, [&] {
      return closed_ || rows_.size() > last_row || (!events_.empty() && events_.back().id > last_id);
    });
  }

  std::vector<KpiRow> rows_from(std::size_t first) const {
    std::lock_guard lk(mu_);
    if (first >= rows_.size()) return {};
    return {rows_.begin() + static_cast<long>(first), rows_.end()};
  }

  bool closed() const {
    std::lock_guard lk(mu_);
    return closed_;
  }

  std::size_t rows() const {
    std::lock_guard lk(mu_);
    return rows_.size();
  }

  std::vector<TimelineEntry> timeline() const {
    std::lock_guard lk(mu_);
    return timeline_;
  }

  /// Rows for ticks in [from, to); a window reaching past the trace is clipped and flagged.
  KpiSlice kpis(std::uint64_t from, std::optional<std::uint64_t> to) const {
    std::lock_guard lk(mu_);
    KpiSlice s;
    const std::uint64_t n = rows_.size();
    s.from = std::min(from, n);
    s.to = to ? std::min(*to, n) : n;
    s.clipped = from > n || (to && *to > n);
    if (s.to < s.from) s.to = s.from;
    s.rows.assign(rows_.begin() + static_cast<long>(s.from), rows_.begin() + static_cast<long>(s.to));
    s.timeline = app_intervals(timeline_);
    return s;
  }

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<PipelineEvent> events_;
  std::vector<KpiRow> rows_;
  std::vector<TimelineEntry> timeline_;
  std::shared_ptr<const ValidationView> view_;
  bool closed_{false};
};

}  // namespace intentran::service
