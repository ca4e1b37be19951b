#pragma once

#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "intentran/hrl/trainer.hpp"
#include "intentran/intent/llm_client.hpp"
#include "intentran/service/journal.hpp"
#include "intentran/service/scenario.hpp"
#include "intentran/validation/validator.hpp"

namespace intentran::service {

struct EngineOptions {
  std::string run_id{"run"};
  /// Empty: keep everything in memory.
  std::filesystem::path out_dir;
  /// Replays supply their own intent schedule from intents.log.
  bool use_scenario_intents{true};
  /// Overrides the scenario seed.
  std::optional<std::uint64_t> seed;
  /// Overrides validation.enabled.
  std::optional<bool> validation_enabled;
  /// Starting Q-table; skips the scenario's qtable file and pretraining.
  std::optional<hrl::QTable> initial_qtable;
};

inline std::string fmt_num(double v) { return fmt::format("{}", v); }

inline std::filesystem::path default_examples_path() {
#ifdef INTENTRAN_SOURCE_DIR
  return std::filesystem::path(INTENTRAN_SOURCE_DIR) / "data" / "intent_examples.yaml";
#else
  return "data/intent_examples.yaml";
#endif
}

/// Processed intent, verdict and goal for a what-if query or a real submission.
struct IntentAssessment {
  std::optional<intent::ProcessedIntent> processed;
  std::optional<validation::ValidationVerdict> verdict;
  std::optional<std::string> error;
  PipelineStep failed_at{PipelineStep::processed};

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["processed"] = processed ? intent::to_json(*processed) : nlohmann::json(nullptr);
    j["verdict"] = verdict ? validation::to_json(*verdict) : nlohmann::json(nullptr);
    if (error) {
      j["error"] = *error;
      j["failed_at"] = std::string(to_string(failed_at));
    }
    j["valid"] = !error && verdict && verdict->valid;
    return j;
  }
};

/// Trains one Q-table over every KPI for a scenario. Each KPI whose no-app
/// baseline is zero is skipped. `logs`, when given, receives one training log per KPI.
inline hrl::QTable train_qtable(const Scenario& sc, const sim::SimConfig& cfg, std::size_t episodes,
                                const std::filesystem::path& logs = {}) {
  hrl::QTable q;
  for (auto kpi : kAllKpis) {
    hrl::TrainerConfig tc;
    tc.kpi = kpi;
    tc.episodes = episodes;
    tc.attention = sc.attention;
    tc.learning = sc.learning;
    tc.penalty_weight = sc.penalty_weight;
    tc.app1_pretrain_decisions = sc.app1_pretrain_decisions;
    tc.seed = cfg.seed;
    try {
      hrl::Trainer tr(cfg, tc);
      tr.set_qtable(q);
      tr.train();
      q = tr.qtable();
      if (!logs.empty()) tr.write_log((logs / fmt::format("train_{}.csv", to_string(kpi))).string());
    } catch (const DegenerateBaseline& e) {
      spdlog::warn("skipping {} training: {}", to_string(kpi), e.what());
    }
  }
  return q;
}

/// One simulation run driven one strategic tick at a time. Not thread-safe;
/// readers go through `journal()`.
class RunEngine {
 public:
  RunEngine(Scenario sc, EngineOptions opt = {})
      : sc_(std::move(sc)), opt_(std::move(opt)), sim_(prepared_config()), rng_(sim_.config().seed, stream_tag("runtime-controller")) {
    if (opt_.validation_enabled) sc_.validation_enabled = *opt_.validation_enabled;
    if (sc_.validation_enabled) sc_.validation.validate();
    forecaster_ = validation::ForecasterRegistry::instance().make(sc_.forecaster);
    profiles_ = validation::profiles_of(sim_.config());
    examples_ = intent::load_examples((sc_.examples_path ? *sc_.examples_path : default_examples_path()).string());
    if (sc_.llm_endpoint || intent::LlmBackendConfig::from_env()) {
      auto cfg = intent::LlmBackendConfig::from_env().value_or(intent::LlmBackendConfig{});
      if (sc_.llm_endpoint) cfg.endpoint = *sc_.llm_endpoint;
      cfg.timeout = std::chrono::milliseconds(sc_.llm_timeout_ms);
      llm_ = std::make_unique<intent::LlmClient>(cfg);
    }
    if (opt_.use_scenario_intents)
      for (const auto& i : sc_.intents) schedule(i.text, i.at_tick);

    suite_ = apps::AppSuite(sc_.initial_apps);
    suite_.tactical_period = sc_.tactical_period;
    if (sc_.app1_pretrain_decisions > 0)
      suite_.pretrain_steering(sim_, sc_.app1_pretrain_decisions, sim_.config().seed);
    load_or_train_qtable();

    if (!opt_.out_dir.empty()) open_files();
    write_kpi_text("slot,throughput_bps,mean_delay_s,ee_bits_per_joule,energy_j,class\n");
    flush("created");
    journal_->set_apps(0, suite_.enabled(), std::nullopt);
    publish_view();
  }

  RunEngine(const RunEngine&) = delete;
  RunEngine& operator=(const RunEngine&) = delete;

  ~RunEngine() { journal_->close(); }

  const Scenario& scenario() const { return sc_; }
  const EngineOptions& options() const { return opt_; }
  std::uint64_t seed() const { return sim_.config().seed; }
  std::string hash() const { return config_hash(sc_.source); }
  std::uint64_t ticks_completed() const { return sim_.completed_ticks(); }
  const sim::Simulator& simulator() const { return sim_; }
  apps::AppSet active_apps() const { return suite_.enabled(); }
  const hrl::QTable& qtable() const { return q_; }
  std::shared_ptr<RunJournal> journal() const { return journal_; }
  bool option_active() const { return option_.has_value(); }
  std::size_t queued_intents() const { return pending_.size() + queue_.size(); }
  std::uint64_t kpi_digest() const { return kpi_digest_; }

  /// Queues an intent; it is received at the boundary after `at_tick` ticks
  /// (now, by default). Non-empty `classes` replace the parsed target classes.
  /// Returns the intent id.
  std::uint64_t schedule(std::string text, std::optional<std::uint64_t> at_tick = std::nullopt,
                         std::vector<TrafficKind> classes = {}) {
    const std::uint64_t id = ++intent_counter_;
    const std::uint64_t t = std::max(at_tick.value_or(ticks_completed()), ticks_completed());
    auto it = std::upper_bound(pending_.begin(), pending_.end(), t,
                               [](std::uint64_t v, const Pending& p) { return v < p.at_tick; });
    pending_.insert(it, Pending{id, t, std::move(text), std::move(classes)});
    return id;
  }

  /// Steps 1–2 without side effects, against the last published view.
  IntentAssessment assess(const std::string& text, const std::vector<TrafficKind>& classes = {}) const {
    return assess_with(text, classes, *journal_->view());
  }

  /// Runs one strategic tick, including any intent work due at its start.
  sim::TickReport advance() {
    const std::uint64_t t = ticks_completed();
    receive_due(t);
    if (!option_) start_next_intent(t);
    if (option_) control_step(t);

    const auto report = hrl::run_tick(sim_, suite_);
    history_.push_back(report.kpi.offered_bps());
    record(report);
    if (option_) finish_step(report);
    publish_view();
    if (sc_.checkpoint_every > 0 && ticks_completed() % sc_.checkpoint_every == 0) write_checkpoint();
    return report;
  }

  void run(std::uint64_t ticks) {
    for (std::uint64_t i = 0; i < ticks; ++i) advance();
  }

  /// Rewrites run.json; called on pause and at the end of a run.
  void flush(std::string_view state = "finished") {
    if (opt_.out_dir.empty()) return;
    nlohmann::json j{{"format", "intentran.run"},
                     {"version", 1},
                     {"id", opt_.run_id},
                     {"scenario", sc_.name},
                     {"base_dir", std::filesystem::absolute(sc_.base_dir).lexically_normal().string()},
                     {"config_hash", hash()},
                     {"seed", seed()},
                     {"validation_enabled", sc_.validation_enabled},
                     {"state", std::string(state)},
                     {"ticks_completed", ticks_completed()},
                     {"kpi_digest", fmt::format("{:016x}", kpi_digest_)},
                     {"checkpoints", checkpoints_}};
    auto& tl = j["timeline"] = nlohmann::json::array();
    for (const auto& e : journal_->timeline())
      tl.push_back({{"tick", e.tick},
                    {"apps", e.apps.to_string()},
                    {"intent", e.intent ? nlohmann::json(*e.intent) : nlohmann::json(nullptr)}});
    std::ofstream(opt_.out_dir / "run.json") << j.dump(2) << '\n';
    kpis_.flush();
    events_.flush();
    intents_.flush();
  }

 private:
  struct Pending {
    std::uint64_t id;
    std::uint64_t at_tick;
    std::string text;
    std::vector<TrafficKind> classes;
  };

  struct Option {
    std::uint64_t intent{};
    hrl::Goal goal;
    std::size_t g{};
    hrl::FilteredActionSet filtered;
    std::size_t elapsed{};
    std::optional<std::size_t> action;
    std::size_t s{};
    std::size_t s0{};
    hrl::ExtrinsicReward extrinsic;
  };

  sim::SimConfig prepared_config() const {
    auto c = sc_.sim;
    if (opt_.seed) c.seed = *opt_.seed;
    return c;
  }

  void load_or_train_qtable() {
    if (opt_.initial_qtable) {
      q_ = *opt_.initial_qtable;
      return;
    }
    if (sc_.qtable_path) {
      std::ifstream in(*sc_.qtable_path);
      if (!in) throw ConfigurationError("cannot open Q-table " + sc_.qtable_path->string());
      q_ = hrl::QTable::from_json(nlohmann::json::parse(in));
      return;
    }
    if (sc_.pretrain_episodes > 0) q_ = train_qtable(sc_, sim_.config(), sc_.pretrain_episodes);
  }

  void open_files() {
    namespace fs = std::filesystem;
    fs::create_directories(opt_.out_dir / "checkpoints");
    std::ofstream(opt_.out_dir / "config.yaml") << sc_.source;
    std::ofstream(opt_.out_dir / "initial_qtable.json") << q_.to_json().dump() << '\n';
    kpis_.open(opt_.out_dir / "kpis.csv");
    events_.open(opt_.out_dir / "events.log");
    intents_.open(opt_.out_dir / "intents.log");
    history_file_.open(opt_.out_dir / "history.csv");
    if (!kpis_ || !events_ || !intents_ || !history_file_)
      throw ConfigurationError("cannot write run directory " + opt_.out_dir.string());
    history_file_ << "tick,offered_bps\n";
  }

  void write_kpi_text(const std::string& s) {
    for (unsigned char c : s) {
      kpi_digest_ ^= c;
      kpi_digest_ *= 1099511628211ull;
    }
    if (kpis_.is_open()) kpis_ << s;
  }

  void emit(std::uint64_t intent, PipelineStep step, nlohmann::json payload, bool terminal = false) {
    PipelineEvent e;
    e.id = ++event_counter_;
    e.intent = intent;
    e.step = step;
    e.tick = ticks_completed();
    e.slot = sim_.slot();
    e.time_s = static_cast<double>(sim_.slot()) * sim_.config().slot_duration_s;
    e.terminal = terminal;
    e.payload = std::move(payload);
    if (events_.is_open()) events_ << e.line() << '\n' << std::flush;
    journal_->add_event(e);
  }

  void log_intent(nlohmann::json j) {
    if (intents_.is_open()) intents_ << j.dump() << '\n' << std::flush;
  }

  void receive_due(std::uint64_t t) {
    while (!pending_.empty() && pending_.front().at_tick <= t) {
      auto p = std::move(pending_.front());
      pending_.pop_front();
      nlohmann::json rx{{"text", p.text}};
      if (!p.classes.empty()) {
        auto& c = rx["classes"] = nlohmann::json::array();
        for (auto k : p.classes) c.push_back(std::string(to_string(k)));
      }
      emit(p.id, PipelineStep::received, rx);
      log_intent({{"intent", p.id}, {"kind", "received"}, {"tick", t}, {"text", p.text}});
      queue_.push_back(std::move(p));
    }
  }

  std::size_t history_needed() const {
    return sc_.validation_enabled ? std::max(forecaster_->min_window(), sc_.validation.window) : 0;
  }

  IntentAssessment assess_with(const std::string& text, const std::vector<TrafficKind>& classes,
                               const ValidationView& view) const {
    IntentAssessment a;
    try {
      a.processed = intent::classify_and_extract(text, examples_, llm_.get());
      if (!classes.empty()) a.processed->target_classes = classes;
    } catch (const UnintelligibleIntent& e) {
      a.error = std::string("UnintelligibleIntent: ") + e.what();
      a.failed_at = PipelineStep::processed;
      return a;
    }
    try {
      const auto forecast = forecaster_->predict(view.history);
      a.verdict = validation::validate(*a.processed, forecast, sc_.validation, view.current, profiles_, view.history);
    } catch (const Error& e) {
      a.error = e.what();
      a.failed_at = PipelineStep::validated;
    }
    return a;
  }

  void start_next_intent(std::uint64_t t) {
    while (!queue_.empty() && !option_) {
      if (history_.size() < history_needed()) return;  // waits at the head of the queue
      auto p = std::move(queue_.front());
      queue_.pop_front();
      process(p, t);
    }
  }

  void reject(const Pending& p, std::uint64_t t, PipelineStep at, nlohmann::json detail) {
    emit(p.id, at, detail, true);
    log_intent({{"intent", p.id}, {"kind", "rejected"}, {"tick", t}, {"step", std::string(to_string(at))}, {"detail", detail}});
  }

  void process(const Pending& p, std::uint64_t t) {
    intent::ProcessedIntent in;
    try {
      in = intent::classify_and_extract(p.text, examples_, llm_.get());
      if (!p.classes.empty()) in.target_classes = p.classes;
    } catch (const UnintelligibleIntent& e) {
      reject(p, t, PipelineStep::processed, {{"error", "UnintelligibleIntent"}, {"message", e.what()}});
      return;
    }
    emit(p.id, PipelineStep::processed, intent::to_json(in));

    nlohmann::json verdict_json;
    if (sc_.validation_enabled) {
      validation::ValidationVerdict v;
      try {
        v = validation::validate(in, forecaster_->predict(history_), sc_.validation, last_kpi_, profiles_, history_);
      } catch (const Error& e) {
        reject(p, t, PipelineStep::validated, {{"valid", false}, {"error", e.what()}});
        return;
      }
      verdict_json = validation::to_json(v);
      if (!v.valid) {
        reject(p, t, PipelineStep::validated, verdict_json);
        return;
      }
      emit(p.id, PipelineStep::validated, verdict_json);
    } else {
      verdict_json = {{"valid", true}, {"branch", "disabled"}, {"intent", intent::to_json(in)}};
      emit(p.id, PipelineStep::validated, verdict_json);
    }

    Option o;
    o.intent = p.id;
    try {
      o.goal = hrl::intent_to_goal(in, last_kpi_.value(in.type), sc_.tau);
    } catch (const Error& e) {
      reject(p, t, PipelineStep::goal_issued, {{"error", e.what()}});
      return;
    }
    o.g = o.goal.index();
    o.filtered = hrl::feasible_actions(hrl::ScoringState::of(sim_.state()), in.type, sc_.attention);
    o.s = o.s0 = hrl::state_index(sim_.state());
    nlohmann::json feasible = nlohmann::json::array();
    for (auto a : o.filtered.actions) feasible.push_back(hrl::action_set(a).to_string());
    const nlohmann::json goal{{"kpi", std::string(to_string(o.goal.kpi))},
                              {"baseline", o.goal.baseline},
                              {"target_value", o.goal.target_value},
                              {"deadline", o.goal.deadline},
                              {"bucket_pct", hrl::kGoalBuckets[o.goal.bucket]},
                              {"feasible_actions", feasible},
                              {"fallback", o.filtered.fallback},
                              {"unfiltered", o.filtered.unfiltered}};
    emit(p.id, PipelineStep::goal_issued, goal);
    log_intent({{"intent", p.id},
                {"kind", "accepted"},
                {"tick", t},
                {"processed", intent::to_json(in)},
                {"verdict", verdict_json},
                {"goal", goal}});
    option_ = std::move(o);
  }

  void control_step(std::uint64_t) {
    auto& o = *option_;
    o.s = hrl::state_index(sim_.state());
    const auto a = hrl::select_action(q_, o.s, o.g, o.filtered, sc_.exploration, rng_);
    if (o.action && *o.action == a) return;
    const bool explored = a != q_.greedy(o.s, o.g, o.filtered.actions);
    if (o.action && !explored && q_.q(o.s, o.g, a) < q_.q(o.s, o.g, *o.action) + sc_.switch_margin) return;
    o.action = a;
    const auto set = hrl::action_set(a);
    emit(o.intent, PipelineStep::action_selected,
         {{"action", set.to_string()}, {"index", a + 1}, {"q", q_.q(o.s, o.g, a)}, {"state", o.s}});
    const auto before = suite_.enabled();
    const auto reverts = suite_.set_enabled(sim_, set);
    journal_->set_apps(ticks_completed(), set, o.intent);
    emit(o.intent, PipelineStep::apps_applied,
         {{"apps", set.to_string()},
          {"previous", before.to_string()},
          {"reverted_controls", reverts.steering.size() + reverts.power.size() + reverts.beams.size() +
                                    (reverts.sleep_set ? 1u : 0u)}});
  }

  void finish_step(const sim::TickReport& report) {
    auto& o = *option_;
    const double achieved = report.kpi.value(o.goal.kpi);
    const auto r = hrl::compute_rewards(o.goal, achieved, report.violations(), sc_.penalty_weight);
    o.extrinsic.add(r.r_in);
    const std::size_t s2 = hrl::state_index(sim_.state());
    if (sc_.online_learning && o.action)
      hrl::q_update(q_, {o.s, o.g, *o.action, r.r_in, s2}, o.filtered.actions, sc_.learning);
    ++o.elapsed;
    const bool reached = o.goal.reached(achieved);
    if (reached || o.elapsed >= o.goal.deadline) {
      if (sc_.online_learning) hrl::meta_update(q_, o.s0, o.g, o.extrinsic.total, sc_.learning);
      log_intent({{"intent", o.intent},
                  {"kind", "completed"},
                  {"tick", ticks_completed()},
                  {"reason", reached ? "goal_reached" : "deadline"},
                  {"ticks", o.elapsed},
                  {"extrinsic_reward", o.extrinsic.total},
                  {"apps", suite_.enabled().to_string()}});
      option_.reset();
    }
  }

  void record(const sim::TickReport& r) {
    last_kpi_ = r.kpi;
    KpiRow row;
    row.tick = r.tick;
    row.slot = r.slot;
    row.kpi = r.kpi;
    row.csv.push_back(fmt::format("{},{},{},{},{},all", r.slot, fmt_num(r.kpi.throughput_bps),
                                  fmt_num(r.kpi.mean_delay_s), fmt_num(r.kpi.energy_efficiency),
                                  fmt_num(r.kpi.total_energy_j)));
    for (auto k : kAllTrafficKinds) {
      const auto& c = r.kpi.per_class[index_of(k)];
      row.csv.push_back(fmt::format("{},{},{},{},{},{}", r.slot, fmt_num(c.throughput_bps), fmt_num(c.mean_delay_s),
                                    fmt_num(c.energy_efficiency), fmt_num(r.kpi.total_energy_j), to_string(k)));
    }
    std::string text;
    for (const auto& l : row.csv) text += l + '\n';
    write_kpi_text(text);
    if (kpis_.is_open()) kpis_.flush();
    if (history_file_.is_open()) history_file_ << r.tick << ',' << fmt_num(history_.back()) << '\n' << std::flush;
    journal_->add_row(std::move(row));
  }

  void publish_view() {
    auto v = std::make_shared<ValidationView>();
    v->tick = ticks_completed();
    v->current = last_kpi_;
    v->history = history_;
    journal_->publish(std::move(v));
  }

  void write_checkpoint() {
    if (opt_.out_dir.empty()) return;
    const auto name = fmt::format("tick_{:06d}.json", ticks_completed());
    nlohmann::json j{{"format", "intentran.checkpoint"},
                     {"version", 1},
                     {"run", opt_.run_id},
                     {"config_hash", hash()},
                     {"seed", seed()},
                     {"tick", ticks_completed()},
                     {"slot", sim_.slot()},
                     {"kpi_digest", fmt::format("{:016x}", kpi_digest_)},
                     {"events", event_counter_},
                     {"apps", suite_.checkpoint()},
                     {"qtable", q_.to_json()}};
    std::ofstream(opt_.out_dir / "checkpoints" / name) << j.dump() << '\n';
    checkpoints_.push_back("checkpoints/" + name);
    flush("running");
  }

  Scenario sc_;
  EngineOptions opt_;
  sim::Simulator sim_;
  RngStream rng_;
  std::unique_ptr<validation::Forecaster> forecaster_;
  validation::ClassProfiles profiles_{};
  std::vector<intent::IntentExample> examples_;
  std::unique_ptr<intent::LlmClient> llm_;
  apps::AppSuite suite_;
  hrl::QTable q_;
  std::shared_ptr<RunJournal> journal_ = std::make_shared<RunJournal>();

  std::deque<Pending> pending_;
  std::deque<Pending> queue_;
  std::optional<Option> option_;
  std::vector<double> history_;
  sim::KpiSnapshot last_kpi_;
  std::uint64_t intent_counter_{0};
  std::uint64_t event_counter_{0};
  std::uint64_t kpi_digest_{1469598103934665603ull};
  std::vector<std::string> checkpoints_;

  std::ofstream kpis_, events_, intents_, history_file_;
};

}  // namespace intentran::service
