#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "intentran/service/persist.hpp"

namespace intentran::service {

enum class RunState { paused, running, finished, stopped, failed };

constexpr std::string_view to_string(RunState s) {
  switch (s) {
    case RunState::paused: return "paused";
    case RunState::running: return "running";
    case RunState::finished: return "finished";
    case RunState::stopped: return "stopped";
    case RunState::failed: return "failed";
  }
  return "?";
}

struct RunStatus {
  std::string id;
  std::string scenario;
  std::string config_hash;
  std::uint64_t seed{};
  RunState state{RunState::paused};
  std::uint64_t tick{};
  std::uint64_t target_ticks{};
  std::string active_apps;
  std::size_t queued_intents{};
  bool option_active{};
  bool validation_enabled{};
  std::string out_dir;
  std::string error;

  nlohmann::json to_json() const {
    return {{"id", id},
            {"scenario", scenario},
            {"config_hash", config_hash},
            {"seed", seed},
            {"state", std::string(to_string(state))},
            {"tick", tick},
            {"target_ticks", target_ticks},
            {"active_apps", active_apps},
            {"queued_intents", queued_intents},
            {"option_active", option_active},
            {"validation_enabled", validation_enabled},
            {"out_dir", out_dir},
            {"error", error}};
  }
};

/// A run owned by its own worker thread; every mutation goes through the
/// command queue and reads come from the journal or the published status.
class Run {
 public:
  Run(std::unique_ptr<RunEngine> engine, std::uint64_t target_ticks)
      : engine_(std::move(engine)), journal_(engine_->journal()), target_(target_ticks) {
    publish(RunState::paused);
    worker_ = std::thread([this] { loop(); });
  }

  ~Run() {
    post(Command{Command::shutdown});
    if (worker_.joinable()) worker_.join();
  }

  Run(const Run&) = delete;
  Run& operator=(const Run&) = delete;

  std::shared_ptr<RunJournal> journal() const { return journal_; }

  RunStatus status() const {
    std::lock_guard lk(status_mu_);
    return status_;
  }

  void start() { post(Command{Command::start}); }
  void pause() { post(Command{Command::pause}); }
  void step(std::uint64_t n) { post(Command{Command::step, n}); }
  void stop() { post(Command{Command::stop}); }

  /// Queues an intent for the next strategic tick; returns its id.
  std::uint64_t submit(std::string text, std::vector<TrafficKind> classes = {}) {
    if (closed()) throw ServiceUnavailable("run " + status().id + " is not running");
    Command c{Command::intent};
    c.text = std::move(text);
    c.classes = std::move(classes);
    auto fut = c.reply.get_future();
    post(std::move(c));
    return fut.get();
  }

  /// Read-only validation preview; safe from any thread.
  IntentAssessment what_if(const std::string& text, const std::vector<TrafficKind>& classes = {}) const {
    return engine_->assess(text, classes);
  }

  /// Blocks until the run is no longer advancing or the tick is reached.
  bool wait_until(std::uint64_t tick, std::chrono::milliseconds timeout) const {
    std::unique_lock lk(status_mu_);
    return status_cv_.wait_for(lk, timeout, [&] {
      return status_.tick >= tick || status_.state == RunState::finished || status_.state == RunState::stopped ||
             status_.state == RunState::failed;
    });
  }

 private:
  struct Command {
    enum Kind { start, pause, step, stop, intent, shutdown };
    explicit Command(Kind k, std::uint64_t count = 0) : kind(k), n(count) {}
    Kind kind;
    std::uint64_t n;
    std::string text;
    std::vector<TrafficKind> classes;
    std::promise<std::uint64_t> reply;
  };

  bool closed() const {
    const auto s = status().state;
    return s == RunState::finished || s == RunState::stopped || s == RunState::failed;
  }

  void post(Command c) {
    {
      std::lock_guard lk(cmd_mu_);
      commands_.push_back(std::move(c));
    }
    cmd_cv_.notify_all();
  }

  void publish(RunState s, std::string error = {}) {
    {
      std::lock_guard lk(status_mu_);
      status_.id = engine_->options().run_id;
      status_.scenario = engine_->scenario().name;
      status_.config_hash = engine_->hash();
      status_.seed = engine_->seed();
      status_.state = s;
      status_.tick = engine_->ticks_completed();
      status_.target_ticks = target_;
      status_.active_apps = engine_->active_apps().to_string();
      status_.queued_intents = engine_->queued_intents();
      status_.option_active = engine_->option_active();
      status_.validation_enabled = engine_->scenario().validation_enabled;
      status_.out_dir = engine_->options().out_dir.string();
      if (!error.empty()) status_.error = std::move(error);
    }
    status_cv_.notify_all();
  }

  void loop() {
    RunState state = RunState::paused;
    bool done = false;
    while (!done) {
      std::deque<Command> batch;
      {
        std::unique_lock lk(cmd_mu_);
        cmd_cv_.wait(lk, [&] {
          const bool advancing = (state == RunState::running || owed_steps_ > 0) && engine_->ticks_completed() < target_;
          return !commands_.empty() || advancing;
        });
        batch.swap(commands_);
      }
      for (auto& c : batch) {
        switch (c.kind) {
          case Command::start:
            if (state == RunState::paused) state = RunState::running;
            break;
          case Command::pause:
            if (state == RunState::running) state = RunState::paused;
            owed_steps_ = 0;
            engine_->flush("paused");
            break;
          case Command::step:
            if (state == RunState::paused) owed_steps_ += c.n;
            break;
          case Command::stop:
            if (state == RunState::paused || state == RunState::running) state = RunState::stopped;
            break;
          case Command::intent:
            if (state == RunState::finished || state == RunState::failed)
              c.reply.set_exception(std::make_exception_ptr(ServiceUnavailable("run has " + std::string(to_string(state)))));
            else
              c.reply.set_value(engine_->schedule(std::move(c.text), std::nullopt, std::move(c.classes)));
            break;
          case Command::shutdown:
            if (state == RunState::paused || state == RunState::running) state = RunState::stopped;
            done = true;
            break;
        }
      }
      if (state == RunState::stopped) {
        engine_->flush("stopped");
        publish(state);
        journal_->close();
        // keep answering intents with ServiceUnavailable via closed(); drain until shutdown
        while (!done) {
          std::unique_lock lk(cmd_mu_);
          cmd_cv_.wait(lk, [&] { return !commands_.empty(); });
          for (auto& c : commands_) {
            if (c.kind == Command::shutdown) done = true;
            if (c.kind == Command::intent)
              c.reply.set_exception(std::make_exception_ptr(ServiceUnavailable("run is stopped")));
          }
          commands_.clear();
        }
        break;
      }
      const bool advancing = (state == RunState::running || owed_steps_ > 0) && engine_->ticks_completed() < target_;
      if (advancing) {
        try {
          engine_->advance();
        } catch (const std::exception& e) {
          spdlog::error("run {} failed: {}", engine_->options().run_id, e.what());
          state = RunState::failed;
          engine_->flush("failed");
          publish(state, e.what());
          journal_->close();
          continue;
        }
        if (owed_steps_ > 0) --owed_steps_;
        if (engine_->ticks_completed() >= target_) {
          state = RunState::finished;
          owed_steps_ = 0;
          engine_->flush("finished");
          publish(state);
          journal_->close();
          continue;
        }
      }
      publish(state);
    }
  }

  std::unique_ptr<RunEngine> engine_;
  std::shared_ptr<RunJournal> journal_;
  std::uint64_t target_;
  std::thread worker_;

  std::mutex cmd_mu_;
  std::condition_variable cmd_cv_;
  std::deque<Command> commands_;
  std::uint64_t owed_steps_{0};  // worker thread only

  mutable std::mutex status_mu_;
  mutable std::condition_variable status_cv_;
  RunStatus status_;
};

struct CreateRunRequest {
  /// Either a scenario file or inline scenario text.
  std::optional<std::filesystem::path> scenario_path;
  std::optional<std::string> scenario_text;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> ticks;
  std::optional<bool> validation;
  bool start{false};
};

/// Registry of independent runs, each persisted under `runs_dir/<id>`.
class RunService {
 public:
  explicit RunService(std::filesystem::path runs_dir) : runs_dir_(std::move(runs_dir)) {
    std::filesystem::create_directories(runs_dir_);
  }

  std::shared_ptr<Run> create(const CreateRunRequest& req) {
    Scenario sc;
    if (req.scenario_path) sc = load_scenario(*req.scenario_path);
    else if (req.scenario_text) sc = parse_scenario(*req.scenario_text, "<request>", std::filesystem::current_path());
    else throw ConfigurationError("request needs a scenario path or scenario text");
    std::string id;
    {
      std::lock_guard lk(mu_);
      id = fmt::format("run-{:04d}", ++counter_);
    }
    EngineOptions opt;
    opt.run_id = id;
    opt.out_dir = runs_dir_ / id;
    opt.seed = req.seed;
    opt.validation_enabled = req.validation;
    const auto ticks = req.ticks.value_or(sc.ticks);
    auto run = std::make_shared<Run>(std::make_unique<RunEngine>(std::move(sc), std::move(opt)), ticks);
    if (req.start) run->start();
    std::lock_guard lk(mu_);
    runs_[id] = run;
    return run;
  }

  std::shared_ptr<Run> get(const std::string& id) const {
    std::lock_guard lk(mu_);
    auto it = runs_.find(id);
    if (it == runs_.end()) throw NotFound("no run named '" + id + "'");
    return it->second;
  }

  std::vector<RunStatus> list() const {
    std::lock_guard lk(mu_);
    std::vector<RunStatus> out;
    for (const auto& [id, r] : runs_) out.push_back(r->status());
    return out;
  }

  const std::filesystem::path& runs_dir() const { return runs_dir_; }

 private:
  std::filesystem::path runs_dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Run>> runs_;
  std::uint64_t counter_{0};
};

}  // namespace intentran::service
