#include <CLI11.hpp>
#include <csignal>
#include <iostream>

#include "intentran/service/http_api.hpp"

namespace fs = std::filesystem;
using namespace intentran;
using namespace intentran::service;

namespace {

std::string describe(const PipelineEvent& e) {
  std::string s = fmt::format("[tick {:>4}] intent {} {}", e.tick, e.intent, to_string(e.step));
  const auto& p = e.payload;
  switch (e.step) {
    case PipelineStep::received: s += fmt::format(" \"{}\"", p.value("text", "")); break;
    case PipelineStep::processed:
      if (p.contains("error")) s += " error: " + p.value("error", "");
      else s += fmt::format(" type={} magnitude={}%", p.value("type", "?"), p.value("magnitude_pct", 0.0));
      break;
    case PipelineStep::validated:
      if (p.contains("error")) s += " error: " + p.value("error", "");
      else s += fmt::format(" valid={} branch={}", p.value("valid", false), p.value("branch", "?"));
      if (p.contains("conflict") && p["conflict"].is_string()) s += " (" + p["conflict"].get<std::string>() + ")";
      break;
    case PipelineStep::goal_issued:
      if (p.contains("error")) s += " error: " + p.value("error", "");
      else
        s += fmt::format(" {} {:.4g} -> {:.4g} within {} ticks, {} feasible actions", p.value("kpi", "?"),
                         p.value("baseline", 0.0), p.value("target_value", 0.0), p.value("deadline", 0),
                         p.contains("feasible_actions") ? p["feasible_actions"].size() : 0);
      break;
    case PipelineStep::action_selected: s += " " + p.value("action", std::string{}); break;
    case PipelineStep::apps_applied: s += " " + p.value("apps", std::string{}); break;
  }
  if (e.terminal) s += "  [rejected]";
  return s;
}

int cmd_run(const std::string& scenario, std::optional<std::uint64_t> seed, std::optional<std::uint64_t> ticks,
            const std::vector<std::string>& intents, const std::vector<std::uint64_t>& at_ticks,
            std::optional<fs::path> out, bool no_validation, bool quiet) {
  auto sc = load_scenario(scenario);
  EngineOptions opt;
  opt.seed = seed;
  if (no_validation) opt.validation_enabled = false;
  opt.run_id = fmt::format("{}-seed{}", sc.name, seed.value_or(sc.sim.seed));
  opt.out_dir = out.value_or(fs::path("runs") / opt.run_id);
  const auto n = ticks.value_or(sc.ticks);
  if (at_ticks.size() > intents.size()) throw ConfigurationError("--at-tick given more often than --intent");

  RunEngine engine(std::move(sc), opt);
  for (std::size_t i = 0; i < intents.size(); ++i)
    engine.schedule(intents[i], i < at_ticks.size() ? std::optional(at_ticks[i]) : std::nullopt);

  std::uint64_t seen = 0;
  for (std::uint64_t t = 0; t < n; ++t) {
    engine.advance();
    for (const auto& e : engine.journal()->events_after(seen)) {
      if (!quiet) std::cout << describe(e) << '\n';
      seen = e.id;
    }
  }
  engine.flush("finished");
  const auto rows = engine.journal()->rows_from(0);
  if (!rows.empty()) {
    const auto& k = rows.back().kpi;
    std::cout << fmt::format("{} ticks, apps {}, last tick: {:.1f} Mbps, {:.2f} ms delay, {:.4g} Mbit/J\n", n,
                             engine.active_apps().to_string(), k.throughput_bps / 1e6, k.mean_delay_s * 1e3,
                             k.energy_efficiency / 1e6);
  }
  std::cout << "run directory: " << opt.out_dir.string() << '\n';
  return 0;
}

int cmd_replay(const fs::path& run_dir, std::optional<fs::path> checkpoint, std::optional<fs::path> scratch) {
  const auto tmp = scratch.value_or(fs::temp_directory_path() / fmt::format("intentran-replay-{}", ::getpid()));
  if (checkpoint) {
    auto e = restore_checkpoint(run_dir, *checkpoint);
    std::cout << fmt::format("checkpoint restored at tick {} (KPI digest {:016x})\n", e->ticks_completed(), e->kpi_digest());
    return 0;
  }
  const auto r = replay_run(run_dir, tmp);
  if (!scratch) fs::remove_all(tmp);
  std::cout << fmt::format("replayed {} ticks: kpis.csv {}, events.log {}\n", r.ticks,
                           r.kpis_identical ? "identical" : "DIFFERS", r.events_identical ? "identical" : "DIFFERS");
  return r.identical() ? 0 : 1;
}

int cmd_train(const std::string& scenario, std::optional<std::uint64_t> seed, std::size_t episodes, const fs::path& out,
              std::optional<fs::path> logs) {
  auto sc = load_scenario(scenario);
  auto cfg = sc.sim;
  if (seed) cfg.seed = *seed;
  if (logs) fs::create_directories(*logs);
  const auto q = train_qtable(sc, cfg, episodes, logs.value_or(fs::path{}));
  std::ofstream(out) << q.to_json().dump() << '\n';
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

int cmd_make_labels(std::size_t states, std::uint64_t seed, const fs::path& out) {
  const auto xs = hrl::oracle_samples(states, seed);
  hrl::save_labels(out.string(), xs);
  std::cout << fmt::format("wrote {} labelled samples to {}\n", xs.size(), out.string());
  return 0;
}

int cmd_train_scorer(const fs::path& labels, const fs::path& out, double epsilon, std::uint64_t seed) {
  const auto fit = hrl::train_scorer(hrl::load_labels(labels.string()), seed);
  hrl::AttentionConfig cfg;
  cfg.theta = fit.theta;
  cfg.epsilon = epsilon;
  cfg.validate();
  auto j = hrl::scorer_to_json(cfg);
  j["train_accuracy"] = fit.train_accuracy;
  j["heldout_accuracy"] = fit.heldout_accuracy;
  std::ofstream(out) << j.dump(2) << '\n';
  std::cout << fmt::format("train accuracy {:.3f} ({} rows), held-out accuracy {:.3f} ({} rows)\nwrote {}\n",
                           fit.train_accuracy, fit.train_size, fit.heldout_accuracy, fit.heldout_size, out.string());
  return 0;
}

HttpApi* g_api = nullptr;

int cmd_serve(const std::string& host, int port, const fs::path& runs_dir) {
  RunService svc(runs_dir);
  HttpApi api(svc);
  if (port == 0) port = api.bind_any(host);
  else if (!api.bind(host, port)) throw ConfigurationError(fmt::format("cannot bind {}:{}", host, port));
  g_api = &api;
  std::signal(SIGINT, [](int) { if (g_api) g_api->stop(); });
  std::signal(SIGTERM, [](int) { if (g_api) g_api->stop(); });
  spdlog::info("listening on http://{}:{}/api (runs in {})", host, port, runs_dir.string());
  api.listen_after_bind();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intent-driven RAN orchestration: simulate, train and serve."};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error")->capture_default_str();

  auto* run = app.add_subcommand("run", "Run a scenario to completion and write a run directory");
  std::string scenario;
  std::optional<std::uint64_t> seed, ticks;
  std::vector<std::string> intents;
  std::vector<std::uint64_t> at_ticks;
  std::optional<fs::path> out;
  bool no_validation = false, quiet = false;
  run->add_option("scenario", scenario, "scenario YAML")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--ticks", ticks, "override the run length in strategic ticks");
  run->add_option("--intent", intents, "intent text (repeatable)");
  run->add_option("--at-tick", at_ticks, "tick for the matching --intent (repeatable; default: now)");
  run->add_option("--out", out, "run directory (default runs/<scenario>-seed<N>)");
  run->add_flag("--no-validation", no_validation, "skip intent validation");
  run->add_flag("-q,--quiet", quiet, "do not print pipeline events");

  auto* replay = app.add_subcommand("replay", "Re-execute a run directory and compare outputs byte for byte");
  fs::path run_dir;
  std::optional<fs::path> checkpoint, scratch;
  replay->add_option("run_dir", run_dir)->required()->check(CLI::ExistingDirectory);
  replay->add_option("--checkpoint", checkpoint, "restore and verify this checkpoint instead")->check(CLI::ExistingFile);
  replay->add_option("--scratch", scratch, "keep the re-executed outputs here");

  auto* train = app.add_subcommand("train", "Pretrain the controller Q-table on a scenario");
  std::size_t episodes = 200;
  fs::path q_out = "qtable.json";
  std::optional<fs::path> logs;
  train->add_option("scenario", scenario)->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed);
  train->add_option("--episodes", episodes)->capture_default_str();
  train->add_option("--out", q_out)->capture_default_str();
  train->add_option("--logs", logs, "directory for per-KPI training logs");

  auto* labels = app.add_subcommand("make-labels", "Write capability-oracle labels for scorer training");
  std::size_t states = 200;
  std::uint64_t label_seed = 1;
  fs::path labels_out = "labels.csv";
  labels->add_option("--states", states, "random network states")->capture_default_str();
  labels->add_option("--seed", label_seed)->capture_default_str();
  labels->add_option("--out", labels_out)->capture_default_str();

  auto* scorer = app.add_subcommand("train-scorer", "Fit the attention scorer on a label CSV");
  fs::path labels_in, scorer_out = "scorer.json";
  double epsilon = hrl::kDefaultEpsilon;
  std::uint64_t split_seed = 1;
  scorer->add_option("labels", labels_in)->required()->check(CLI::ExistingFile);
  scorer->add_option("--out", scorer_out)->capture_default_str();
  scorer->add_option("--epsilon", epsilon, "attention threshold")->capture_default_str();
  scorer->add_option("--seed", split_seed, "train/held-out split seed")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Serve the JSON API used by the operator console");
  std::string host = "127.0.0.1";
  int port = 8080;
  fs::path runs_dir = "runs";
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port, "0 picks a free port")->capture_default_str();
  serve->add_option("--runs-dir", runs_dir)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run) return cmd_run(scenario, seed, ticks, intents, at_ticks, out, no_validation, quiet);
    if (*replay) return cmd_replay(run_dir, checkpoint, scratch);
    if (*train) return cmd_train(scenario, seed, episodes, q_out, logs);
    if (*labels) return cmd_make_labels(states, label_seed, labels_out);
    if (*scorer) return cmd_train_scorer(labels_in, scorer_out, epsilon, split_seed);
    if (*serve) return cmd_serve(host, port, runs_dir);
  } catch (const ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
