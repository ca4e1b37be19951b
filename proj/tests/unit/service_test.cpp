#include <gtest/gtest.h>

#include <unistd.h>

#include "intentran/service/http_api.hpp"

using namespace intentran;
using namespace intentran::service;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = INTENTRAN_SOURCE_DIR;

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / fmt::format("intentran-{}-{}", name, ::getpid());
  fs::remove_all(p);
  return p;
}

Scenario scenario(const std::string& name) { return load_scenario(kRoot / "scenarios" / (name + ".yaml")); }

std::vector<PipelineEvent> events_of(const RunJournal& j, std::uint64_t intent) {
  std::vector<PipelineEvent> out;
  for (const auto& e : j.events_after(0))
    if (e.intent == intent) out.push_back(e);
  return out;
}

std::string diagnostic(const std::string& yaml) {
  try {
    parse_scenario(yaml, "cfg.yaml");
  } catch (const ConfigurationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

// ---- scenario loading ---------------------------------------------------

TEST(ScenarioConfig, MissingTrafficSectionIsNamed) {
  const auto msg = diagnostic("name: x\nticks: 10\n");
  EXPECT_NE(msg.find("cfg.yaml:1:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("traffic"), std::string::npos) << msg;
}

TEST(ScenarioConfig, DiagnosticsCarryLineNumbers) {
  auto msg = diagnostic("name: x\ntraffic:\n  offered_load_bps: 1.0e6\n  bogus: 3\nvalidation: {enabled: false}\n");
  EXPECT_NE(msg.find("cfg.yaml:4:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("bogus"), std::string::npos) << msg;

  msg = diagnostic("name: x\ntraffic:\n  offered_load_bps: lots\n");
  EXPECT_NE(msg.find("cfg.yaml:3:"), std::string::npos) << msg;

  msg = diagnostic("name: x\ntraffic: {offered_load_bps: 1.0e6}\napps:\n  initial: [App9]\n");
  EXPECT_NE(msg.find("cfg.yaml:4:"), std::string::npos) << msg;

  msg = diagnostic("name: [unclosed\n");
  EXPECT_NE(msg.find("cfg.yaml:"), std::string::npos) << msg;
}

TEST(ScenarioConfig, EnabledValidationNeedsThresholds) {
  EXPECT_NE(diagnostic("traffic: {offered_load_bps: 1.0e6}\n").find("th_t"), std::string::npos);
  EXPECT_EQ(diagnostic("traffic: {offered_load_bps: 1.0e6}\nvalidation: {enabled: false}\n"), "");
}

TEST(ScenarioConfig, ShippedScenariosLoad) {
  for (const auto& f : fs::directory_iterator(kRoot / "scenarios")) {
    SCOPED_TRACE(f.path().string());
    const auto sc = load_scenario(f.path());
    EXPECT_FALSE(sc.name.empty());
    EXPECT_GT(sc.ticks, 0u);
    EXPECT_FALSE(sc.intents.empty());
  }
}

TEST(ScenarioConfig, HashFollowsText) {
  EXPECT_EQ(config_hash("a: 1\n"), config_hash("a: 1\n"));
  EXPECT_NE(config_hash("a: 1\n"), config_hash("a: 2\n"));
  EXPECT_EQ(config_hash("").size(), 16u);
}

// ---- pipeline -----------------------------------------------------------

TEST(Pipeline, ThroughputIntentUnderHighTrafficReachesApps) {
  RunEngine e(scenario("high_traffic"));
  e.run(32);
  const auto ev = events_of(*e.journal(), 1);
  ASSERT_GE(ev.size(), 6u);
  const std::vector<PipelineStep> order{PipelineStep::received,    PipelineStep::processed,
                                        PipelineStep::validated,   PipelineStep::goal_issued,
                                        PipelineStep::action_selected, PipelineStep::apps_applied};
  for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(ev[i].step, order[i]);
  for (const auto& x : ev) EXPECT_FALSE(x.terminal);
  EXPECT_EQ(ev[1].payload["type"], "throughput");
  EXPECT_DOUBLE_EQ(ev[1].payload["magnitude_pct"].get<double>(), 15.0);
  EXPECT_TRUE(ev[2].payload["valid"].get<bool>());

  const auto applied = apps::AppSet::parse(ev[5].payload["apps"].get<std::string>());
  bool covers = false;
  for (auto a : apps::kAllApps)
    if (applied.contains(a)) covers |= apps::capability(a, KpiKind::throughput) == 1;
  EXPECT_TRUE(covers) << applied.to_string();
  EXPECT_FALSE(applied.contains(apps::AppId::app2));
  // every feasible action offered to the controller has a throughput-capable app
  for (const auto& s : ev[3].payload["feasible_actions"]) {
    const auto set = apps::AppSet::parse(s.get<std::string>());
    bool any = false;
    for (auto a : apps::kAllApps) any |= set.contains(a) && apps::capability(a, KpiKind::throughput) == 1;
    EXPECT_TRUE(any) << s;
  }
}

TEST(Pipeline, ThroughputIntentUnderLowTrafficStopsAtValidation) {
  RunEngine e(scenario("low_traffic"));
  e.run(45);
  const auto ev = events_of(*e.journal(), 1);
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_EQ(ev.back().step, PipelineStep::validated);
  EXPECT_TRUE(ev.back().terminal);
  EXPECT_FALSE(ev.back().payload["valid"].get<bool>());
  EXPECT_EQ(ev.back().payload["branch"], "low_traffic");
  EXPECT_EQ(e.active_apps(), apps::AppSet{}.with(apps::AppId::app2));
}

TEST(Pipeline, EmptyIntentStopsAtProcessing) {
  RunEngine e(scenario("high_traffic"));
  const auto id = e.schedule("", 0);
  e.run(26);  // intents wait for forecaster history
  const auto ev = events_of(*e.journal(), id);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[1].step, PipelineStep::processed);
  EXPECT_TRUE(ev[1].terminal);
  EXPECT_NE(ev[1].payload.dump().find("UnintelligibleIntent"), std::string::npos) << ev[1].payload.dump();
}

TEST(Pipeline, DisabledValidationPassesEverything) {
  EngineOptions o;
  o.validation_enabled = false;
  RunEngine e(scenario("low_traffic"), o);
  e.run(42);
  const auto ev = events_of(*e.journal(), 1);
  ASSERT_GE(ev.size(), 6u);
  EXPECT_EQ(ev[2].payload["branch"], "disabled");
  EXPECT_EQ(ev.back().step, PipelineStep::apps_applied);
}

TEST(Pipeline, NoAppChangeWithoutValidVerdict) {
  RunEngine e(scenario("diurnal"));
  e.run(e.scenario().ticks);
  std::map<std::uint64_t, bool> valid;
  for (const auto& x : e.journal()->events_after(0)) {
    if (x.step == PipelineStep::validated) valid[x.intent] = x.payload["valid"].get<bool>();
    if (x.step == PipelineStep::apps_applied) {
      EXPECT_TRUE(valid[x.intent]) << x.line();
    }
  }
  // timeline changes only where apps_applied was emitted
  std::set<std::uint64_t> applied_at{0};
  for (const auto& x : e.journal()->events_after(0))
    if (x.step == PipelineStep::apps_applied) applied_at.insert(x.tick);
  for (const auto& t : e.journal()->timeline()) EXPECT_TRUE(applied_at.count(t.tick)) << t.tick;
}

TEST(Pipeline, IntentsAreSerialised) {
  RunEngine e(scenario("high_traffic"));
  e.schedule("Increase throughput by 20%", 30);
  e.run(40);
  // the second intent waits until the first option terminates
  std::uint64_t first_done = 0, second_start = 0;
  for (const auto& x : e.journal()->events_after(0)) {
    if (x.intent == 1) first_done = std::max(first_done, x.tick);
    if (x.intent == 2 && x.step == PipelineStep::processed) second_start = x.tick;
  }
  EXPECT_GT(second_start, 0u);
  EXPECT_GE(second_start, first_done);
}

TEST(Pipeline, WhatIfHasNoSideEffects) {
  RunEngine e(scenario("low_traffic"));
  e.run(30);
  const auto digest = e.kpi_digest();
  const auto n = e.journal()->events_after(0).size();
  const auto thr = e.assess("Increase throughput by 10%");
  EXPECT_FALSE(thr.to_json()["valid"].get<bool>());
  EXPECT_EQ(thr.verdict->branch, validation::Branch::low_traffic);
  EXPECT_TRUE(e.assess("Improve energy efficiency by 10%").to_json()["valid"].get<bool>());
  const auto junk = e.assess("make it nicer");
  EXPECT_TRUE(junk.error.has_value());
  EXPECT_EQ(junk.failed_at, PipelineStep::processed);
  EXPECT_EQ(e.kpi_digest(), digest);
  EXPECT_EQ(e.journal()->events_after(0).size(), n);
}

// ---- persistence --------------------------------------------------------

TEST(Persistence, IdenticalRunsAreByteIdentical) {
  const auto a = scratch("det-a"), b = scratch("det-b");
  for (const auto& d : {a, b}) {
    EngineOptions o;
    o.out_dir = d;
    RunEngine e(scenario("high_traffic"), o);
    e.schedule("Reduce network delay by 13%", 70);
    e.run(100);
    e.flush();
  }
  EXPECT_EQ(read_file(a / "kpis.csv"), read_file(b / "kpis.csv"));
  EXPECT_EQ(read_file(a / "events.log"), read_file(b / "events.log"));
  EXPECT_EQ(read_file(a / "intents.log"), read_file(b / "intents.log"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Persistence, RunDirectoryLayout) {
  const auto d = scratch("layout");
  EngineOptions o;
  o.out_dir = d;
  RunEngine e(scenario("low_traffic"), o);
  e.run(e.scenario().ticks);
  e.flush();
  for (const auto* f : {"config.yaml", "kpis.csv", "events.log", "intents.log", "run.json", "initial_qtable.json"})
    EXPECT_TRUE(fs::exists(d / f)) << f;
  const auto csv = read_file(d / "kpis.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "slot,throughput_bps,mean_delay_s,ee_bits_per_joule,energy_j,class");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 5 * 80);
  const auto meta = read_json(d / "run.json");
  EXPECT_EQ(meta["config_hash"], config_hash(read_file(d / "config.yaml")));
  EXPECT_EQ(meta["checkpoints"].size(), 4u);
  // every intent record that changed apps was preceded by a verdict
  std::istringstream in(read_file(d / "intents.log"));
  std::string line;
  std::set<std::uint64_t> received;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j["kind"] == "received") received.insert(j["intent"].get<std::uint64_t>());
    else EXPECT_TRUE(received.count(j["intent"].get<std::uint64_t>()));
  }
  fs::remove_all(d);
}

TEST(Persistence, ReplayReproducesOutputs) {
  const auto d = scratch("replay"), s = scratch("replay-scratch");
  {
    EngineOptions o;
    o.out_dir = d;
    RunEngine e(scenario("high_traffic"), o);
    e.schedule("Reduce energy consumption by 10%", 90);
    e.run(e.scenario().ticks);
    e.flush();
  }
  const auto r = replay_run(d, s);
  EXPECT_EQ(r.ticks, 120u);
  EXPECT_TRUE(r.kpis_identical);
  EXPECT_TRUE(r.events_identical);

  // a restored checkpoint carries on to the same trace
  const auto resumed = scratch("resumed");
  auto e = restore_checkpoint(d, d / "checkpoints" / "tick_000040.json", resumed);
  EXPECT_EQ(e->ticks_completed(), 40u);
  e->run(80);
  e->flush();
  EXPECT_EQ(read_file(resumed / "kpis.csv"), read_file(d / "kpis.csv"));
  EXPECT_EQ(read_file(resumed / "events.log"), read_file(d / "events.log"));

  // tampered config is refused
  std::ofstream(d / "config.yaml", std::ios::app) << "# edited\n";
  EXPECT_THROW(replay_run(d, s), ConfigurationError);
  for (const auto& p : {d, s, resumed}) fs::remove_all(p);
}

TEST(Persistence, CheckpointFromAnotherRunIsRefused) {
  const auto a = scratch("cp-a"), b = scratch("cp-b");
  {
    EngineOptions o;
    o.out_dir = a;
    RunEngine e(scenario("low_traffic"), o);
    e.run(20);
    e.flush();
  }
  {
    EngineOptions o;
    o.out_dir = b;
    o.seed = 2;
    RunEngine e(scenario("low_traffic"), o);
    e.run(20);
    e.flush();
  }
  EXPECT_THROW(restore_checkpoint(a, b / "checkpoints" / "tick_000020.json"), ConfigurationError);
  fs::remove_all(a);
  fs::remove_all(b);
}

// ---- KPI queries ----------------------------------------------------------

TEST(KpiQuery, WindowsAndClipping) {
  auto sc = scenario("low_traffic");
  sc.intents.clear();
  RunEngine e(std::move(sc));
  EXPECT_TRUE(e.journal()->kpis(0, std::nullopt).rows.empty());
  e.run(150);
  const auto full = e.journal()->kpis(0, std::nullopt);
  EXPECT_EQ(full.rows.size(), 150u);
  EXPECT_FALSE(full.clipped);
  for (std::size_t i = 1; i < full.rows.size(); ++i) EXPECT_LT(full.rows[i - 1].slot, full.rows[i].slot);

  const auto w = e.journal()->kpis(100, 200);
  EXPECT_EQ(w.rows.size(), 50u);
  EXPECT_TRUE(w.clipped);
  EXPECT_EQ(w.rows.front().tick, 100u);

  const auto past = e.journal()->kpis(300, 400);
  EXPECT_TRUE(past.rows.empty());
  EXPECT_TRUE(past.clipped);
  ASSERT_EQ(full.timeline.size(), 1u);
  EXPECT_EQ(full.timeline[0].app, apps::AppId::app2);
  EXPECT_FALSE(full.timeline[0].to.has_value());
}

TEST(KpiQuery, AppIntervalsCloseWhenAppsLeave) {
  using apps::AppId;
  std::vector<TimelineEntry> tl{{0, apps::AppSet{}.with(AppId::app2), {}},
                                {10, apps::AppSet{}.with(AppId::app1).with(AppId::app2), 1},
                                {20, apps::AppSet{}.with(AppId::app1), 2}};
  const auto iv = app_intervals(tl);
  ASSERT_EQ(iv.size(), 2u);
  EXPECT_EQ(iv[0].app, AppId::app2);
  EXPECT_EQ(iv[0].from, 0u);
  EXPECT_EQ(iv[0].to, std::optional<std::uint64_t>(20));
  EXPECT_EQ(iv[1].app, AppId::app1);
  EXPECT_EQ(iv[1].from, 10u);
  EXPECT_FALSE(iv[1].to.has_value());
}

// ---- run control ------------------------------------------------------------

TEST(RunControl, StepAndPauseMatchAStraightRun) {
  const auto runs = scratch("svc");
  RunService svc(runs);
  CreateRunRequest req;
  req.scenario_path = kRoot / "scenarios" / "low_traffic.yaml";
  req.ticks = 150;
  auto run = svc.create(req);
  run->step(100);
  ASSERT_TRUE(run->wait_until(100, std::chrono::seconds(60)));
  run->pause();
  run->pause();
  EXPECT_EQ(run->status().tick, 100u);
  run->step(7);
  run->start();
  ASSERT_TRUE(run->wait_until(150, std::chrono::seconds(60)));
  // finishing and publishing race with wait_until; the journal closes last
  while (!run->journal()->closed()) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  EXPECT_EQ(run->status().state, RunState::finished);
  const auto dir = run->status().out_dir;

  const auto straight = scratch("svc-straight");
  EngineOptions o;
  o.out_dir = straight;
  RunEngine e(scenario("low_traffic"), o);
  e.run(150);
  e.flush();
  EXPECT_EQ(read_file(fs::path(dir) / "kpis.csv"), read_file(straight / "kpis.csv"));
  EXPECT_EQ(read_file(fs::path(dir) / "events.log"), read_file(straight / "events.log"));
  EXPECT_THROW(run->submit("Increase throughput by 5%"), ServiceUnavailable);
  fs::remove_all(runs);
  fs::remove_all(straight);
}

TEST(RunControl, MissingRunIsNotFound) {
  const auto runs = scratch("svc-missing");
  RunService svc(runs);
  EXPECT_THROW(svc.get("run-9999")->stop(), NotFound);
  fs::remove_all(runs);
}

TEST(RunControl, StoppedRunRefusesIntents) {
  const auto runs = scratch("svc-stop");
  RunService svc(runs);
  CreateRunRequest req;
  req.scenario_path = kRoot / "scenarios" / "low_traffic.yaml";
  auto run = svc.create(req);
  run->step(3);
  ASSERT_TRUE(run->wait_until(3, std::chrono::seconds(30)));
  const auto id = run->submit("Improve energy efficiency by 5%");
  EXPECT_GT(id, 1u);
  run->stop();
  ASSERT_TRUE(run->wait_until(1000000, std::chrono::seconds(30)));
  EXPECT_EQ(run->status().state, RunState::stopped);
  EXPECT_THROW(run->submit("Improve energy efficiency by 5%"), ServiceUnavailable);
  EXPECT_EQ(read_json(fs::path(run->status().out_dir) / "run.json")["state"], "stopped");
  fs::remove_all(runs);
}

TEST(RunControl, MalformedInlineScenarioIsRejected) {
  const auto runs = scratch("svc-bad");
  RunService svc(runs);
  CreateRunRequest req;
  req.scenario_text = "name: x\n";
  try {
    svc.create(req);
    FAIL() << "expected ConfigurationError";
  } catch (const ConfigurationError& e) {
    EXPECT_NE(std::string(e.what()).find("traffic"), std::string::npos);
  }
  EXPECT_TRUE(svc.list().empty());
  fs::remove_all(runs);
}

// ---- HTTP API ---------------------------------------------------------------

class HttpApiTest : public ::testing::Test {
 protected:
  void SetUp() override {
    runs_ = scratch("http");
    svc_ = std::make_unique<RunService>(runs_);
    api_ = std::make_unique<HttpApi>(*svc_);
    port_ = api_->bind_any();
    ASSERT_GT(port_, 0);
    th_ = std::thread([this] { api_->listen_after_bind(); });
    api_->wait_until_ready();
    cli_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    cli_->set_read_timeout(60, 0);
  }
  void TearDown() override {
    api_->stop();
    th_.join();
    svc_.reset();
    fs::remove_all(runs_);
  }

  nlohmann::json post(const std::string& path, const nlohmann::json& body, int expect) {
    auto r = cli_->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(r);
    if (!r) return {};
    EXPECT_EQ(r->status, expect) << path << " " << r->body;
    return nlohmann::json::parse(r->body);
  }
  nlohmann::json get(const std::string& path, int expect = 200) {
    auto r = cli_->Get(path);
    EXPECT_TRUE(r);
    if (!r) return {};
    EXPECT_EQ(r->status, expect) << path << " " << r->body;
    return nlohmann::json::parse(r->body);
  }

  std::string create(const std::string& scenario_name, std::uint64_t ticks) {
    const auto s = post("/api/runs", {{"scenario", (kRoot / "scenarios" / (scenario_name + ".yaml")).string()}, {"ticks", ticks}}, 201);
    return s["id"].get<std::string>();
  }

  fs::path runs_;
  std::unique_ptr<RunService> svc_;
  std::unique_ptr<HttpApi> api_;
  std::unique_ptr<httplib::Client> cli_;
  std::thread th_;
  int port_{};
};

TEST_F(HttpApiTest, StatusFieldsAndErrors) {
  EXPECT_TRUE(get("/api/health")["ok"].get<bool>());
  const auto id = create("low_traffic", 20);
  const auto s = get("/api/runs/" + id);
  for (const auto* k : {"id", "scenario", "config_hash", "seed", "state", "tick", "target_ticks", "active_apps",
                        "queued_intents", "option_active", "validation_enabled"})
    EXPECT_TRUE(s.contains(k)) << k;
  EXPECT_EQ(s["state"], "paused");
  EXPECT_EQ(get("/api/runs").size(), 1u);

  EXPECT_EQ(get("/api/runs/nope", 404)["error"], "NotFound");
  EXPECT_EQ(post("/api/runs/nope/control", {{"action", "stop"}}, 404)["error"], "NotFound");
  EXPECT_EQ(post("/api/runs/" + id + "/control", {{"action", "dance"}}, 400)["error"], "ConfigurationError");
  EXPECT_EQ(post("/api/runs", {{"scenario_yaml", "name: x\n"}}, 400)["error"], "ConfigurationError");
  auto bad = cli_->Post("/api/runs/" + id + "/intents", "{not json", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(get("/api/runs/" + id + "/kpis?from=abc", 400)["error"], "ConfigurationError");
}

TEST_F(HttpApiTest, WhatIfFollowsTrafficRegime) {
  const auto id = create("low_traffic", 80);
  post("/api/runs/" + id + "/control", {{"action", "step"}, {"ticks", 30}}, 202);
  ASSERT_TRUE(svc_->get(id)->wait_until(30, std::chrono::seconds(60)));
  const auto thr = post("/api/runs/" + id + "/what-if", {{"text", "Increase throughput by 10%"}}, 200);
  EXPECT_FALSE(thr["valid"].get<bool>());
  EXPECT_EQ(thr["verdict"]["branch"], "low_traffic");
  EXPECT_TRUE(thr["verdict"]["conflict"].is_string());
  const auto ee = post("/api/runs/" + id + "/what-if", {{"text", "Increase energy efficiency by 10%"}}, 200);
  EXPECT_TRUE(ee["valid"].get<bool>());
  EXPECT_EQ(ee["processed"]["type"], "energy_efficiency");
  const auto junk = post("/api/runs/" + id + "/what-if", {{"text", "please be faster"}}, 200);
  EXPECT_FALSE(junk["valid"].get<bool>());
  EXPECT_EQ(junk["failed_at"], "processed");
  EXPECT_TRUE(get("/api/runs/" + id + "/events").empty());
}

TEST_F(HttpApiTest, TargetClassOverride) {
  const auto id = create("low_traffic", 80);
  post("/api/runs/" + id + "/control", {{"action", "step"}, {"ticks", 30}}, 202);
  ASSERT_TRUE(svc_->get(id)->wait_until(30, std::chrono::seconds(60)));
  const auto w = post("/api/runs/" + id + "/what-if",
                      {{"text", "Reduce network delay by 13%"}, {"classes", {"voice", "urllc", "voice"}}}, 200);
  EXPECT_EQ(w["processed"]["target_classes"], nlohmann::json({"voice", "urllc"}));
  const auto bad = post("/api/runs/" + id + "/what-if", {{"text", "Reduce network delay by 13%"}, {"classes", {"fax"}}}, 400);
  EXPECT_EQ(bad["error"], "ConfigurationError");
  post("/api/runs/" + id + "/intents", {{"text", "Reduce network delay by 13%"}, {"classes", "voice"}}, 400);

  post("/api/runs/" + id + "/intents", {{"text", "Reduce network delay by 13%"}, {"classes", {"gaming"}}}, 202);
  post("/api/runs/" + id + "/control", {{"action", "step"}, {"ticks", 2}}, 202);
  ASSERT_TRUE(svc_->get(id)->wait_until(32, std::chrono::seconds(60)));
  const auto ev = get("/api/runs/" + id + "/events");
  ASSERT_GE(ev.size(), 2u);
  EXPECT_EQ(ev[0]["payload"]["classes"], nlohmann::json({"gaming"}));
  EXPECT_EQ(ev[1]["step"], "processed");
  EXPECT_EQ(ev[1]["payload"]["target_classes"], nlohmann::json({"gaming"}));
}

TEST_F(HttpApiTest, StreamAndKpisMatchRunFiles) {
  const auto id = create("high_traffic", 40);
  const auto got = post("/api/runs/" + id + "/intents", {{"text", "Reduce network delay by 13%"}}, 202);
  EXPECT_EQ(got["intent"], 2);  // the scenario's own intent is 1
  post("/api/runs/" + id + "/control", {{"action", "start"}}, 202);

  std::string body;
  auto r = cli_->Get("/api/runs/" + id + "/stream?rows=0", [&](const char* d, std::size_t n) {
    body.append(d, n);
    return true;
  });
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_NE(body.find("event: end"), std::string::npos);

  const auto dir = fs::path(get("/api/runs/" + id)["out_dir"].get<std::string>());
  // pipeline events on the stream are the events.log lines verbatim, in order
  std::string streamed;
  std::istringstream in(body);
  std::string line;
  std::size_t kpi_events = 0;
  while (std::getline(in, line)) {
    if (line == "event: kpi") ++kpi_events;
    if (line.rfind("data: {\"id\"", 0) == 0) streamed += line.substr(6) + "\n";
  }
  EXPECT_EQ(streamed, read_file(dir / "events.log"));
  EXPECT_EQ(kpi_events, 40u);

  // chart rows are kpis.csv lines byte for byte
  const auto k = get("/api/runs/" + id + "/kpis?from=0&to=40");
  EXPECT_FALSE(k["clipped"].get<bool>());
  ASSERT_EQ(k["rows"].size(), 40u);
  std::string csv = "slot,throughput_bps,mean_delay_s,ee_bits_per_joule,energy_j,class\n";
  for (const auto& row : k["rows"])
    for (const auto& l : row["csv"]) csv += l.get<std::string>() + "\n";
  EXPECT_EQ(csv, read_file(dir / "kpis.csv"));
  for (const auto* f : {"tick", "slot", "throughput_bps", "mean_delay_s", "ee_bits_per_joule", "energy_j"})
    EXPECT_TRUE(k["rows"][0].contains(f)) << f;
  ASSERT_FALSE(k["timeline"].empty());
  for (const auto& iv : k["timeline"]) {
    EXPECT_TRUE(iv.contains("app"));
    EXPECT_TRUE(iv.contains("from"));
    EXPECT_TRUE(iv.contains("to"));
  }

  // reconnecting with Last-Event-ID resumes after that event
  httplib::Headers h{{"Last-Event-ID", "3"}};
  std::string resumed;
  r = cli_->Get("/api/runs/" + id + "/stream?kpis=0", h, [&](const char* d, std::size_t n) {
    resumed.append(d, n);
    return true;
  });
  ASSERT_TRUE(r);
  EXPECT_EQ(resumed.find("id: 3\n"), std::string::npos);
  EXPECT_NE(resumed.find("id: 4\n"), std::string::npos);
  EXPECT_EQ(resumed.find("event: kpi"), std::string::npos);

  const auto events = get("/api/runs/" + id + "/events?after=3");
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events[0]["id"], 4);
  for (const auto* f : {"id", "intent", "step", "tick", "slot", "time_s", "terminal", "payload"})
    EXPECT_TRUE(events[0].contains(f)) << f;

  EXPECT_EQ(get("/api/runs/" + id)["state"], "finished");
  EXPECT_EQ(post("/api/runs/" + id + "/intents", {{"text", "Increase throughput by 5%"}}, 409)["error"],
            "ServiceUnavailable");
}
