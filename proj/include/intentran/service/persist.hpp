#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "intentran/service/engine.hpp"

namespace intentran::service {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw NotFound("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json read_json(const std::filesystem::path& p) {
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(p.string() + ": " + e.what());
  }
}

/// Intents in the order the run received them, with the tick of receipt.
inline std::vector<ScheduledIntent> received_intents(const std::filesystem::path& run_dir) {
  std::vector<std::pair<std::uint64_t, ScheduledIntent>> got;
  std::istringstream in(read_file(run_dir / "intents.log"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw ConfigurationError(fmt::format("{}:{}: malformed intent record", (run_dir / "intents.log").string(), n));
    }
    if (j.value("kind", "") != "received") continue;
    got.push_back({j.at("intent").get<std::uint64_t>(), {j.at("tick").get<std::uint64_t>(), j.at("text").get<std::string>()}});
  }
  std::sort(got.begin(), got.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<ScheduledIntent> out;
  for (auto& [id, s] : got) out.push_back(std::move(s));
  return out;
}

/// Rebuilds the engine of a persisted run from its config and intent log,
/// writing into `out_dir` (or memory when empty). Nothing is advanced yet.
inline std::unique_ptr<RunEngine> rebuild_engine(const std::filesystem::path& run_dir, std::filesystem::path out_dir = {}) {
  const auto meta = read_json(run_dir / "run.json");
  // relative paths in the config resolve against the original scenario directory
  const std::filesystem::path base = meta.contains("base_dir") ? meta["base_dir"].get<std::string>() : run_dir.string();
  auto sc = parse_scenario(read_file(run_dir / "config.yaml"), (run_dir / "config.yaml").string(), base);
  EngineOptions opt;
  opt.run_id = meta.at("id").get<std::string>();
  opt.out_dir = std::move(out_dir);
  opt.use_scenario_intents = false;
  opt.seed = meta.at("seed").get<std::uint64_t>();
  opt.validation_enabled = meta.at("validation_enabled").get<bool>();
  if (std::filesystem::exists(run_dir / "initial_qtable.json"))
    opt.initial_qtable = hrl::QTable::from_json(read_json(run_dir / "initial_qtable.json"));
  if (config_hash(sc.source) != meta.at("config_hash").get<std::string>())
    throw ConfigurationError(run_dir.string() + ": config.yaml does not match the recorded hash");
  auto e = std::make_unique<RunEngine>(std::move(sc), std::move(opt));
  for (const auto& i : received_intents(run_dir)) e->schedule(i.text, i.at_tick);
  return e;
}

struct ReplayResult {
  std::uint64_t ticks{};
  bool kpis_identical{};
  bool events_identical{};
  bool identical() const { return kpis_identical && events_identical; }
};

/// Re-executes a persisted run into `scratch` and compares its outputs byte for byte.
inline ReplayResult replay_run(const std::filesystem::path& run_dir, const std::filesystem::path& scratch) {
  const auto meta = read_json(run_dir / "run.json");
  std::filesystem::remove_all(scratch);
  auto e = rebuild_engine(run_dir, scratch);
  ReplayResult r;
  r.ticks = meta.at("ticks_completed").get<std::uint64_t>();
  e->run(r.ticks);
  e->flush();
  r.kpis_identical = read_file(run_dir / "kpis.csv") == read_file(scratch / "kpis.csv");
  r.events_identical = read_file(run_dir / "events.log") == read_file(scratch / "events.log");
  return r;
}

/// Brings a fresh engine to the state recorded in a checkpoint by deterministic
/// re-execution, and checks the KPI trace digest matches.
inline std::unique_ptr<RunEngine> restore_checkpoint(const std::filesystem::path& run_dir,
                                                     const std::filesystem::path& checkpoint,
                                                     std::filesystem::path out_dir = {}) {
  const auto cp = read_json(checkpoint);
  if (cp.value("format", "") != "intentran.checkpoint" || cp.value("version", 0) != 1)
    throw ConfigurationError(checkpoint.string() + ": unrecognised checkpoint");
  auto e = rebuild_engine(run_dir, std::move(out_dir));
  if (e->hash() != cp.at("config_hash").get<std::string>())
    throw ConfigurationError(checkpoint.string() + ": checkpoint belongs to a different config");
  e->run(cp.at("tick").get<std::uint64_t>());
  if (fmt::format("{:016x}", e->kpi_digest()) != cp.at("kpi_digest").get<std::string>())
    throw ConfigurationError(checkpoint.string() + ": re-executed KPI trace differs from the checkpoint");
  if (!(e->qtable() == hrl::QTable::from_json(cp.at("qtable"))))
    throw ConfigurationError(checkpoint.string() + ": re-executed Q-table differs from the checkpoint");
  return e;
}

}  // namespace intentran::service
