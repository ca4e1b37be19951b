#pragma once

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "intentran/apps/app.hpp"
#include "intentran/hrl/attention.hpp"
#include "intentran/hrl/qlearning.hpp"
#include "intentran/sim/config.hpp"
#include "intentran/validation/validator.hpp"

namespace intentran::service {

struct ScheduledIntent {
  std::uint64_t at_tick{};
  std::string text;
};

struct Scenario {
  std::string name{"scenario"};
  std::string source;  // original text; hashed and copied into the run directory
  std::filesystem::path base_dir;
  std::uint64_t ticks{100};

  sim::SimConfig sim;

  apps::AppSet initial_apps;
  std::uint64_t tactical_period{10};
  std::size_t app1_pretrain_decisions{2000};

  bool validation_enabled{true};
  validation::ValidationConfig validation;
  std::string forecaster{"seasonal_naive"};

  hrl::AttentionConfig attention;
  hrl::LearningParams learning;
  std::size_t tau{50};
  double penalty_weight{0.1};
  double exploration{0.0};
  bool online_learning{true};
  /// Q-value lead another action needs before the runtime switches to it.
  double switch_margin{0.5};
  std::size_t pretrain_episodes{0};
  std::optional<std::filesystem::path> qtable_path;

  std::optional<std::filesystem::path> examples_path;
  std::optional<std::string> llm_endpoint;
  int llm_timeout_ms{5000};

  std::vector<ScheduledIntent> intents;
  std::uint64_t checkpoint_every{50};

  std::filesystem::path resolve(const std::filesystem::path& p) const { return p.is_absolute() ? p : base_dir / p; }
};

/// FNV-1a over the scenario text; stable across platforms.
inline std::string config_hash(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return fmt::format("{:016x}", h);
}

namespace detail {

class YamlReader {
 public:
  explicit YamlReader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& where, const std::string& msg) const {
    const auto m = n.Mark();
    const int line = m.line >= 0 ? m.line + 1 : 1;
    throw ConfigurationError(fmt::format("{}:{}: {}: {}", origin_, line, where, msg));
  }

  void only_keys(const YAML::Node& n, const std::string& where, std::set<std::string> allowed) const {
    if (!n.IsMap()) fail(n, where, "expected a mapping");
    for (const auto& kv : n) {
      const auto k = kv.first.as<std::string>();
      if (!allowed.count(k)) fail(kv.first, where, "unknown key '" + k + "'");
    }
  }

  template <class T>
  T get(const YAML::Node& n, const std::string& where, const char* what) const {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, where, std::string("expected ") + what);
    }
  }

  double number(const YAML::Node& n, const std::string& w) const { return get<double>(n, w, "a number"); }
  std::uint64_t count(const YAML::Node& n, const std::string& w) const {
    const auto v = get<long long>(n, w, "a non-negative integer");
    if (v < 0) fail(n, w, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }
  bool boolean(const YAML::Node& n, const std::string& w) const { return get<bool>(n, w, "true or false"); }
  std::string text(const YAML::Node& n, const std::string& w) const { return get<std::string>(n, w, "a string"); }
  std::vector<double> numbers(const YAML::Node& n, const std::string& w) const {
    if (!n.IsSequence()) fail(n, w, "expected a list of numbers");
    std::vector<double> out;
    for (const auto& x : n) out.push_back(number(x, w));
    return out;
  }

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
};

inline std::optional<TrafficKind> parse_kind(std::string_view s) {
  for (auto k : kAllTrafficKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline void read_traffic(const YamlReader& r, const YAML::Node& t, sim::SimConfig& c) {
  r.only_keys(t, "traffic", {"offered_load_bps", "mix", "classes", "diurnal_amplitude", "diurnal_period_ticks",
                             "max_queue_packets"});
  if (t["offered_load_bps"]) c.offered_load_bps = r.number(t["offered_load_bps"], "traffic.offered_load_bps");
  if (t["diurnal_amplitude"]) c.diurnal_amplitude = r.number(t["diurnal_amplitude"], "traffic.diurnal_amplitude");
  if (t["diurnal_period_ticks"])
    c.diurnal_period_ticks = r.count(t["diurnal_period_ticks"], "traffic.diurnal_period_ticks");
  if (t["max_queue_packets"]) c.max_queue_packets = r.count(t["max_queue_packets"], "traffic.max_queue_packets");
  if (const auto mix = t["mix"]) {
    r.only_keys(mix, "traffic.mix", {"video", "gaming", "voice", "urllc"});
    for (const auto& kv : mix)
      c.class_mix[index_of(*parse_kind(kv.first.as<std::string>()))] = r.number(kv.second, "traffic.mix");
  }
  if (const auto cls = t["classes"]) {
    r.only_keys(cls, "traffic.classes", {"video", "gaming", "voice", "urllc"});
    for (const auto& kv : cls) {
      const auto name = kv.first.as<std::string>();
      const std::string w = "traffic.classes." + name;
      auto& tc = c.classes[index_of(*parse_kind(name))];
      const auto& n = kv.second;
      r.only_keys(n, w, {"mean_interarrival_s", "distribution", "packet_bits", "qos"});
      if (n["mean_interarrival_s"]) tc.mean_interarrival_s = r.number(n["mean_interarrival_s"], w + ".mean_interarrival_s");
      if (n["packet_bits"]) tc.packet_bits = r.number(n["packet_bits"], w + ".packet_bits");
      if (n["distribution"]) {
        const auto d = sim::parse_distribution(r.text(n["distribution"], w));
        if (!d) r.fail(n["distribution"], w + ".distribution", "expected pareto, uniform or poisson");
        tc.distribution = *d;
      }
      if (const auto q = n["qos"]) {
        if (!q.IsSequence()) r.fail(q, w + ".qos", "expected a list of requirements");
        tc.qos.requirements.clear();
        for (const auto& req : q) {
          r.only_keys(req, w + ".qos", {"metric", "target", "direction"});
          if (!req["metric"] || !req["target"] || !req["direction"])
            r.fail(req, w + ".qos", "requirement needs metric, target and direction");
          const auto m = parse_kpi(r.text(req["metric"], w + ".qos.metric"));
          if (!m) r.fail(req["metric"], w + ".qos.metric", "expected throughput, delay or energy_efficiency");
          const auto dir = sim::parse_direction(r.text(req["direction"], w + ".qos.direction"));
          if (!dir) r.fail(req["direction"], w + ".qos.direction", "expected at_least or at_most");
          tc.qos.requirements.push_back({*m, r.number(req["target"], w + ".qos.target"), *dir});
        }
      }
    }
  }
}

inline void read_simulation(const YamlReader& r, const YAML::Node& s, sim::SimConfig& c) {
  const std::string w = "simulation";
  r.only_keys(s, w,
              {"num_macro_bs", "num_small_bs", "num_ues", "slot_duration_s", "strategic_period_slots",
               "macro_radius_m", "small_radius_m", "small_ring_radius_m", "hotspot_fraction", "ue_speed_mps",
               "macro_power_dbm", "macro_default_power", "small_power_dbm", "small_default_power", "num_antennas",
               "codebook_size", "shadowing_sigma_db", "noise_figure_db", "small_rats"});
  auto cnt = [&](const char* k, std::size_t& dst) {
    if (s[k]) dst = r.count(s[k], w + "." + k);
  };
  auto num = [&](const char* k, double& dst) {
    if (s[k]) dst = r.number(s[k], w + "." + k);
  };
  cnt("num_macro_bs", c.num_macro_bs);
  cnt("num_small_bs", c.num_small_bs);
  cnt("num_ues", c.num_ues);
  cnt("strategic_period_slots", c.strategic_period_slots);
  cnt("macro_default_power", c.macro_default_power);
  cnt("small_default_power", c.small_default_power);
  cnt("num_antennas", c.num_antennas);
  cnt("codebook_size", c.codebook_size);
  num("slot_duration_s", c.slot_duration_s);
  num("macro_radius_m", c.macro_radius_m);
  num("small_radius_m", c.small_radius_m);
  num("small_ring_radius_m", c.small_ring_radius_m);
  num("hotspot_fraction", c.hotspot_fraction);
  num("ue_speed_mps", c.ue_speed_mps);
  num("shadowing_sigma_db", c.shadowing_sigma_db);
  num("noise_figure_db", c.noise_figure_db);
  if (s["macro_power_dbm"]) c.macro_power_dbm = r.numbers(s["macro_power_dbm"], w + ".macro_power_dbm");
  if (s["small_power_dbm"]) c.small_power_dbm = r.numbers(s["small_power_dbm"], w + ".small_power_dbm");
  if (const auto rats = s["small_rats"]) {
    if (!rats.IsSequence()) r.fail(rats, w + ".small_rats", "expected a list");
    c.small_rats.clear();
    for (const auto& x : rats) {
      const auto k = sim::parse_rat(r.text(x, w + ".small_rats"));
      if (!k) r.fail(x, w + ".small_rats", "expected lte, nr_mid or nr_high");
      c.small_rats.push_back(*k);
    }
  }
}

}  // namespace detail

/// Parses a scenario document. `origin` names the source in diagnostics.
inline Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>",
                               std::filesystem::path base_dir = {}) {
  detail::YamlReader r(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigurationError(fmt::format("{}:{}: {}", origin, e.mark.line + 1, e.msg));
  }
  if (!root.IsMap()) throw ConfigurationError(origin + ":1: scenario must be a mapping");
  r.only_keys(root, "scenario",
              {"name", "seed", "ticks", "traffic", "simulation", "apps", "validation", "hrl", "intents", "llm",
               "checkpoint_every"});
  if (!root["traffic"]) throw ConfigurationError(origin + ":1: missing required section 'traffic'");

  Scenario sc;
  sc.source = text;
  sc.base_dir = std::move(base_dir);
  if (root["name"]) sc.name = r.text(root["name"], "name");
  if (root["seed"]) sc.sim.seed = r.count(root["seed"], "seed");
  if (root["ticks"]) sc.ticks = r.count(root["ticks"], "ticks");
  if (root["checkpoint_every"]) sc.checkpoint_every = r.count(root["checkpoint_every"], "checkpoint_every");

  detail::read_traffic(r, root["traffic"], sc.sim);
  if (root["simulation"]) detail::read_simulation(r, root["simulation"], sc.sim);

  if (const auto a = root["apps"]) {
    r.only_keys(a, "apps", {"initial", "tactical_period", "app1_pretrain_decisions"});
    if (const auto init = a["initial"]) {
      if (!init.IsSequence()) r.fail(init, "apps.initial", "expected a list of app names");
      for (const auto& x : init) {
        const auto id = apps::parse_app(r.text(x, "apps.initial"));
        if (!id) r.fail(x, "apps.initial", "expected App1 .. App5");
        sc.initial_apps = sc.initial_apps.with(*id);
      }
    }
    if (a["tactical_period"]) sc.tactical_period = r.count(a["tactical_period"], "apps.tactical_period");
    if (a["app1_pretrain_decisions"])
      sc.app1_pretrain_decisions = r.count(a["app1_pretrain_decisions"], "apps.app1_pretrain_decisions");
  }

  if (const auto v = root["validation"]) {
    r.only_keys(v, "validation", {"enabled", "th_t", "th_p", "window", "percentile_low", "percentile_high", "forecaster"});
    if (v["enabled"]) sc.validation_enabled = r.boolean(v["enabled"], "validation.enabled");
    if (v["th_t"]) sc.validation.th_t = r.number(v["th_t"], "validation.th_t");
    if (v["th_p"]) sc.validation.th_p = r.number(v["th_p"], "validation.th_p");
    if (v["window"]) sc.validation.window = r.count(v["window"], "validation.window");
    if (v["percentile_low"]) sc.validation.percentile_low = r.number(v["percentile_low"], "validation.percentile_low");
    if (v["percentile_high"])
      sc.validation.percentile_high = r.number(v["percentile_high"], "validation.percentile_high");
    if (v["forecaster"]) sc.forecaster = r.text(v["forecaster"], "validation.forecaster");
  }

  if (const auto h = root["hrl"]) {
    r.only_keys(h, "hrl",
                {"tau", "attention_epsilon", "theta", "scorer", "penalty_weight", "exploration", "online_learning", "switch_margin",
                 "pretrain_episodes", "qtable", "alpha", "gamma"});
    if (h["tau"]) sc.tau = r.count(h["tau"], "hrl.tau");
    if (h["attention_epsilon"]) sc.attention.epsilon = r.number(h["attention_epsilon"], "hrl.attention_epsilon");
    if (const auto th = h["theta"]) {
      const auto v = r.numbers(th, "hrl.theta");
      if (v.size() != hrl::kNumFeatures) r.fail(th, "hrl.theta", fmt::format("expected {} weights", hrl::kNumFeatures));
      hrl::Theta t{};
      std::copy(v.begin(), v.end(), t.begin());
      sc.attention.theta = t;
    }
    if (const auto sp = h["scorer"]) {
      const auto p = sc.resolve(r.text(sp, "hrl.scorer"));
      std::ifstream in(p);
      if (!in) r.fail(sp, "hrl.scorer", "cannot open " + p.string());
      try {
        sc.attention = hrl::scorer_from_json(nlohmann::json::parse(in));
      } catch (const nlohmann::json::exception& e) {
        r.fail(sp, "hrl.scorer", e.what());
      }
    }
    if (h["penalty_weight"]) sc.penalty_weight = r.number(h["penalty_weight"], "hrl.penalty_weight");
    if (h["exploration"]) sc.exploration = r.number(h["exploration"], "hrl.exploration");
    if (h["online_learning"]) sc.online_learning = r.boolean(h["online_learning"], "hrl.online_learning");
    if (h["switch_margin"]) sc.switch_margin = r.number(h["switch_margin"], "hrl.switch_margin");
    if (h["pretrain_episodes"]) sc.pretrain_episodes = r.count(h["pretrain_episodes"], "hrl.pretrain_episodes");
    if (h["qtable"]) sc.qtable_path = sc.resolve(r.text(h["qtable"], "hrl.qtable"));
    if (h["alpha"]) sc.learning.alpha = r.number(h["alpha"], "hrl.alpha");
    if (h["gamma"]) sc.learning.gamma = r.number(h["gamma"], "hrl.gamma");
  }

  if (const auto l = root["llm"]) {
    r.only_keys(l, "llm", {"endpoint", "timeout_ms", "examples"});
    if (l["endpoint"]) sc.llm_endpoint = r.text(l["endpoint"], "llm.endpoint");
    if (l["timeout_ms"]) sc.llm_timeout_ms = static_cast<int>(r.count(l["timeout_ms"], "llm.timeout_ms"));
    if (l["examples"]) sc.examples_path = sc.resolve(r.text(l["examples"], "llm.examples"));
  }

  if (const auto in = root["intents"]) {
    if (!in.IsSequence()) r.fail(in, "intents", "expected a list");
    for (const auto& x : in) {
      r.only_keys(x, "intents", {"at_tick", "text"});
      if (!x["at_tick"] || !x["text"]) r.fail(x, "intents", "each intent needs at_tick and text");
      sc.intents.push_back({r.count(x["at_tick"], "intents.at_tick"), r.text(x["text"], "intents.text")});
    }
  }

  try {
    sc.sim.validate();
    if (sc.validation_enabled && !(sc.validation.th_t > 0.0))
      throw ConfigurationError("validation is enabled but validation.th_t and validation.th_p are not set");
    if (sc.validation_enabled) sc.validation.validate();
    sc.attention.validate();
    validation::ForecasterRegistry::instance().make(sc.forecaster);
  } catch (const ConfigurationError& e) {
    throw ConfigurationError(origin + ": " + e.what());
  }
  if (sc.tau < 1) throw ConfigurationError(origin + ": hrl.tau must be >= 1");
  if (sc.tactical_period < 1) throw ConfigurationError(origin + ": apps.tactical_period must be >= 1");
  if (sc.penalty_weight < 0.0) throw ConfigurationError(origin + ": hrl.penalty_weight must be non-negative");
  if (sc.exploration < 0.0 || sc.exploration > 1.0) throw ConfigurationError(origin + ": hrl.exploration must be in [0, 1]");
  if (sc.switch_margin < 0.0) throw ConfigurationError(origin + ": hrl.switch_margin must be non-negative");
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open scenario " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.string(), path.parent_path());
}

}  // namespace intentran::service
