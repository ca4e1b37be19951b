#pragma once

#include <algorithm>
#include <cctype>
#include <json.hpp>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include "intentran/core/errors.hpp"
#include "intentran/core/types.hpp"

namespace intentran::intent {

struct IntentExample {
  std::string intent;
  KpiKind type{};
  std::vector<std::string> keywords;
};

enum class IntentSource { llm, fallback };

constexpr std::string_view to_string(IntentSource s) { return s == IntentSource::llm ? "llm" : "fallback"; }

struct ProcessedIntent {
  std::string raw;
  KpiKind type{};
  std::vector<std::string> keywords;
  double magnitude_pct{};
  IntentSource source{IntentSource::fallback};
  /// Traffic classes the intent is scoped to; empty means every class.
  std::vector<TrafficKind> target_classes;

  /// True when the requested change moves the KPI in its "better" direction.
  bool is_improvement() const { return higher_is_better(type) ? magnitude_pct > 0 : magnitude_pct < 0; }
};

inline nlohmann::json to_json(const ProcessedIntent& p) {
  nlohmann::json j{{"raw", p.raw},
                   {"type", std::string(to_string(p.type))},
                   {"keywords", p.keywords},
                   {"magnitude_pct", p.magnitude_pct},
                   {"source", std::string(to_string(p.source))}};
  auto& t = j["target_classes"] = nlohmann::json::array();
  for (auto c : p.target_classes) t.push_back(std::string(to_string(c)));
  return j;
}

inline ProcessedIntent processed_from_json(const nlohmann::json& j) {
  ProcessedIntent p;
  p.raw = j.at("raw").get<std::string>();
  auto t = parse_kpi(j.at("type").get<std::string>());
  if (!t) throw ParseFailure("unknown intent type in record");
  p.type = *t;
  p.keywords = j.at("keywords").get<std::vector<std::string>>();
  p.magnitude_pct = j.at("magnitude_pct").get<double>();
  p.source = j.value("source", "fallback") == "llm" ? IntentSource::llm : IntentSource::fallback;
  for (const auto& c : j.value("target_classes", nlohmann::json::array())) {
    auto k = parse_traffic_kind(c.get<std::string>());
    if (!k) throw ParseFailure("unknown traffic class in record");
    p.target_classes.push_back(*k);
  }
  return p;
}

inline std::string join(const std::vector<std::string>& xs, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

inline std::string create_prompt(std::string_view intent, const std::vector<IntentExample>& examples) {
  if (examples.empty()) throw ConfigurationError("intent example store is empty");
  if (intent.empty()) throw ContractViolation("intent text is empty");
  std::string p;
  for (const auto& e : examples) {
    p += "Example:\n";
    p += "Intent: " + e.intent + "\n";
    p += "Type: " + std::string(to_string(e.type)) + "\n";
    p += "Keywords: " + join(e.keywords, ", ") + "\n";
  }
  p += "New Intent: ";
  p += intent;
  p += "\nType, Keywords";
  return p;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

inline std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::vector<std::string> split_keywords(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(',', start);
    if (end == std::string_view::npos) end = s.size();
    auto k = trim(s.substr(start, end - start));
    if (!k.empty()) out.push_back(std::move(k));
    start = end + 1;
  }
  return out;
}

}  // namespace detail

struct ParsedResponse {
  KpiKind type;
  std::vector<std::string> keywords;
};

inline ParsedResponse parse_response(std::string_view response) {
  std::optional<std::string> type, keywords;
  std::size_t pos = 0;
  while (pos <= response.size() && !(type && keywords)) {
    auto end = response.find('\n', pos);
    if (end == std::string_view::npos) end = response.size();
    const auto line = detail::trim(response.substr(pos, end - pos));
    if (!type && line.rfind("Type:", 0) == 0) type = detail::trim(std::string_view(line).substr(5));
    else if (!keywords && line.rfind("Keywords:", 0) == 0) keywords = detail::trim(std::string_view(line).substr(9));
    pos = end + 1;
  }
  if (!type || !keywords) {
    spdlog::warn("unparseable back-end response: {}", std::string(response.substr(0, 200)));
    throw ParseFailure("response lacks a Type: or Keywords: field");
  }
  auto k = parse_kpi(*type);
  if (!k) {
    spdlog::warn("unknown intent type label in response: {}", *type);
    throw ParseFailure("unknown intent type label '" + *type + "'");
  }
  auto kw = detail::split_keywords(*keywords);
  if (kw.empty()) throw ParseFailure("response has an empty keyword list");
  return {*k, std::move(kw)};
}

/// Result of the deterministic grammar before it is checked for completeness.
struct GrammarMatch {
  std::optional<KpiKind> metric;
  std::string metric_phrase;
  std::optional<int> direction;  // +1 raise, -1 lower
  std::optional<double> magnitude;
  std::vector<TrafficKind> classes;
};

inline GrammarMatch match_grammar(std::string_view text) {
  GrammarMatch m;
  const std::string s = detail::lower_ascii(text);
  auto has_word = [&](std::string_view w) {
    std::size_t at = 0;
    while ((at = s.find(w, at)) != std::string::npos) {
      const bool left = at == 0 || !std::isalnum(static_cast<unsigned char>(s[at - 1]));
      const std::size_t r = at + w.size();
      const bool right = r >= s.size() || !std::isalpha(static_cast<unsigned char>(s[r]));
      if (left && right) return true;
      at = r;
    }
    return false;
  };
  // Energy consumption phrases ask for the inverse of energy efficiency.
  bool inverted = false;
  if (has_word("energy efficiency") || has_word("energy-efficiency") || has_word("energy efficient")) {
    m.metric = KpiKind::energy_efficiency;
    m.metric_phrase = "energy efficiency";
  } else if (has_word("energy consumption") || has_word("power consumption")) {
    m.metric = KpiKind::energy_efficiency;
    m.metric_phrase = "energy consumption";
    inverted = true;
  } else if (has_word("throughput") || has_word("data rate") || has_word("capacity")) {
    m.metric = KpiKind::throughput;
    m.metric_phrase = "throughput";
  } else if (has_word("delay") || has_word("latency")) {
    m.metric = KpiKind::delay;
    m.metric_phrase = has_word("delay") ? "delay" : "latency";
  }
  for (auto w : {"increase", "boost", "improve", "raise", "enhance", "maximize", "maximise"})
    if (has_word(w)) m.direction = +1;
  for (auto w : {"reduce", "decrease", "lower", "cut", "minimize", "minimise"})
    if (has_word(w) && !m.direction) m.direction = -1;
  if (inverted && m.direction) m.direction = -*m.direction;
  // "improve delay" means lowering it.
  if (m.metric == KpiKind::delay && m.direction == +1 && (has_word("improve") || has_word("enhance")) &&
      !has_word("increase") && !has_word("raise") && !has_word("boost"))
    m.direction = -1;

  static const std::regex by_pct(R"(by\s+(\d+(?:\.\d+)?)\s*%)");
  std::smatch pm;
  if (std::regex_search(s, pm, by_pct)) m.magnitude = std::stod(pm[1].str());

  for (auto k : kAllTrafficKinds)
    if (has_word(to_string(k))) m.classes.push_back(k);
  return m;
}

inline double signed_magnitude(KpiKind metric, std::optional<int> direction, double magnitude) {
  const int dir = direction ? *direction : (higher_is_better(metric) ? +1 : -1);
  return dir * magnitude;
}

inline ProcessedIntent fallback_parse(std::string_view text) {
  const auto m = match_grammar(text);
  if (!m.metric) throw UnintelligibleIntent("no recognised metric in intent '" + std::string(text) + "'");
  if (!m.magnitude) throw UnintelligibleIntent("no 'by N%' magnitude in intent '" + std::string(text) + "'");
  if (!(*m.magnitude > 0.0)) throw UnintelligibleIntent("intent asks for a zero change");
  ProcessedIntent p;
  p.raw = std::string(text);
  p.type = *m.metric;
  p.magnitude_pct = signed_magnitude(*m.metric, m.direction, *m.magnitude);
  auto pct = std::to_string(*m.magnitude);
  pct.erase(pct.find_last_not_of('0') + 1);
  if (pct.back() == '.') pct.pop_back();
  p.keywords = {m.metric_phrase, pct + "%"};
  p.source = IntentSource::fallback;
  p.target_classes = m.classes;
  return p;
}

/// Combines an LLM classification with the magnitude and direction grammar.
inline ProcessedIntent from_llm(std::string_view text, const ParsedResponse& r) {
  auto m = match_grammar(text);
  std::optional<double> mag = m.magnitude;
  if (!mag) {
    static const std::regex kw_pct(R"(^\s*(\d+(?:\.\d+)?)\s*%\s*$)");
    for (const auto& k : r.keywords) {
      std::smatch km;
      if (std::regex_match(k, km, kw_pct)) {
        mag = std::stod(km[1].str());
        break;
      }
    }
  }
  if (!mag || !(*mag > 0.0)) throw UnintelligibleIntent("no usable percentage in intent '" + std::string(text) + "'");
  if (m.metric != r.type) m.direction.reset();  // direction words may refer to a different metric
  ProcessedIntent p;
  p.raw = std::string(text);
  p.type = r.type;
  p.keywords = r.keywords;
  p.magnitude_pct = signed_magnitude(r.type, m.direction, *mag);
  p.source = IntentSource::llm;
  p.target_classes = m.classes;
  return p;
}

inline std::vector<IntentExample> load_examples(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw ConfigurationError("example store " + path + ": " + e.what());
  }
  const auto list = root["examples"] ? root["examples"] : root;
  if (!list.IsSequence()) throw ConfigurationError("example store " + path + ": expected a list of examples");
  std::vector<IntentExample> out;
  for (const auto& n : list) {
    const auto line = std::to_string(n.Mark().line + 1);
    if (!n["intent"] || !n["type"] || !n["keywords"])
      throw ConfigurationError(path + ":" + line + ": example needs intent, type and keywords");
    IntentExample e;
    e.intent = n["intent"].as<std::string>();
    auto t = parse_kpi(n["type"].as<std::string>());
    if (!t) throw ConfigurationError(path + ":" + line + ": unknown type '" + n["type"].as<std::string>() + "'");
    e.type = *t;
    e.keywords = n["keywords"].as<std::vector<std::string>>();
    if (e.keywords.empty()) throw ConfigurationError(path + ":" + line + ": keywords must be non-empty");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace intentran::intent
