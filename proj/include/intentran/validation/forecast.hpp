#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "intentran/core/errors.hpp"

namespace intentran::validation {

struct ForecastResult {
  double predicted_bps{};
  std::string model_id;
  std::size_t history_window{};
};

/// Next-interval traffic volume predictor over a per-tick history.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string id() const = 0;
  virtual std::size_t min_window() const = 0;
  virtual ForecastResult predict(const std::vector<double>& history) const = 0;

 protected:
  void require(const std::vector<double>& history) const {
    if (history.size() < min_window())
      throw InsufficientHistory(id() + " needs " + std::to_string(min_window()) + " ticks of history, have " +
                                std::to_string(history.size()));
  }
};

/// Predicts the value observed one season ago.
class SeasonalNaive final : public Forecaster {
 public:
  explicit SeasonalNaive(std::size_t season = 24) : season_(season) {
    if (season_ < 1) throw ConfigurationError("seasonal-naive season must be >= 1");
  }
  std::string id() const override { return "seasonal_naive/" + std::to_string(season_); }
  std::size_t min_window() const override { return season_; }
  ForecastResult predict(const std::vector<double>& h) const override {
    require(h);
    return {std::max(0.0, h[h.size() - season_]), id(), season_};
  }

 private:
  std::size_t season_;
};

/// Mean of the last `window` ticks.
class WindowMean final : public Forecaster {
 public:
  explicit WindowMean(std::size_t window = 24) : window_(window) {
    if (window_ < 1) throw ConfigurationError("window-mean window must be >= 1");
  }
  std::string id() const override { return "mean/" + std::to_string(window_); }
  std::size_t min_window() const override { return window_; }
  ForecastResult predict(const std::vector<double>& h) const override {
    require(h);
    const double s = std::accumulate(h.end() - static_cast<long>(window_), h.end(), 0.0);
    return {std::max(0.0, s / static_cast<double>(window_)), id(), window_};
  }

 private:
  std::size_t window_;
};

/// Name → factory; the size argument is the season or window length.
class ForecasterRegistry {
 public:
  using Factory = std::function<std::unique_ptr<Forecaster>(std::size_t)>;

  static ForecasterRegistry& instance() {
    static ForecasterRegistry r;
    return r;
  }

  void add(const std::string& name, Factory f) { factories_[name] = std::move(f); }

  std::unique_ptr<Forecaster> make(const std::string& name, std::size_t size = 24) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) throw ConfigurationError("unknown forecaster '" + name + "'");
    return it->second(size);
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : factories_) out.push_back(k);
    return out;
  }

 private:
  ForecasterRegistry() {
    add("seasonal_naive", [](std::size_t s) { return std::make_unique<SeasonalNaive>(s); });
    add("mean", [](std::size_t s) { return std::make_unique<WindowMean>(s); });
  }
  std::map<std::string, Factory> factories_;
};

/// Append-only `tick,offered_bps` history file.
inline void append_history(const std::filesystem::path& file, std::uint64_t tick, double offered_bps) {
  const bool fresh = !std::filesystem::exists(file) || std::filesystem::file_size(file) == 0;
  std::ofstream out(file, std::ios::app);
  if (!out) throw ConfigurationError("cannot open history file " + file.string());
  if (fresh) out << "tick,offered_bps\n";
  out << tick << ',' << offered_bps << '\n';
}

inline std::vector<double> load_history(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigurationError("cannot open history file " + file.string());
  std::string line;
  std::vector<double> out;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || (n == 1 && line.rfind("tick", 0) == 0)) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ConfigurationError(file.string() + ":" + std::to_string(n) + ": expected 'tick,offered_bps'");
    try {
      out.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw ConfigurationError(file.string() + ":" + std::to_string(n) + ": bad number");
    }
  }
  return out;
}

}  // namespace intentran::validation
