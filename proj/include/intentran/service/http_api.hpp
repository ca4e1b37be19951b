#pragma once

// Eigen must precede httplib: <resolv.h> defines a `_res` macro that breaks Eigen's product kernels.
#include "intentran/service/service.hpp"

#include <httplib.h>

#include <json.hpp>
#include <string>

namespace intentran::service {

inline nlohmann::json row_json(const KpiRow& r) {
  return {{"tick", r.tick},
          {"slot", r.slot},
          {"throughput_bps", r.kpi.throughput_bps},
          {"mean_delay_s", r.kpi.mean_delay_s},
          {"ee_bits_per_joule", r.kpi.energy_efficiency},
          {"energy_j", r.kpi.total_energy_j},
          {"csv", r.csv}};
}

inline nlohmann::json slice_json(const KpiSlice& s) {
  nlohmann::json j{{"from", s.from}, {"to", s.to}, {"clipped", s.clipped}};
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& r : s.rows) rows.push_back(row_json(r));
  auto& tl = j["timeline"] = nlohmann::json::array();
  for (const auto& i : s.timeline)
    tl.push_back({{"app", std::string(apps::to_string(i.app))},
                  {"from", i.from},
                  {"to", i.to ? nlohmann::json(*i.to) : nlohmann::json(nullptr)}});
  return j;
}

/// JSON API under /api consumed by the operator console.
///
///   GET  /api/health
///   GET  /api/runs                      list of run statuses
///   POST /api/runs                      {scenario | scenario_yaml, seed?, ticks?, validation?, start?}
///   GET  /api/runs/{id}                 status
///   POST /api/runs/{id}/control         {action: start|pause|step|stop, ticks?}
///   POST /api/runs/{id}/intents         {text, classes?} -> 202 {intent}
///   POST /api/runs/{id}/what-if         {text, classes?} -> verdict preview
///   GET  /api/runs/{id}/kpis?from&to    KPI rows for ticks [from, to) plus app intervals
///   GET  /api/runs/{id}/events?after    pipeline events with id > after
///   GET  /api/runs/{id}/stream          server-sent events; honours Last-Event-ID
///                                       ?kpis=0 drops KPI rows, ?rows=N replays rows from index N
class HttpApi {
 public:
  explicit HttpApi(RunService& svc) : svc_(svc) { routes(); }

  httplib::Server& server() { return srv_; }

  int bind_any(const std::string& host = "127.0.0.1") { return srv_.bind_to_any_port(host); }
  bool bind(const std::string& host, int port) { return srv_.bind_to_port(host, port); }
  bool listen_after_bind() { return srv_.listen_after_bind(); }
  void stop() { srv_.stop(); }
  void wait_until_ready() { srv_.wait_until_ready(); }

 private:
  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <class F>
  void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const NotFound& e) {
      reply(res, 404, {{"error", "NotFound"}, {"message", e.what()}});
    } catch (const ServiceUnavailable& e) {
      reply(res, 409, {{"error", "ServiceUnavailable"}, {"message", e.what()}});
    } catch (const ConfigurationError& e) {
      reply(res, 400, {{"error", "ConfigurationError"}, {"message", e.what()}});
    } catch (const nlohmann::json::exception& e) {
      reply(res, 400, {{"error", "BadRequest"}, {"message", e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", "Internal"}, {"message", e.what()}});
    }
  }

  static nlohmann::json body_of(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    auto j = nlohmann::json::parse(req.body);
    if (!j.is_object()) throw ConfigurationError("request body must be a JSON object");
    return j;
  }

  static std::string text_of(const nlohmann::json& b) {
    if (!b.contains("text") || !b["text"].is_string()) throw ConfigurationError("body needs a 'text' string");
    return b["text"].get<std::string>();
  }

  // optional "classes": ["video", ...] overriding the parsed target classes
  static std::vector<TrafficKind> classes_of(const nlohmann::json& b) {
    std::vector<TrafficKind> out;
    if (!b.contains("classes")) return out;
    if (!b["classes"].is_array()) throw ConfigurationError("'classes' must be an array of traffic class names");
    for (const auto& c : b["classes"]) {
      const auto k = c.is_string() ? parse_traffic_kind(c.get<std::string>()) : std::nullopt;
      if (!k) throw ConfigurationError("unknown traffic class " + c.dump() + " (video, gaming, voice, urllc)");
      if (std::find(out.begin(), out.end(), *k) == out.end()) out.push_back(*k);
    }
    return out;
  }

  static std::uint64_t param(const httplib::Request& req, const char* name, std::uint64_t def) {
    if (!req.has_param(name)) return def;
    try {
      return std::stoull(req.get_param_value(name));
    } catch (const std::exception&) {
      throw ConfigurationError(std::string("query parameter '") + name + "' must be a non-negative integer");
    }
  }

  void routes() {
    srv_.Get("/api/health", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"ok", true}}); });

    srv_.Get("/api/runs", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        auto out = nlohmann::json::array();
        for (const auto& s : svc_.list()) out.push_back(s.to_json());
        reply(res, 200, out);
      });
    });

    srv_.Post("/api/runs", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto b = body_of(req);
        CreateRunRequest c;
        if (b.contains("scenario")) c.scenario_path = b["scenario"].get<std::string>();
        if (b.contains("scenario_yaml")) c.scenario_text = b["scenario_yaml"].get<std::string>();
        if (b.contains("seed")) c.seed = b["seed"].get<std::uint64_t>();
        if (b.contains("ticks")) c.ticks = b["ticks"].get<std::uint64_t>();
        if (b.contains("validation")) c.validation = b["validation"].get<bool>();
        c.start = b.value("start", false);
        reply(res, 201, svc_.create(c)->status().to_json());
      });
    });

    srv_.Get(R"(/api/runs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, svc_.get(req.matches[1])->status().to_json()); });
    });

    srv_.Post(R"(/api/runs/([^/]+)/control)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto run = svc_.get(req.matches[1]);
        const auto b = body_of(req);
        const auto action = b.value("action", std::string{});
        if (action == "start") run->start();
        else if (action == "pause") run->pause();
        else if (action == "stop") run->stop();
        else if (action == "step") run->step(b.value("ticks", std::uint64_t{1}));
        else throw ConfigurationError("action must be start, pause, step or stop");
        reply(res, 202, run->status().to_json());
      });
    });

    srv_.Post(R"(/api/runs/([^/]+)/intents)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto run = svc_.get(req.matches[1]);
        const auto b = body_of(req);
        const auto id = run->submit(text_of(b), classes_of(b));
        reply(res, 202, {{"intent", id}, {"run", run->status().id}});
      });
    });

    srv_.Post(R"(/api/runs/([^/]+)/what-if)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto run = svc_.get(req.matches[1]);
        const auto b = body_of(req);
        reply(res, 200, run->what_if(text_of(b), classes_of(b)).to_json());
      });
    });

    srv_.Get(R"(/api/runs/([^/]+)/kpis)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto run = svc_.get(req.matches[1]);
        std::optional<std::uint64_t> to;
        if (req.has_param("to")) to = param(req, "to", 0);
        reply(res, 200, slice_json(run->journal()->kpis(param(req, "from", 0), to)));
      });
    });

    srv_.Get(R"(/api/runs/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto run = svc_.get(req.matches[1]);
        auto out = nlohmann::json::array();
        for (const auto& e : run->journal()->events_after(param(req, "after", 0))) out.push_back(e.to_json());
        reply(res, 200, out);
      });
    });

    srv_.Get(R"(/api/runs/([^/]+)/stream)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto journal = svc_.get(req.matches[1])->journal();
        std::uint64_t last = param(req, "after", 0);
        if (req.has_header("Last-Event-ID")) {
          try {
            last = std::stoull(req.get_header_value("Last-Event-ID"));
          } catch (const std::exception&) {
            throw ConfigurationError("Last-Event-ID must be an integer");
          }
        }
        const bool with_kpis = req.get_param_value("kpis") != "0";
        auto row = std::make_shared<std::size_t>(param(req, "rows", journal->rows()));
        auto cursor = std::make_shared<std::uint64_t>(last);
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider("text/event-stream", [journal, row, cursor, with_kpis](std::size_t, httplib::DataSink& sink) {
          journal->wait_for_update(*cursor, *row, std::chrono::milliseconds(500));
          bool wrote = false;
          for (const auto& e : journal->events_after(*cursor)) {
            const auto msg = "id: " + std::to_string(e.id) + "\nevent: pipeline\ndata: " + e.line() + "\n\n";
            if (!sink.write(msg.data(), msg.size())) return false;
            *cursor = e.id;
            wrote = true;
          }
          for (const auto& r : journal->rows_from(*row)) {
            if (with_kpis) {
              const auto msg = "event: kpi\ndata: " + row_json(r).dump() + "\n\n";
              if (!sink.write(msg.data(), msg.size())) return false;
              wrote = true;
            }
            ++*row;
          }
          if (journal->closed() && journal->events_after(*cursor).empty() && journal->rows_from(*row).empty()) {
            const std::string end = "event: end\ndata: {}\n\n";
            sink.write(end.data(), end.size());
            sink.done();
            return true;
          }
          if (!sink.is_writable()) return false;
          if (wrote) return true;
          const std::string ping = ": keep-alive\n\n";
          return sink.write(ping.data(), ping.size());
        });
      });
    });
  }

  RunService& svc_;
  httplib::Server srv_;
};

}  // namespace intentran::service
