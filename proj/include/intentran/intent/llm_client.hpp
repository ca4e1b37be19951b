#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <optional>
#include <regex>
#include <semaphore>
#include <string>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "intentran/intent/intent.hpp"

namespace intentran::intent {

struct LlmBackendConfig {
  /// Base URL, e.g. "http://127.0.0.1:8081/complete".
  std::string endpoint;
  std::chrono::milliseconds timeout{5000};
  std::size_t max_response_bytes{4096};

  /// Reads INTENTRAN_LLM_ENDPOINT; nullopt when unset or empty.
  static std::optional<LlmBackendConfig> from_env() {
    const char* e = std::getenv("INTENTRAN_LLM_ENDPOINT");
    if (!e || !*e) return std::nullopt;
    LlmBackendConfig c;
    c.endpoint = e;
    return c;
  }
};

/// Text-completion client: POST prompt as text/plain, completion back as the body.
class LlmClient {
 public:
  static constexpr std::ptrdiff_t kMaxInFlight = 4;

  explicit LlmClient(LlmBackendConfig cfg) : cfg_(std::move(cfg)) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(cfg_.endpoint, m, url)) throw ConfigurationError("LLM endpoint is not a URL: " + cfg_.endpoint);
    if (m[1].str().rfind("https", 0) == 0) throw ConfigurationError("LLM endpoint must be plain http");
    host_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
  }

  const LlmBackendConfig& config() const { return cfg_; }

  std::string query(const std::string& prompt) {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<kMaxInFlight>& s;
      ~Release() { s.release(); }
    } release{slots_};

    const auto id = "llm-" + std::to_string(++counter_);
    spdlog::debug("[{}] POST {}{} ({} bytes)", id, host_, path_, prompt.size());
    httplib::Client cli(host_);
    const auto secs = cfg_.timeout.count() / 1000;
    const auto usecs = (cfg_.timeout.count() % 1000) * 1000;
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);

    std::string body;
    bool oversize = false;
    httplib::Request req;
    req.method = "POST";
    req.path = path_;
    req.headers = {{"X-Correlation-Id", id}, {"Content-Type", "text/plain"}};
    req.body = prompt;
    req.content_receiver = [&](const char* data, std::size_t len, std::uint64_t, std::uint64_t) {
      if (body.size() + len > cfg_.max_response_bytes) {
        oversize = true;
        return false;
      }
      body.append(data, len);
      return true;
    };
    auto res = cli.send(req);
    if (oversize) {
      spdlog::warn("[{}] response exceeds {} bytes", id, cfg_.max_response_bytes);
      throw BackendMisbehavior("language-model response exceeds " + std::to_string(cfg_.max_response_bytes) + " bytes");
    }
    if (!res) {
      spdlog::warn("[{}] transport failure: {}", id, httplib::to_string(res.error()));
      throw BackendUnavailable("language-model back-end unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
      spdlog::warn("[{}] status {}", id, res->status);
      throw BackendUnavailable("language-model back-end returned status " + std::to_string(res->status));
    }
    spdlog::debug("[{}] response: {}", id, body);
    return body;
  }

 private:
  LlmBackendConfig cfg_;
  std::string host_;
  std::string path_;
  std::counting_semaphore<kMaxInFlight> slots_{kMaxInFlight};
  std::atomic<std::uint64_t> counter_{0};
};

/// Algorithm entry point: LLM path when a client is given and its answer
/// parses, deterministic grammar otherwise.
inline ProcessedIntent classify_and_extract(std::string_view text, const std::vector<IntentExample>& examples,
                                            LlmClient* backend = nullptr) {
  if (detail::trim(text).empty()) throw UnintelligibleIntent("intent text is empty");
  if (backend && !examples.empty()) {
    try {
      const auto response = backend->query(create_prompt(text, examples));
      return from_llm(text, parse_response(response));
    } catch (const BackendUnavailable& e) {
      spdlog::info("falling back to grammar parser: {}", e.what());
    } catch (const BackendMisbehavior& e) {
      spdlog::info("falling back to grammar parser: {}", e.what());
    } catch (const ParseFailure& e) {
      spdlog::info("falling back to grammar parser: {}", e.what());
    } catch (const UnintelligibleIntent& e) {
      spdlog::info("falling back to grammar parser: {}", e.what());
    }
  }
  return fallback_parse(text);
}

}  // namespace intentran::intent
