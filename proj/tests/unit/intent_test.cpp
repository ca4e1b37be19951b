#include <gtest/gtest.h>

#include <chrono>
#include <random>
#include <thread>

#include "intentran/intent/llm_client.hpp"

using namespace intentran;
using namespace intentran::intent;

namespace {

std::vector<IntentExample> shipped() { return load_examples(std::string(INTENTRAN_SOURCE_DIR) + "/data/intent_examples.yaml"); }

// Minimal HTTP back-end on an ephemeral port.
class StubServer {
 public:
  explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> h) {
    srv_.Post("/complete", std::move(h));
    port_ = srv_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { srv_.listen_after_bind(); });
    srv_.wait_until_ready();
  }
  ~StubServer() {
    srv_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/complete"; }

 private:
  httplib::Server srv_;
  int port_{};
  std::thread thread_;
};

std::string last_intent(const std::string& prompt) {
  const auto at = prompt.rfind("New Intent: ");
  const auto end = prompt.find('\n', at);
  return prompt.substr(at + 12, end - at - 12);
}

}  // namespace

TEST(Prompt, SingleExampleLayout) {
  std::vector<IntentExample> ex{{"Boost system throughput by 15%", KpiKind::throughput, {"throughput", "15%"}}};
  const auto p = create_prompt("Reduce network delay by 13%", ex);
  EXPECT_EQ(p,
            "Example:\nIntent: Boost system throughput by 15%\nType: throughput\nKeywords: throughput, 15%\n"
            "New Intent: Reduce network delay by 13%\nType, Keywords");
}

TEST(Prompt, EmptyStoreIsConfigurationError) {
  EXPECT_THROW(create_prompt("Boost throughput by 5%", {}), ConfigurationError);
}

TEST(Prompt, CountAndOrderPreservedAndDeterministic) {
  auto ex = shipped();
  ex.resize(3);
  const auto p = create_prompt("Boost throughput by 5%", ex);
  std::size_t n = 0;
  for (std::size_t at = 0; (at = p.find("Example:", at)) != std::string::npos; ++at) ++n;
  EXPECT_EQ(n, 3u);
  EXPECT_LT(p.find(ex[0].intent), p.find(ex[1].intent));
  EXPECT_LT(p.find(ex[1].intent), p.find(ex[2].intent));
  EXPECT_EQ(p, create_prompt("Boost throughput by 5%", ex));
}

TEST(ParseResponse, Fields) {
  auto r = parse_response("Type: energy_efficiency\nKeywords: energy efficiency, 10%");
  EXPECT_EQ(r.type, KpiKind::energy_efficiency);
  EXPECT_EQ(r.keywords, (std::vector<std::string>{"energy efficiency", "10%"}));
  EXPECT_THROW(parse_response("gibberish"), ParseFailure);
  EXPECT_THROW(parse_response("Type: latency\nKeywords: delay"), ParseFailure);
  EXPECT_THROW(parse_response("Type: delay\n"), ParseFailure);
}

TEST(Fallback, PaperIntents) {
  auto a = classify_and_extract("Increase overall energy efficiency by 10%", {});
  EXPECT_EQ(a.type, KpiKind::energy_efficiency);
  EXPECT_DOUBLE_EQ(a.magnitude_pct, 10.0);
  EXPECT_EQ(a.source, IntentSource::fallback);
  auto b = classify_and_extract("Boost system throughput by 15%", {});
  EXPECT_EQ(b.type, KpiKind::throughput);
  EXPECT_DOUBLE_EQ(b.magnitude_pct, 15.0);
  auto c = classify_and_extract("Reduce network delay by 13%", {});
  EXPECT_EQ(c.type, KpiKind::delay);
  EXPECT_DOUBLE_EQ(c.magnitude_pct, -13.0);
  EXPECT_TRUE(c.is_improvement());
  EXPECT_THROW(classify_and_extract("make the network nice", {}), UnintelligibleIntent);
  EXPECT_THROW(classify_and_extract("Boost throughput by 0%", {}), UnintelligibleIntent);
  EXPECT_THROW(classify_and_extract("", {}), UnintelligibleIntent);
}

TEST(Fallback, ClassesAndSynonyms) {
  auto p = fallback_parse("Lower latency for gaming users by 7.5%");
  EXPECT_EQ(p.type, KpiKind::delay);
  EXPECT_DOUBLE_EQ(p.magnitude_pct, -7.5);
  ASSERT_EQ(p.target_classes.size(), 1u);
  EXPECT_EQ(p.target_classes[0], TrafficKind::gaming);
  auto q = fallback_parse("Reduce energy consumption by 5%");
  EXPECT_EQ(q.type, KpiKind::energy_efficiency);
  EXPECT_GT(q.magnitude_pct, 0.0);
}

TEST(Fallback, TotalOnArbitraryBytes) {
  std::mt19937_64 g(42);
  for (int i = 0; i < 2000; ++i) {
    std::string s(g() % 64, '\0');
    for (auto& c : s) c = static_cast<char>(g() & 0xFF);
    if (i % 3 == 0) s += " throughput by 12%";
    try {
      auto p = fallback_parse(s);
      EXPECT_NE(p.magnitude_pct, 0.0);
      EXPECT_FALSE(p.keywords.empty());
    } catch (const UnintelligibleIntent&) {
    }
  }
}

TEST(ExampleStore, RoundTripBothPaths) {
  const auto ex = shipped();
  ASSERT_EQ(ex.size(), 6u);
  StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
    const auto intent = last_intent(req.body);
    for (const auto& e : ex)
      if (e.intent == intent) {
        res.set_content("Type: " + std::string(to_string(e.type)) + "\nKeywords: " + join(e.keywords, ", "), "text/plain");
        return;
      }
    res.status = 404;
  });
  LlmClient client(LlmBackendConfig{stub.url()});
  for (const auto& e : ex) {
    EXPECT_EQ(classify_and_extract(e.intent, ex).type, e.type) << e.intent;
    auto llm = classify_and_extract(e.intent, ex, &client);
    EXPECT_EQ(llm.type, e.type) << e.intent;
    EXPECT_EQ(llm.source, IntentSource::llm);
    EXPECT_EQ(llm.magnitude_pct, fallback_parse(e.intent).magnitude_pct);
  }
}

TEST(LlmClient, EchoStubReturnsVerbatim) {
  const std::string answer = "Type: throughput\nKeywords: throughput, 15%";
  StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
    EXPECT_EQ(req.get_header_value("Content-Type"), "text/plain");
    EXPECT_FALSE(req.get_header_value("X-Correlation-Id").empty());
    res.set_content(answer, "text/plain");
  });
  LlmClient client(LlmBackendConfig{stub.url()});
  EXPECT_EQ(client.query("anything"), answer);
}

TEST(LlmClient, UnreachableWithinTimeout) {
  LlmBackendConfig cfg{"http://127.0.0.1:1/complete", std::chrono::milliseconds(300)};
  LlmClient client(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_THROW(client.query("x"), BackendUnavailable);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(2));
}

TEST(LlmClient, OversizeResponseRejected) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    res.set_content(std::string(10 * 1024 * 1024, 'a'), "text/plain");
  });
  LlmBackendConfig cfg{stub.url()};
  cfg.max_response_bytes = 4096;
  LlmClient client(cfg);
  EXPECT_THROW(client.query("x"), BackendMisbehavior);
}

TEST(LlmClient, SourceIsFallbackWhenResponseUnusable) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) { res.set_content("no idea", "text/plain"); });
  LlmClient client(LlmBackendConfig{stub.url()});
  auto p = classify_and_extract("Boost system throughput by 15%", shipped(), &client);
  EXPECT_EQ(p.source, IntentSource::fallback);
  EXPECT_EQ(p.type, KpiKind::throughput);

  StubServer failing([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  LlmClient bad(LlmBackendConfig{failing.url()});
  EXPECT_THROW(bad.query("x"), BackendUnavailable);
  EXPECT_EQ(classify_and_extract("Reduce network delay by 13%", shipped(), &bad).source, IntentSource::fallback);
}

TEST(ProcessedIntentJson, RoundTrip) {
  auto p = fallback_parse("Lower latency for gaming users by 7.5%");
  auto q = processed_from_json(to_json(p));
  EXPECT_EQ(q.raw, p.raw);
  EXPECT_EQ(q.type, p.type);
  EXPECT_EQ(q.magnitude_pct, p.magnitude_pct);
  EXPECT_EQ(q.target_classes, p.target_classes);
}
