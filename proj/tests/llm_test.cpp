#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "policypad/core/errors.hpp"
#include "policypad/llm/gateway.hpp"
#include "policypad/llm/http_provider.hpp"
#include "policypad/llm/mock_provider.hpp"
#include "policypad/llm/scaffold.hpp"

namespace ppad::llm {
namespace {

LlmRequest chat(std::string text, LlmRole role = LlmRole::kPolicyInformed) {
  LlmRequest r;
  r.role = role;
  r.task = LlmTask::kChat;
  r.system = "policy";
  r.messages.push_back({Role::kUser, std::move(text), 0});
  r.params = default_params(role);
  return r;
}

struct Fixture {
  std::shared_ptr<MockProvider> mock = std::make_shared<MockProvider>();
  LlmGateway gateway{ProviderConfig::mock_defaults(), mock};
};

TEST(Gateway, MockRepliesAreDeterministic) {
  Fixture a, b;
  EXPECT_EQ(a.gateway.dispatch(chat("hello there")).text, b.gateway.dispatch(chat("hello there")).text);
  EXPECT_NE(a.gateway.dispatch(chat("hello there")).text, a.gateway.dispatch(chat("other")).text);
}

TEST(Gateway, ChatParamsDifferByRole) {
  EXPECT_DOUBLE_EQ(default_params(LlmRole::kPolicyInformed).temperature, 0.7);
  EXPECT_DOUBLE_EQ(default_params(LlmRole::kReasoning).temperature, 0.0);
}

TEST(Gateway, RetriesTimeoutsThenSucceeds) {
  Fixture f;
  f.mock->add_fault({LlmRole::kPolicyInformed, std::nullopt, "", FailureKind::kTimeout, 2});
  auto resp = f.gateway.dispatch(chat("hi"));
  EXPECT_EQ(resp.attempts, 3);
  EXPECT_EQ(f.gateway.counts().calls_for(LlmRole::kPolicyInformed), 1);
}

TEST(Gateway, GivesUpAfterConfiguredRetries) {
  Fixture f;
  f.mock->add_fault({std::nullopt, std::nullopt, "", FailureKind::kTransport, -1});
  try {
    f.gateway.dispatch(chat("hi"));
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), FailureKind::kTransport);
  }
  EXPECT_EQ(f.gateway.counts().attempts[0], 3);
}

TEST(Gateway, AuthFailuresAreNotRetried) {
  Fixture f;
  f.mock->add_fault({std::nullopt, std::nullopt, "", FailureKind::kAuthFailure, -1});
  EXPECT_THROW(f.gateway.dispatch(chat("hi")), LlmError);
  EXPECT_EQ(f.gateway.counts().attempts[0], 1);
}

TEST(Gateway, MalformedJsonGetsOneRepairRound) {
  MockConfig cfg;
  cfg.malformed_json_replies = 1;
  auto mock = std::make_shared<MockProvider>(cfg);
  LlmGateway g(ProviderConfig::mock_defaults(), mock);
  LlmRequest r = chat("original", LlmRole::kReasoning);
  r.task = LlmTask::kSuggestion;
  r.hints[hint::kOriginal] = "a b";
  r.hints[hint::kEdited] = "a b c";
  auto j = g.dispatch_json(r);
  EXPECT_TRUE(j.contains("statement"));
  EXPECT_EQ(g.counts().calls_for(LlmRole::kReasoning), 2);

  cfg.malformed_json_replies = 2;
  mock->set_config(cfg);
  try {
    g.dispatch_json(r);
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), FailureKind::kStructuredOutput);
  }
}

TEST(Gateway, RejectsBadRequests) {
  Fixture f;
  LlmRequest r = chat("x");
  r.system.clear();
  EXPECT_THROW(f.gateway.dispatch(r), Error);
  r = chat("x");
  r.messages.push_back({Role::kAssistant, "y", 0});
  EXPECT_THROW(f.gateway.dispatch(r), Error);
}

TEST(Gateway, ParsesJsonOutOfFencedProse) {
  auto j = parse_json_reply("Sure:\n```json\n{\"a\": 1}\n```");
  ASSERT_TRUE(j);
  EXPECT_EQ((*j)["a"], 1);
  EXPECT_FALSE(parse_json_reply("no braces"));
}

// A provider that blocks so the limiter's cap can be observed.
class SlowProvider : public Provider {
 public:
  std::atomic<int> active{0}, peak{0};
  LlmResponse complete(const LlmRequest&, const RoleEndpoint&) override {
    int now = ++active;
    for (int p = peak; now > p && !peak.compare_exchange_weak(p, now);) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(15));
    --active;
    return {"ok", {}, {}, 1};
  }
};

TEST(Gateway, InFlightCapHolds) {
  auto slow = std::make_shared<SlowProvider>();
  auto cfg = ProviderConfig::mock_defaults();
  cfg.max_inflight = 3;
  LlmGateway g(cfg, slow);
  std::vector<std::thread> ts;
  for (int i = 0; i < 12; ++i) ts.emplace_back([&] { g.dispatch(chat("x")); });
  for (auto& t : ts) t.join();
  EXPECT_LE(slow->peak.load(), 3);
  EXPECT_EQ(g.peak_in_flight(), 3u);
}

TEST(Config, RemoteNeedsEveryRoleMapped) {
  std::map<std::string, std::string> env = {{"LLM_BASE_URL_POLICY_INFORMED", "http://x/v1"},
                                            {"LLM_MODEL_POLICY_INFORMED", "m"}};
  auto lookup = [&](const std::string& k) -> std::optional<std::string> {
    auto it = env.find(k);
    if (it == env.end()) return std::nullopt;
    return it->second;
  };
  auto cfg = ProviderConfig::from_env(ProviderKind::kRemote, lookup);
  try {
    cfg.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
  cfg.merge({{"roles",
              {{"utility", {{"endpoint", "http://u/v1"}, {"model", "u"}}},
               {"reasoning", {{"endpoint", "http://r/v1"}, {"model", "r"}}}}}});
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.endpoint(LlmRole::kReasoning).auth_token_env, "LLM_API_KEY_REASONING");
}

TEST(Scaffold, ByteStableAndWrapsPolicy) {
  policy::PolicyText p;
  p.raw = "# Objectives\n- Help users.";
  const auto a = build_policy_scaffold(p);
  EXPECT_EQ(a, build_policy_scaffold(p));
  EXPECT_NE(a.find(p.raw), std::string::npos);
  auto custom = ScaffoldConfig{"v-test", "<<", ">>"};
  EXPECT_EQ(build_policy_scaffold(p, custom), "<<" + p.raw + ">>");
}

// OpenAI-compatible stub upstream on a loopback port.
class StubUpstream {
 public:
  explicit StubUpstream(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubUpstream() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

ProviderConfig remote_config(const std::string& url) {
  ProviderConfig cfg;
  cfg.provider = ProviderKind::kRemote;
  for (auto role : kAllRoles) cfg.roles[role] = {url, "stub-model", "STUB_KEY", 2.0, 2, 0};
  return cfg;
}

auto stub_env = [](const std::string& k) -> std::optional<std::string> {
  if (k == "STUB_KEY") return "secret";
  return std::nullopt;
};

TEST(HttpProvider, SendsChatCompletionAndReadsContent) {
  std::string seen_auth, seen_model;
  StubUpstream up([&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_model = nlohmann::json::parse(req.body)["model"];
    res.set_content(R"({"choices":[{"message":{"content":"hi back"}}],"usage":{"prompt_tokens":3}})",
                    "application/json");
  });
  LlmGateway g(remote_config(up.url()), std::make_shared<HttpProvider>(stub_env));
  auto resp = g.dispatch(chat("hi"));
  EXPECT_EQ(resp.text, "hi back");
  EXPECT_EQ(resp.usage.prompt_tokens, 3);
  EXPECT_EQ(seen_auth, "Bearer secret");
  EXPECT_EQ(seen_model, "stub-model");
}

TEST(HttpProvider, UnauthorizedIsAuthFailureWithoutRetry) {
  std::atomic<int> hits{0};
  StubUpstream up([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  LlmGateway g(remote_config(up.url()), std::make_shared<HttpProvider>(stub_env));
  try {
    g.dispatch(chat("hi"));
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), FailureKind::kAuthFailure);
  }
  EXPECT_EQ(hits.load(), 1);
}

TEST(HttpProvider, BodyWithoutChoicesIsMalformedUpstream) {
  std::atomic<int> hits{0};
  StubUpstream up([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.set_content(R"({"object":"error"})", "application/json");
  });
  LlmGateway g(remote_config(up.url()), std::make_shared<HttpProvider>(stub_env));
  try {
    g.dispatch(chat("hi"));
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), FailureKind::kMalformedUpstream);
  }
  EXPECT_EQ(hits.load(), 3);  // retried like any transient failure
}

TEST(HttpProvider, UnreachableEndpointIsTransport) {
  auto cfg = remote_config("http://127.0.0.1:1/v1");
  for (auto& [_, ep] : cfg.roles) ep.retries = 0;
  LlmGateway g(cfg, std::make_shared<HttpProvider>(stub_env));
  try {
    g.dispatch(chat("hi"));
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), FailureKind::kTransport);
  }
}

}  // namespace
}  // namespace ppad::llm
