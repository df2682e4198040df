#include <gtest/gtest.h>

#include <httplib.h>

#include <barrier>
#include <thread>

#include "apiward/core/config.h"
#include "apiward/core/errors.h"
#include "apiward/defenses/transforms.h"
#include "apiward/gateway/batch.h"
#include "apiward/gateway/cache.h"
#include "apiward/gateway/gateway.h"
#include "apiward/gateway/server.h"
#include "test_support.h"

namespace apiward::gateway {
namespace {

using defenses::CountingClient;
using defenses::FunctionClient;
using defenses::MockClient;
using testing::TempDir;

// Frozen from tests/oracles/hash_oracle.py.
TEST(CacheKey, MatchesOracle) {
  EXPECT_EQ(cache_key("teacher-14b", {0.0, 4096}, "What is 2+2?"),
            "6545323166b1fb6894e4bfa57abf5bab9d5bcb3039d7554dcc963b85748b1e2d");
  EXPECT_EQ(cache_key("teacher-14b", {0.0, 1024}, "What is 2+2?"),
            "a93410aa1420c87a21394fa92692da416878a416343db215323f6b332ecf5719");
  EXPECT_EQ(cache_key("m", {-0.0, 1}, "p"), cache_key("m", {0.0, 1}, "p"));
  EXPECT_NE(cache_key("m", {0.0, 1}, "p"), cache_key("m", {0.5, 1}, "p"));
}

TEST(Cache, ReadYourWritesAndFirstWriteWins) {
  TempDir tmp;
  ResponseCache cache(tmp.path());
  const auto key = cache_key("m", {}, "p");
  EXPECT_FALSE(cache.get(key));
  EXPECT_TRUE(cache.put(key, "first"));
  EXPECT_FALSE(cache.put(key, "second"));
  EXPECT_EQ(cache.get(key)->value, "first");
  EXPECT_EQ(cache.stats().writes, 1u);
}

TEST(Cache, PersistsAcrossInstances) {
  TempDir tmp;
  const auto key = cache_key("m", {}, "p");
  std::int64_t created = 0;
  {
    ResponseCache cache(tmp.path());
    cache.put(key, std::string("bytes\0with nul", 14));
    created = cache.get(key)->created_at;
  }
  EXPECT_TRUE(std::filesystem::exists(tmp / "index.json"));
  ResponseCache again(tmp.path());
  ASSERT_EQ(again.size(), 1u);
  const auto e = again.get(key);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->value, std::string("bytes\0with nul", 14));
  EXPECT_EQ(e->created_at, created);
}

TEST(Cache, SecondInstanceCannotOverwrite) {
  TempDir tmp;
  const auto key = cache_key("m", {}, "p");
  ResponseCache a(tmp.path());
  ResponseCache b(tmp.path());
  EXPECT_TRUE(a.put(key, "from a"));
  EXPECT_FALSE(b.put(key, "from b"));
  EXPECT_EQ(b.get(key)->value, "from a");
}

TEST(Cache, RejectsMalformedKey) {
  TempDir tmp;
  ResponseCache cache(tmp.path());
  EXPECT_THROW(cache.put("../escape", "x"), CacheError);
}

TEST(Cache, ConcurrentColdMissesProduceOnce) {
  TempDir tmp;
  ResponseCache cache(tmp.path());
  std::atomic<int> produced{0};
  const auto key = cache_key("m", {}, "hot");
  std::barrier sync(32);
  std::vector<std::string> seen(32);
  {
    std::vector<std::jthread> threads;
    for (int i = 0; i < 32; ++i) {
      threads.emplace_back([&, i] {
        sync.arrive_and_wait();
        seen[i] = cache
                      .get_or_produce(key, [&] {
                        ++produced;
                        std::this_thread::sleep_for(std::chrono::milliseconds(20));
                        return std::string("value");
                      })
                      .value;
      });
    }
  }
  EXPECT_EQ(produced.load(), 1);
  EXPECT_EQ(cache.stats().writes, 1u);
  for (const auto& s : seen) EXPECT_EQ(s, "value");
}

TEST(Cache, FailedProductionIsNotCached) {
  TempDir tmp;
  ResponseCache cache(tmp.path());
  const auto key = cache_key("m", {}, "p");
  EXPECT_THROW(cache.get_or_produce(key, []() -> std::string { throw UpstreamError("down"); }),
               UpstreamError);
  EXPECT_EQ(cache.get_or_produce(key, [] { return std::string("ok"); }).value, "ok");
}

std::vector<Prompt> ten_prompts() {
  std::vector<Prompt> ps;
  for (int i = 0; i < 10; ++i) {
    ps.push_back({"p" + std::to_string(i), Domain::kMath, "Question " + std::to_string(i)});
  }
  return ps;
}

TEST(Batch, CachesAndReuses) {
  TempDir tmp;
  MockClient mock({}, MockClient::Fallback::kEcho);
  CountingClient counting(mock);
  ResponseCache cache(tmp / "cache");
  const auto first = batch_generate(ten_prompts(), counting, cache, "teacher");
  EXPECT_EQ(first.upstream_calls, 10);
  EXPECT_EQ(cache.size(), 10u);
  const auto second = batch_generate(ten_prompts(), counting, cache, "teacher");
  EXPECT_EQ(second.upstream_calls, 0);
  EXPECT_EQ(counting.calls(), 10);
  ASSERT_EQ(second.responses.size(), 10u);
  EXPECT_EQ(first.responses[3].text, second.responses[3].text);
}

TEST(Batch, DuplicateTextSharesGeneration) {
  TempDir tmp;
  MockClient mock({}, MockClient::Fallback::kEcho);
  CountingClient counting(mock);
  ResponseCache cache(tmp.path());
  auto ps = ten_prompts();
  ps[9].text = ps[0].text;
  const auto r = batch_generate(ps, counting, cache, "teacher", {}, 4);
  EXPECT_EQ(counting.calls(), 9);
  EXPECT_EQ(r.responses.size(), 10u);
  EXPECT_EQ(r.responses[9].text, r.responses[0].text);
}

TEST(Batch, FailuresAreIsolated) {
  TempDir tmp;
  FunctionClient flaky([](auto, std::string_view user, auto&) -> std::string {
    if (user == "Question 4") throw UpstreamError("boom");
    return "ok " + std::string(user);
  });
  ResponseCache cache(tmp.path());
  const auto r = batch_generate(ten_prompts(), flaky, cache, "teacher");
  EXPECT_EQ(r.responses.size(), 9u);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].prompt_id, "p4");
  write_raw_responses(tmp / "raw.jsonl", r.responses);
  EXPECT_EQ(read_raw_responses(tmp / "raw.jsonl").size(), 9u);
}

TEST(ChatParsing, RejectsInvalidRequests) {
  for (const char* body : {"not json", "[]", "{}", R"({"messages":[]})",
                           R"({"messages":[{"role":"system","content":"x"}]})",
                           R"({"messages":[{"role":"robot","content":"x"}]})",
                           R"({"messages":[{"role":"user","content":"x"}],"max_tokens":0})",
                           R"({"messages":[{"role":"user","content":"x"}],"temperature":-1})",
                           R"({"messages":[{"role":"user","content":"x"}],"domain":"poetry"})",
                           R"({"messages":[{"role":"user","content":"x"}],"stream":true})"}) {
    try {
      parse_chat_request(body);
      ADD_FAILURE() << body;
    } catch (const GatewayError& e) {
      EXPECT_EQ(e.status(), 400) << body;
    }
  }
  const auto r = parse_chat_request(
      R"({"model":"m","messages":[{"role":"user","content":"hi"}],"max_tokens":64,"domain":"code","prompt_id":"c7"})");
  EXPECT_EQ(r.max_tokens, 64);
  EXPECT_EQ(r.domain, Domain::kCode);
  EXPECT_EQ(r.prompt_id, "c7");
}

const char* kMathAnswer = "Step 1: add.\nStep 2: check.\nThus the answer is \\boxed{4}.";

struct GatewayFixture {
  TempDir tmp;
  MockClient mock;
  CountingClient counting{mock};
  ResponseCache cache{tmp / "cache"};

  GatewayFixture() { mock.add("", "What is 2+2?", {}, kMathAnswer); }

  Gateway make(const std::string& preset) {
    GatewayConfig c;
    c.teacher_model = "teacher";
    c.experiment = *find_preset(preset);
    c.known_prompts = {{"m1", Domain::kMath, "What is 2+2?"}};
    return Gateway(c, counting, &counting, cache);
  }
};

ChatRequest ask(const std::string& text) {
  ChatRequest r;
  r.messages = {{"user", text}};
  return r;
}

TEST(Gateway, NoDefenseReturnsTeacherBytes) {
  GatewayFixture f;
  auto gw = f.make("A01");
  const auto r = gw.handle_chat(ask("What is 2+2?"));
  EXPECT_EQ(r.content, kMathAnswer);
  EXPECT_EQ(r.defense_id, "A01");
  EXPECT_EQ(f.counting.calls(), 1);
}

TEST(Gateway, CotRemovalReturnsAnswerOnly) {
  GatewayFixture f;
  auto gw = f.make("A08");
  EXPECT_EQ(gw.handle_chat(ask("What is 2+2?")).content, "4");
}

TEST(Gateway, RepeatedRequestIsCached) {
  GatewayFixture f;
  auto gw = f.make("A08");
  const auto a = gw.handle_chat(ask("What is 2+2?"));
  const auto b = gw.handle_chat(ask("What is 2+2?"));
  EXPECT_EQ(f.counting.calls(), 1);
  EXPECT_EQ(a.content, b.content);
  EXPECT_EQ(a.id, b.id);
  EXPECT_EQ(a.created, b.created);
}

TEST(Gateway, PoisonedRepeatIsCachedAndUnflagged) {
  GatewayFixture f;
  f.mock.add(defenses::kCorruptionPrompt, "What is 2+2?", {}, "\\boxed{5}");
  GatewayConfig c;
  c.teacher_model = "teacher";
  c.experiment = {"P100", {DefenseConfig::poison(1.0)}, 42};
  Gateway gw(c, f.counting, nullptr, f.cache);
  int status = 0;
  const auto body = gw.handle_chat_body(R"({"messages":[{"role":"user","content":"What is 2+2?"}]})", status);
  EXPECT_EQ(status, 200);
  EXPECT_EQ(body.find("poison"), std::string::npos);
  EXPECT_NE(body.find("\\\\boxed{5}"), std::string::npos);
  gw.handle_chat_body(R"({"messages":[{"role":"user","content":"What is 2+2?"}]})", status);
  EXPECT_EQ(f.counting.calls(), 2);
}

TEST(Gateway, ErrorMapping) {
  GatewayFixture f;
  auto gw = f.make("A01");
  int status = 0;
  auto body = gw.handle_chat_body("{", status);
  EXPECT_EQ(status, 400);
  body = gw.handle_chat_body(R"({"messages":[{"role":"user","content":"unknown"}]})", status);
  EXPECT_EQ(status, 502);
  EXPECT_NE(body.find("upstream_error"), std::string::npos);

  GatewayConfig c;
  c.teacher_model = "teacher";
  c.experiment = {"P", {DefenseConfig::poison(1.0)}, 42};
  Gateway poison(c, f.counting, nullptr, f.cache);
  body = poison.handle_chat_body(R"({"messages":[{"role":"user","content":"What is 2+2?"}]})", status);
  EXPECT_EQ(status, 500);
  const auto j = nlohmann::json::parse(body);
  EXPECT_EQ(j["error"]["type"], "defense_error");
  EXPECT_EQ(j["error"]["correlation_id"].get<std::string>().size(), 16u);
}

TEST(Gateway, RejectsInvalidConfig) {
  GatewayFixture f;
  GatewayConfig c;
  c.experiment = {"X", {DefenseConfig::paraphrase(2.0)}, 42};
  EXPECT_THROW(Gateway(c, f.counting, nullptr, f.cache), ConfigError);
}

// A fake OpenAI-style teacher behind real HTTP, counting its calls.
class FakeUpstream {
 public:
  FakeUpstream() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++calls;
      std::this_thread::sleep_for(std::chrono::milliseconds(30));
      const auto j = nlohmann::json::parse(req.body);
      last_auth = req.get_header_value("Authorization");
      const auto user = j["messages"].back()["content"].get<std::string>();
      nlohmann::json out;
      out["choices"] = {{{"message", {{"role", "assistant"}, {"content", "Work.\nThe answer is " + user}}}}};
      res.set_content(out.dump(), "application/json");
    });
    port = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeUpstream() {
    server_.stop();
    thread_.join();
  }
  std::atomic<int> calls{0};
  std::string last_auth;
  int port = 0;

 private:
  httplib::Server server_;
  std::thread thread_;
};

TEST(Server, EndToEndOverHttp) {
  FakeUpstream upstream;
  defenses::HttpUpstreamClient teacher(
      {"http://127.0.0.1:" + std::to_string(upstream.port), "k3y", "teacher", std::chrono::seconds(10)});
  TempDir tmp;
  ResponseCache cache(tmp.path());
  GatewayConfig c;
  c.teacher_model = "teacher";
  c.experiment = *find_preset("A08");
  c.known_prompts = {{"m1", Domain::kMath, "42"}};
  Gateway gw(c, teacher, nullptr, cache);
  GatewayServer server(gw);
  const int port = server.start("127.0.0.1", 0);

  httplib::Client client("127.0.0.1", port);
  ASSERT_EQ(client.Get("/healthz")->status, 200);
  const std::string body = R"({"model":"teacher","messages":[{"role":"user","content":"42"}]})";
  std::vector<std::string> answers(32);
  {
    std::vector<std::jthread> threads;
    for (int i = 0; i < 32; ++i) {
      threads.emplace_back([&, i] {
        httplib::Client cl("127.0.0.1", port);
        cl.set_read_timeout(30, 0);
        auto res = cl.Post("/v1/chat/completions", body, "application/json");
        if (res && res->status == 200) {
          answers[i] = nlohmann::json::parse(res->body)["choices"][0]["message"]["content"];
        }
      });
    }
  }
  for (const auto& a : answers) EXPECT_EQ(a, "42");
  EXPECT_EQ(upstream.calls.load(), 1);
  EXPECT_EQ(cache.stats().writes, 1u);
  EXPECT_EQ(upstream.last_auth, "Bearer k3y");

  auto bad = client.Post("/v1/chat/completions", "{}", "application/json");
  EXPECT_EQ(bad->status, 400);
  server.stop();
}

TEST(Server, UnreachableUpstreamIs502) {
  defenses::HttpUpstreamClient teacher({"http://127.0.0.1:1", "", "t", std::chrono::seconds(2)});
  TempDir tmp;
  ResponseCache cache(tmp.path());
  GatewayConfig c;
  c.experiment = *find_preset("A01");
  Gateway gw(c, teacher, nullptr, cache);
  int status = 0;
  gw.handle_chat_body(R"({"messages":[{"role":"user","content":"x"}]})", status);
  EXPECT_EQ(status, 502);
}

TEST(Server, ListenAddressParsing) {
  EXPECT_EQ(parse_listen_address("8080"), (std::pair<std::string, int>{"127.0.0.1", 8080}));
  EXPECT_EQ(parse_listen_address("0.0.0.0:0"), (std::pair<std::string, int>{"0.0.0.0", 0}));
  EXPECT_THROW(parse_listen_address("host:http"), ConfigError);
  EXPECT_THROW(parse_listen_address("70000"), ConfigError);
}

}  // namespace
}  // namespace apiward::gateway
