#include <gtest/gtest.h>

#include <httplib.h>

#include <sstream>
#include <thread>

#include <json.hpp>

#include "apiward/cli/commands.h"
#include "apiward/core/manifest.h"
#include "apiward/defenses/pipeline.h"
#include "apiward/defenses/tokenizer.h"
#include "apiward/defenses/upstream.h"
#include "apiward/gateway/batch.h"
#include "test_support.h"

namespace apiward::cli {
namespace {

using testing::TempDir;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "apiward");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

// Ten prompts over all domains with echo-mock raw responses on disk.
struct Corpus {
  TempDir tmp;
  std::filesystem::path manifest = tmp / "manifest.jsonl";
  std::filesystem::path raw = tmp / "raw.jsonl";

  Corpus() {
    std::vector<Prompt> ps;
    std::vector<gateway::RawResponse> rows;
    for (int i = 0; i < 10; ++i) {
      const auto id = "p" + std::to_string(i);
      ps.push_back({id, static_cast<Domain>(i % 3), "question " + std::to_string(i)});
      std::string text = "Reasoning step.\n\nThe answer is \\boxed{" + std::to_string(i) + "}.";
      for (int k = 0; k < 60 * i; ++k) text += " filler";
      rows.push_back({id, text});
    }
    write_manifest(manifest, ps);
    gateway::write_raw_responses(raw, rows);
  }
};

TEST(Cli, HelpListsPresets) {
  const auto r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* s : {"A01", "A04  perturbation  paraphrase(alpha=1)", "A07  poisoning     poison(r=0.3)",
                        "A08  throttling    cot_removal", "A10  throttling    token_limit(L=1024)"}) {
    EXPECT_NE(r.out.find(s), std::string::npos) << s;
  }
  EXPECT_NE(run_cli({"defend", "--help"}).out.find("A09"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"defend", "--in", "x"}).code, 2);
  const auto r = run_cli({"serve", "--defense", "A99", "--mock-fallback", "echo"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("A99"), std::string::npos);
}

TEST(Cli, DefendNoneCopiesRaw) {
  Corpus c;
  const auto out = c.tmp / "a01.jsonl";
  const auto r = run_cli({"defend", "--in", c.manifest.string(), "--raw", c.raw.string(),
                          "--experiment", "A01", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto raw = gateway::read_raw_responses(c.raw);
  const auto rows = defenses::read_defended(out);
  ASSERT_EQ(rows.size(), 10u);
  for (const auto& row : rows) EXPECT_EQ(row.text, raw.at(row.prompt_id));
}

TEST(Cli, DefendIsDeterministicAndLimitsTokens) {
  Corpus c;
  for (const char* exp : {"A07", "A09"}) {
    const auto a = c.tmp / (std::string(exp) + "a.jsonl");
    const auto b = c.tmp / (std::string(exp) + "b.jsonl");
    for (const auto& out : {a, b}) {
      const auto r = run_cli({"defend", "--in", c.manifest.string(), "--raw", c.raw.string(),
                              "--experiment", exp, "--out", out.string(), "--mock-fallback", "echo",
                              "--seed", "42", "--jobs", "4", "--train-out", (c.tmp / "train.jsonl").string()});
      ASSERT_EQ(r.code, 0) << r.err;
    }
    EXPECT_EQ(testing::slurp(a), testing::slurp(b)) << exp;
  }
  for (const auto& row : defenses::read_defended(c.tmp / "A09a.jsonl")) {
    EXPECT_LE(defenses::default_tokenizer().count(row.text), 512u);
  }
}

TEST(Cli, DefendItemFailuresExitOne) {
  Corpus c;
  const auto r = run_cli({"defend", "--in", c.manifest.string(), "--raw", c.raw.string(),
                          "--experiment", "A07", "--out", (c.tmp / "o.jsonl").string(),
                          "--mock-fallback", "error"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("failures"), std::string::npos);
}

TEST(Cli, DefendNeedsParaphraser) {
  Corpus c;
  const auto r = run_cli({"defend", "--in", c.manifest.string(), "--raw", c.raw.string(),
                          "--experiment", "A03", "--out", (c.tmp / "o.jsonl").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("paraphraser"), std::string::npos);
}

TEST(Cli, GenerateUsesCache) {
  Corpus c;
  const auto cache = (c.tmp / "cache").string();
  const auto raw = (c.tmp / "gen.jsonl").string();
  auto r = run_cli({"generate", "--in", c.manifest.string(), "--out", raw, "--cache-dir", cache,
                    "--mock-fallback", "echo"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("10 upstream calls"), std::string::npos) << r.out;
  const auto first = testing::slurp(raw);
  r = run_cli({"generate", "--in", c.manifest.string(), "--out", raw, "--cache-dir", cache,
               "--mock-fallback", "echo"});
  EXPECT_NE(r.out.find("0 upstream calls"), std::string::npos) << r.out;
  EXPECT_EQ(testing::slurp(raw), first);
  EXPECT_TRUE(std::filesystem::exists(c.tmp / "cache/index.json"));
}

TEST(Cli, GenerateWithoutUpstreamIsConfigError) {
  Corpus c;
  ::unsetenv("APIWARD_TEACHER_BASE_URL");
  EXPECT_EQ(run_cli({"generate", "--in", c.manifest.string(), "--out", (c.tmp / "g").string()}).code, 2);
}

TEST(Cli, ScoreWritesRecord) {
  TempDir tmp;
  testing::spit(tmp / "refs.jsonl", "{\"id\":\"a\",\"gold\":\"1/2\"}\n{\"id\":\"b\",\"gold\":\"3\"}\n");
  testing::spit(tmp / "preds.jsonl", "{\"id\":\"a\",\"prediction\":\"\\\\boxed{0.5}\"}\n{\"id\":\"b\",\"prediction\":\"4\"}\n");
  const auto out = (tmp / "s.jsonl").string();
  auto r = run_cli({"score", "--benchmark", "math500", "--references", (tmp / "refs.jsonl").string(),
                    "--predictions", (tmp / "preds.jsonl").string(), "--variant", "A08-student",
                    "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(testing::slurp(out), "{\"variant_id\":\"A08-student\",\"benchmark\":\"math500\",\"score\":\"50\"}\n");

  testing::spit(tmp / "judge.jsonl", "{\"id\":\"a\",\"grade\":8}\n{\"id\":\"b\",\"grade\":8}\n{\"id\":\"c\",\"grade\":9}\n");
  r = run_cli({"score", "--benchmark", "mtbench", "--references", (tmp / "judge.jsonl").string(),
               "--variant", "x"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("8.333333"), std::string::npos);

  r = run_cli({"score", "--benchmark", "humaneval_plus", "--references", (tmp / "refs.jsonl").string(),
               "--predictions", (tmp / "preds.jsonl").string(), "--variant", "x"});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, ReportFromFixtures) {
  TempDir tmp;
  const auto r = run_cli({"report", "--scores", testing::data_path("scores").string(), "--out",
                          (tmp / "rep").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = testing::slurp(tmp / "rep/report.txt");
  const auto a08 = table.substr(table.find("\nA08"), 120);
  EXPECT_NE(a08.find("0.463"), std::string::npos) << a08;
  const auto again = run_cli({"report", "--scores", testing::data_path("scores").string(), "--out",
                              (tmp / "rep2").string()});
  for (const char* f : {"report.txt", "report.jsonl", "tradeoff.csv", "categories.csv"}) {
    EXPECT_EQ(testing::slurp(tmp / "rep" / f), testing::slurp(tmp / "rep2" / f)) << f;
  }
}

TEST(Cli, ReportErrors) {
  TempDir tmp;
  std::filesystem::create_directories(tmp / "empty");
  EXPECT_EQ(run_cli({"report", "--scores", (tmp / "empty").string(), "--out", (tmp / "o").string()}).code, 2);
  testing::spit(tmp / "s/x.jsonl", "{\"variant_id\":\"A08-student\",\"benchmark\":\"math500\",\"score\":\"31.4\"}\n");
  const auto r = run_cli({"report", "--scores", (tmp / "s").string(), "--out", (tmp / "o").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("student_baseline"), std::string::npos);
}

TEST(Cli, GridEndToEnd) {
  Corpus c;
  const auto out = c.tmp / "grid";
  const auto r = run_cli({"grid", "--in", c.manifest.string(), "--raw", c.raw.string(),
                          "--experiments", "A01,A08", "--out", out.string(), "--scores",
                          testing::data_path("scores").string()});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_TRUE(std::filesystem::exists(out / "A01/defended.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(out / "A08/train.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(out / "report/tradeoff.csv"));
  const auto rows = defenses::read_defended(out / "A08/defended.jsonl");
  EXPECT_EQ(rows[0].text, "0");
}

TEST(Cli, GridGeneratesWhenNoRaw) {
  Corpus c;
  const auto r = run_cli({"grid", "--in", c.manifest.string(), "--experiments", "A09",
                          "--out", (c.tmp / "g").string(), "--cache-dir", (c.tmp / "cache").string(),
                          "--mock-fallback", "echo"});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_TRUE(std::filesystem::exists(c.tmp / "g/raw.jsonl"));
}

TEST(Cli, ServeMockUntilShutdown) {
  TempDir tmp;
  testing::spit(tmp / "m.jsonl", "{\"id\":\"m1\",\"domain\":\"math\",\"text\":\"What is 2+2?\"}\n");
  const std::string answer = "Add them.\nThe answer is \\boxed{4}.";
  nlohmann::json fixtures;
  fixtures[defenses::request_digest("", "What is 2+2?", {})] = answer;
  testing::spit(tmp / "fx.json", fixtures.dump());
  const auto port_file = tmp / "port";

  Result result{};
  std::thread server([&] {
    result = run_cli({"serve", "--defense", "A08", "--listen", "127.0.0.1:0", "--mock",
                      (tmp / "fx.json").string(), "--manifest", (tmp / "m.jsonl").string(),
                      "--cache-dir", (tmp / "cache").string(), "--port-file", port_file.string()});
  });
  for (int i = 0; i < 200 && !std::filesystem::exists(port_file); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  ASSERT_TRUE(std::filesystem::exists(port_file));
  const int port = std::stoi(testing::slurp(port_file));
  httplib::Client client("127.0.0.1", port);
  auto res = client.Post("/v1/chat/completions",
                         R"({"messages":[{"role":"user","content":"What is 2+2?"}]})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto j = nlohmann::json::parse(res->body);
  EXPECT_EQ(j["choices"][0]["message"]["content"], "4");
  EXPECT_EQ(j["defense_id"], "A08");
  request_shutdown();
  server.join();
  EXPECT_EQ(result.code, 0) << result.err;
  EXPECT_TRUE(std::filesystem::exists(tmp / "cache/index.json"));
}

}  // namespace
}  // namespace apiward::cli
