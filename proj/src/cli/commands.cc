#include "apiward/cli/commands.h"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "apiward/core/config.h"
#include "apiward/core/errors.h"
#include "apiward/core/manifest.h"
#include "apiward/defenses/pipeline.h"
#include "apiward/defenses/upstream.h"
#include "apiward/gateway/batch.h"
#include "apiward/gateway/cache.h"
#include "apiward/gateway/gateway.h"
#include "apiward/gateway/server.h"
#include "apiward/harness/grid.h"
#include "apiward/harness/sandbox_client.h"
#include "apiward/harness/scoring.h"
#include "apiward/metrics/report_io.h"

namespace apiward::cli {

namespace fs = std::filesystem;
using defenses::UpstreamClient;

namespace {

std::atomic<bool> g_shutdown{false};

extern "C" void on_signal(int) { g_shutdown.store(true); }

// Bad inputs the operator must fix; these exit 2 rather than 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

void require_file(const fs::path& p, const char* flag) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) {
    throw UsageError(std::string(flag) + ": no such file: " + p.string());
  }
}

struct UpstreamFlags {
  std::string mock;  // fixture file; empty with fallback "" means real upstreams
  std::string mock_fallback;
  std::string teacher_model;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--mock", mock, "Serve canned completions from a fixture file (JSON object digest -> text)");
    cmd->add_option("--mock-fallback", mock_fallback,
                    "Mock behavior for unknown requests: error or echo (implies mock mode)")
        ->check(CLI::IsMember({"error", "echo"}));
    cmd->add_option("--teacher-model", teacher_model,
                    "Teacher model id (default $APIWARD_TEACHER_MODEL or 'teacher')");
  }

  bool mock_mode() const { return !mock.empty() || !mock_fallback.empty(); }
};

struct Upstreams {
  std::unique_ptr<UpstreamClient> teacher;
  std::unique_ptr<UpstreamClient> paraphraser;
  std::string teacher_model;
};

// Mock mode serves both roles from the same fixtures. Otherwise each role is
// an HTTP client configured from APIWARD_TEACHER_* / APIWARD_PARAPHRASER_*,
// and absent when its base URL is unset.
Upstreams make_upstreams(const UpstreamFlags& f) {
  Upstreams u;
  const auto env_model = defenses::upstream_options_from_env("APIWARD_TEACHER");
  u.teacher_model = !f.teacher_model.empty()                 ? f.teacher_model
                    : env_model && !env_model->model.empty() ? env_model->model
                                                             : env_or("APIWARD_TEACHER_MODEL", "teacher");
  if (f.mock_mode()) {
    std::map<std::string, std::string> fixtures;
    if (!f.mock.empty()) {
      require_file(f.mock, "--mock");
      fixtures = defenses::MockClient::load_fixtures(f.mock);
    }
    const auto fb = f.mock_fallback == "echo" ? defenses::MockClient::Fallback::kEcho
                                              : defenses::MockClient::Fallback::kError;
    u.teacher = std::make_unique<defenses::MockClient>(fixtures, fb);
    u.paraphraser = std::make_unique<defenses::MockClient>(fixtures, fb);
    return u;
  }
  if (auto o = defenses::upstream_options_from_env("APIWARD_TEACHER")) {
    if (o->model.empty()) o->model = u.teacher_model;
    u.teacher = std::make_unique<defenses::HttpUpstreamClient>(*o);
  }
  if (auto o = defenses::upstream_options_from_env("APIWARD_PARAPHRASER")) {
    u.paraphraser = std::make_unique<defenses::HttpUpstreamClient>(*o);
  }
  return u;
}

bool needs(const ExperimentSpec& spec, DefenseKind kind) {
  for (const auto& d : spec.defenses) {
    if (d.kind != kind) continue;
    if (kind == DefenseKind::kParaphrase && d.alpha.value_or(0) == 0) continue;
    if (kind == DefenseKind::kPoison && d.poison_rate.value_or(0) == 0) continue;
    return true;
  }
  return false;
}

// Fails fast when a defense needs a client that is not configured.
void check_clients(const ExperimentSpec& spec, const Upstreams& u) {
  std::vector<std::string> problems;
  if (needs(spec, DefenseKind::kParaphrase) && !u.paraphraser) {
    problems.push_back(spec.id + " paraphrases but no paraphraser is configured "
                       "(set APIWARD_PARAPHRASER_BASE_URL or use --mock)");
  }
  if (needs(spec, DefenseKind::kPoison) && !u.teacher) {
    problems.push_back(spec.id + " poisons but no teacher is configured "
                       "(set APIWARD_TEACHER_BASE_URL or use --mock)");
  }
  if (!problems.empty()) throw ConfigError(problems);
}

defenses::DefenseClients clients_of(const Upstreams& u) {
  defenses::DefenseClients c;
  c.teacher = u.teacher.get();
  c.paraphraser = u.paraphraser.get();
  return c;
}

std::string default_cache_dir() { return env_or("APIWARD_CACHE_DIR", ".apiward-cache"); }

std::string failure_lines(const std::vector<defenses::CorpusFailure>& failures) {
  std::string s;
  for (const auto& f : failures) s += "  " + f.prompt_id + ": " + f.message + "\n";
  return s;
}

// ---- serve -----------------------------------------------------------------

struct ServeOptions {
  UpstreamFlags upstream;
  std::string experiment = "A01";
  std::string listen = "127.0.0.1:8080";
  std::string cache_dir;
  std::string manifest;
  std::string port_file;
  std::uint64_t seed = 42;
};

CommandOutcome cmd_serve(const ServeOptions& o, std::ostream& out) {
  auto spec = resolve_experiment(o.experiment);
  spec.seed = o.seed;
  require_valid(spec);
  const auto [host, port] = gateway::parse_listen_address(o.listen);
  auto ups = make_upstreams(o.upstream);
  if (!ups.teacher) {
    throw ConfigError({"no teacher upstream configured (set APIWARD_TEACHER_BASE_URL or use --mock)"});
  }
  check_clients(spec, ups);

  gateway::GatewayConfig config;
  config.teacher_model = ups.teacher_model;
  config.experiment = spec;
  if (!o.manifest.empty()) {
    require_file(o.manifest, "--manifest");
    config.known_prompts = read_manifest(o.manifest);
  }
  gateway::ResponseCache cache(o.cache_dir.empty() ? default_cache_dir() : o.cache_dir);
  gateway::Gateway gw(std::move(config), *ups.teacher, ups.paraphraser.get(), cache);
  gateway::GatewayServer server(gw);

  g_shutdown.store(false);
  auto old_int = std::signal(SIGINT, on_signal);
  auto old_term = std::signal(SIGTERM, on_signal);
  int bound = 0;
  try {
    bound = server.start(host, port);
  } catch (...) {
    std::signal(SIGINT, old_int);
    std::signal(SIGTERM, old_term);
    throw;
  }
  out << "serving " << spec.id << " (" << spec.category() << ") on " << host << ":" << bound
      << std::endl;
  if (!o.port_file.empty()) write_text(o.port_file, std::to_string(bound) + "\n");

  while (!g_shutdown.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  cache.flush();
  std::signal(SIGINT, old_int);
  std::signal(SIGTERM, old_term);

  const auto st = cache.stats();
  CommandOutcome r;
  r.summary = "shut down; cache hits " + std::to_string(st.hits) + ", misses " +
              std::to_string(st.misses) + ", writes " + std::to_string(st.writes);
  r.artifact_paths.push_back(cache.dir() / "index.json");
  return r;
}

// ---- generate --------------------------------------------------------------

struct GenerateOptions {
  UpstreamFlags upstream;
  std::string in, out, cache_dir;
  int max_tokens = 4096;
  double temperature = 0.0;
  int jobs = 1;
};

CommandOutcome cmd_generate(const GenerateOptions& o) {
  require_file(o.in, "--in");
  const auto prompts = read_manifest(o.in);
  auto ups = make_upstreams(o.upstream);
  if (!ups.teacher) {
    throw ConfigError({"no teacher upstream configured (set APIWARD_TEACHER_BASE_URL or use --mock)"});
  }
  gateway::ResponseCache cache(o.cache_dir.empty() ? default_cache_dir() : o.cache_dir);
  const GenerationParams params{o.temperature, o.max_tokens};
  auto batch = gateway::batch_generate(prompts, *ups.teacher, cache, ups.teacher_model, params, o.jobs);
  gateway::write_raw_responses(o.out, batch.responses);

  CommandOutcome r;
  r.exit_code = batch.failures.empty() ? kExitOk : kExitItemFailures;
  r.summary = std::to_string(batch.responses.size()) + " responses, " +
              std::to_string(batch.upstream_calls) + " upstream calls, " +
              std::to_string(batch.cache_hits) + " cache hits, " +
              std::to_string(batch.failures.size()) + " failures\n" + failure_lines(batch.failures);
  r.artifact_paths = {o.out, cache.dir() / "index.json"};
  return r;
}

// ---- defend ----------------------------------------------------------------

struct DefendOptions {
  UpstreamFlags upstream;
  std::string in, raw, experiment, out, train_out;
  std::uint64_t seed = 42;
  int jobs = 1;
};

CommandOutcome cmd_defend(const DefendOptions& o) {
  auto spec = resolve_experiment(o.experiment);
  spec.seed = o.seed;
  require_valid(spec);
  require_file(o.in, "--in");
  require_file(o.raw, "--raw");
  const auto prompts = read_manifest(o.in);
  const auto raw = gateway::read_raw_responses(o.raw);
  auto ups = make_upstreams(o.upstream);
  check_clients(spec, ups);

  auto corpus = defenses::defend_corpus(prompts, raw, spec, clients_of(ups), o.jobs);
  defenses::write_defended(o.out, corpus.rows);
  CommandOutcome r;
  r.artifact_paths.push_back(o.out);
  if (!o.train_out.empty()) {
    defenses::write_training_set(o.train_out, prompts, corpus.rows);
    r.artifact_paths.push_back(o.train_out);
  }
  std::size_t poisoned = 0;
  for (const auto& row : corpus.rows) poisoned += row.poisoned ? 1 : 0;
  r.exit_code = corpus.failures.empty() ? kExitOk : kExitItemFailures;
  r.summary = spec.id + ": " + std::to_string(corpus.rows.size()) + " defended, " +
              std::to_string(poisoned) + " poisoned, " + std::to_string(corpus.failures.size()) +
              " failures\n" + failure_lines(corpus.failures);
  return r;
}

// ---- score -----------------------------------------------------------------

struct ScoreOptions {
  std::string benchmark, references, predictions, variant, out, sandbox;
  int time_limit_ms = harness::kDefaultTimeLimitMs;
  int jobs = 1;
};

CommandOutcome cmd_score(const ScoreOptions& o) {
  const auto bench = parse_benchmark(o.benchmark);
  if (!bench) throw UsageError("--benchmark: unknown benchmark '" + o.benchmark + "'");
  require_file(o.references, "--references");
  const auto refs = harness::read_references(o.references, *bench);

  harness::Predictions preds;
  if (!o.predictions.empty()) {
    require_file(o.predictions, "--predictions");
    preds = harness::read_predictions(o.predictions);
  } else if (*bench == BenchmarkId::kMtBench) {
    for (const auto& [id, _] : refs) preds.emplace(id, "");  // grades are the data
  } else {
    throw UsageError("--predictions is required for " + o.benchmark);
  }

  harness::ScoreResult result;
  switch (*bench) {
    case BenchmarkId::kMath500:
      result = harness::score_outputs(preds, refs, harness::MathScorer(), o.jobs);
      break;
    case BenchmarkId::kMtBench:
      result = harness::score_outputs(preds, refs, harness::JudgeScorer(), o.jobs);
      break;
    case BenchmarkId::kHumanEvalPlus:
      if (o.sandbox.empty()) throw UsageError("--sandbox is required for humaneval_plus");
      result = harness::score_code(preds, refs, o.sandbox, {o.time_limit_ms, o.jobs});
      break;
  }

  const auto line = harness::score_record(o.variant, *bench, result.score);
  CommandOutcome r;
  if (!o.out.empty()) {
    write_lines(o.out, {line});
    r.artifact_paths.push_back(o.out);
  }
  r.summary = line + "\n";
  if (*bench != BenchmarkId::kMtBench) {
    r.summary += std::to_string(result.passes) + "/" + std::to_string(result.total) + " passed\n";
  }
  return r;
}

// ---- report ----------------------------------------------------------------

struct ReportOptions {
  std::string scores, out;
};

CommandOutcome cmd_report(const ReportOptions& o) {
  std::error_code ec;
  if (!fs::exists(o.scores, ec)) throw UsageError("--scores: no such file or directory: " + o.scores);
  const auto tables = metrics::read_score_tables(o.scores);
  if (tables.empty()) throw UsageError("--scores: no score records found in " + o.scores);
  const auto reports = metrics::build_reports(tables);
  CommandOutcome r;
  r.artifact_paths = metrics::write_report_dir(o.out, reports).paths;
  r.summary = metrics::render_results_table(reports);
  return r;
}

// ---- grid ------------------------------------------------------------------

struct GridOptions {
  UpstreamFlags upstream;
  std::string in, raw, out, scores, cache_dir;
  std::vector<std::string> experiments;
  std::uint64_t seed = 42;
  int jobs = 1;
};

CommandOutcome cmd_grid(const GridOptions& o) {
  std::vector<ExperimentSpec> specs;
  if (o.experiments.empty()) {
    specs.assign(presets().begin(), presets().end());
  } else {
    for (const auto& id : o.experiments) specs.push_back(resolve_experiment(id));
  }
  for (auto& s : specs) s.seed = o.seed;
  require_file(o.in, "--in");
  const auto prompts = read_manifest(o.in);
  auto ups = make_upstreams(o.upstream);
  for (const auto& s : specs) check_clients(s, ups);

  CommandOutcome r;
  std::map<std::string, std::string> raw;
  if (!o.raw.empty()) {
    require_file(o.raw, "--raw");
    raw = gateway::read_raw_responses(o.raw);
  } else {
    // Stage 1 through the cache, shared by every experiment.
    if (!ups.teacher) {
      throw ConfigError({"grid needs --raw or a teacher upstream (APIWARD_TEACHER_BASE_URL or --mock)"});
    }
    gateway::ResponseCache cache(o.cache_dir.empty() ? default_cache_dir() : o.cache_dir);
    auto batch = gateway::batch_generate(prompts, *ups.teacher, cache, ups.teacher_model, {}, o.jobs);
    const auto raw_path = fs::path(o.out) / "raw.jsonl";
    gateway::write_raw_responses(raw_path, batch.responses);
    r.artifact_paths.push_back(raw_path);
    for (auto& resp : batch.responses) raw.emplace(resp.prompt_id, std::move(resp.text));
    if (!batch.failures.empty()) {
      r.exit_code = kExitItemFailures;
      r.summary += "generation: " + std::to_string(batch.failures.size()) + " failures\n" +
                   failure_lines(batch.failures);
    }
  }

  harness::GridOptions go;
  go.out_dir = o.out;
  go.seed = o.seed;
  go.jobs = o.jobs;
  if (!o.scores.empty()) go.scores = fs::path(o.scores);
  const auto result = harness::run_grid(specs, prompts, raw, clients_of(ups), go);
  for (const auto& e : result.experiments) {
    if (!e.error) r.artifact_paths.insert(r.artifact_paths.end(), {e.defended_path, e.training_path});
  }
  r.artifact_paths.insert(r.artifact_paths.end(), result.report_paths.begin(), result.report_paths.end());
  if (!result.ok()) r.exit_code = kExitItemFailures;
  r.summary += result.summary();
  return r;
}

void add_seed(CLI::App* cmd, std::uint64_t& seed) {
  cmd->add_option("--seed", seed, "Global seed for every random decision")->capture_default_str();
}

}  // namespace

void request_shutdown() { g_shutdown.store(true); }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Defended teacher API: serve, generate, defend, score and report.", "apiward"};
  app.require_subcommand(1);
  const std::string presets_help = "Experiment presets:\n" + describe_presets();
  app.footer(presets_help);

  ServeOptions serve;
  auto* c_serve = app.add_subcommand("serve", "Run the protected chat-completions gateway");
  c_serve->add_option("--defense,--experiment", serve.experiment, "Preset id or spec file")
      ->capture_default_str();
  c_serve->add_option("--listen", serve.listen, "host:port or port (0 picks a free port)")
      ->capture_default_str();
  c_serve->add_option("--cache-dir", serve.cache_dir, "Response cache (default $APIWARD_CACHE_DIR or .apiward-cache)");
  c_serve->add_option("--manifest", serve.manifest, "Prompt manifest used to resolve prompt ids and domains");
  c_serve->add_option("--port-file", serve.port_file, "Write the bound port here once listening");
  add_seed(c_serve, serve.seed);
  serve.upstream.add_to(c_serve);
  c_serve->footer(presets_help);

  GenerateOptions gen;
  auto* c_gen = app.add_subcommand("generate", "Generate raw teacher responses through the cache");
  c_gen->add_option("--in", gen.in, "Prompt manifest (JSONL {id, domain, text})")->required();
  c_gen->add_option("--out", gen.out, "Raw responses (JSONL {prompt_id, text})")->required();
  c_gen->add_option("--cache-dir", gen.cache_dir, "Response cache (default $APIWARD_CACHE_DIR or .apiward-cache)");
  c_gen->add_option("--max-tokens", gen.max_tokens)->capture_default_str()->check(CLI::PositiveNumber);
  c_gen->add_option("--temperature", gen.temperature)->capture_default_str()->check(CLI::Range(0.0, 2.0));
  c_gen->add_option("--jobs", gen.jobs)->capture_default_str()->check(CLI::PositiveNumber);
  gen.upstream.add_to(c_gen);

  DefendOptions def;
  auto* c_def = app.add_subcommand("defend", "Apply an experiment's defenses to raw responses");
  c_def->add_option("--in", def.in, "Prompt manifest")->required();
  c_def->add_option("--raw", def.raw, "Raw responses from generate")->required();
  c_def->add_option("--experiment,--defense", def.experiment, "Preset id or spec file")->required();
  c_def->add_option("--out", def.out, "Defended set (JSONL {prompt_id, text, defense_id, poisoned})")
      ->required();
  c_def->add_option("--train-out", def.train_out, "Also write the {prompt, response} training set");
  c_def->add_option("--jobs", def.jobs)->capture_default_str()->check(CLI::PositiveNumber);
  add_seed(c_def, def.seed);
  def.upstream.add_to(c_def);
  c_def->footer(presets_help);

  ScoreOptions sc;
  auto* c_score = app.add_subcommand("score", "Score student outputs against references");
  c_score->add_option("--benchmark", sc.benchmark, "math500, humaneval_plus or mtbench")->required();
  c_score->add_option("--references", sc.references, "Reference file")->required();
  c_score->add_option("--predictions", sc.predictions, "Prediction file (JSONL {id, prediction})");
  c_score->add_option("--variant", sc.variant, "Variant id, e.g. A08-student or student_baseline")
      ->required();
  c_score->add_option("--out", sc.out, "Score record output file");
  c_score->add_option("--sandbox", sc.sandbox, "Code sandbox: exec:<command> or unix:<path>");
  c_score->add_option("--time-limit-ms", sc.time_limit_ms, "Per-candidate limit")
      ->capture_default_str()
      ->check(CLI::Range(harness::kMinTimeLimitMs, 3'600'000));
  c_score->add_option("--jobs", sc.jobs, "Parallel items (sandbox connections for code)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  ReportOptions rep;
  auto* c_rep = app.add_subcommand("report", "Render DE/DC tables and trade-off data");
  c_rep->add_option("--scores", rep.scores, "Score file or directory of *.jsonl")->required();
  c_rep->add_option("--out", rep.out, "Output directory")->required();

  GridOptions grid;
  auto* c_grid = app.add_subcommand("grid", "Run experiments end to end");
  c_grid->add_option("--in", grid.in, "Prompt manifest")->required();
  c_grid->add_option("--raw", grid.raw, "Raw responses (otherwise generated through the cache)");
  c_grid->add_option("--experiments", grid.experiments, "Preset ids or spec files (default: all presets)")
      ->delimiter(',');
  c_grid->add_option("--out", grid.out, "Output directory")->required();
  c_grid->add_option("--scores", grid.scores, "Score records for the metric reports");
  c_grid->add_option("--cache-dir", grid.cache_dir, "Response cache (default $APIWARD_CACHE_DIR or .apiward-cache)");
  c_grid->add_option("--jobs", grid.jobs)->capture_default_str()->check(CLI::PositiveNumber);
  add_seed(c_grid, grid.seed);
  grid.upstream.add_to(c_grid);
  c_grid->footer(presets_help);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    CommandOutcome r;
    if (*c_serve) r = cmd_serve(serve, out);
    else if (*c_gen) r = cmd_generate(gen);
    else if (*c_def) r = cmd_defend(def);
    else if (*c_score) r = cmd_score(sc);
    else if (*c_rep) r = cmd_report(rep);
    else if (*c_grid) r = cmd_grid(grid);
    out << r.summary;
    if (!r.summary.empty() && r.summary.back() != '\n') out << "\n";
    for (const auto& p : r.artifact_paths) out << "wrote " << p.string() << "\n";
    return r.exit_code;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const MetricError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitItemFailures;
  }
}

}  // namespace apiward::cli
