#include "apiward/harness/scoring.h"

#include <exception>
#include <optional>
#include <set>

#include "apiward/core/digest.h"
#include "apiward/core/errors.h"
#include "apiward/core/manifest.h"
#include "apiward/core/parallel.h"
#include "apiward/defenses/transforms.h"
#include "apiward/harness/answers.h"

namespace apiward::harness {

Verdict MathScorer::score(std::string_view prediction, const ReferenceSpec& reference) const {
  const auto* gold = std::get_if<std::string>(&reference.payload);
  if (!gold) throw Error("math scorer needs a gold answer reference");
  const auto answer = defenses::extract_math_answer(prediction);
  if (answers_equivalent(answer, *gold)) return Verdict::pass();
  return Verdict::fail("got '" + answer + "'");
}

Verdict JudgeScorer::score(std::string_view, const ReferenceSpec& reference) const {
  const auto* grade = std::get_if<Rational>(&reference.payload);
  if (!grade) throw Error("judge scorer needs a grade reference");
  return Verdict::graded(*grade);
}

namespace {

std::string string_field(const nlohmann::json& j, const char* name, const std::string& where) {
  auto it = j.find(name);
  if (it == j.end() || !it->is_string()) {
    throw ParseError(where + ": missing string field '" + name + "'");
  }
  return it->get<std::string>();
}

Rational grade_field(const nlohmann::json& j, const std::string& where) {
  auto it = j.find("grade");
  if (it != j.end() && it->is_string()) {
    Rational r;
    if (try_parse_decimal(it->get<std::string>(), r)) return r;
  } else if (it != j.end() && it->is_number()) {
    return parse_decimal(canonical_real(it->get<double>()));
  }
  throw ParseError(where + ": 'grade' must be a decimal number");
}

}  // namespace

References read_references(const std::filesystem::path& path, BenchmarkId benchmark) {
  References out;
  for_each_jsonl(path, [&](const nlohmann::json& j, int line) {
    const auto where = path.string() + ":" + std::to_string(line);
    if (!j.is_object()) throw ParseError(where + ": expected an object");
    const auto id = string_field(j, "id", where);
    ReferenceSpec ref{benchmark, std::string()};
    switch (benchmark) {
      case BenchmarkId::kMath500:
        ref.payload = string_field(j, "gold", where);
        break;
      case BenchmarkId::kHumanEvalPlus:
        ref.payload = CodeTests{string_field(j, "entry_point", where), string_field(j, "tests", where)};
        break;
      case BenchmarkId::kMtBench:
        ref.payload = grade_field(j, where);
        break;
    }
    if (!out.emplace(id, std::move(ref)).second) {
      throw ParseError(where + ": duplicate id '" + id + "'");
    }
  });
  return out;
}

Predictions read_predictions(const std::filesystem::path& path) {
  Predictions out;
  for_each_jsonl(path, [&](const nlohmann::json& j, int line) {
    const auto where = path.string() + ":" + std::to_string(line);
    if (!j.is_object()) throw ParseError(where + ": expected an object");
    const auto id = string_field(j, j.contains("id") ? "id" : "prompt_id", where);
    const auto text = string_field(j, j.contains("prediction") ? "prediction" : "text", where);
    if (!out.emplace(id, text).second) throw ParseError(where + ": duplicate id '" + id + "'");
  });
  return out;
}

ScoreResult score_outputs(const Predictions& predictions, const References& references,
                          const Scorer& scorer, int jobs) {
  std::vector<std::string> only_pred, only_ref;
  std::vector<std::string> ids;
  for (const auto& [id, _] : predictions) {
    (references.contains(id) ? ids : only_pred).push_back(id);
  }
  for (const auto& [id, _] : references) {
    if (!predictions.contains(id)) only_ref.push_back(id);
  }
  if (ids.empty()) throw Error("predictions and references share no ids");
  if (!only_pred.empty() || !only_ref.empty()) {
    std::string msg = "prediction/reference id mismatch;";
    auto list = [&](const char* label, const std::vector<std::string>& v) {
      if (v.empty()) return;
      msg += std::string(" ") + label + ":";
      for (const auto& id : v) msg += " " + id;
      msg += ";";
    };
    list("no reference for", only_pred);
    list("no prediction for", only_ref);
    msg.pop_back();
    throw Error(msg);
  }

  std::vector<std::optional<Verdict>> verdicts(ids.size());
  std::vector<std::exception_ptr> errors(ids.size());
  parallel_for(ids.size(), jobs, [&](std::size_t i) {
    try {
      verdicts[i] = scorer.score(predictions.at(ids[i]), references.at(ids[i]));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  // A scorer failure is not a verdict; surface the first one unchanged.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ScoreResult out;
  out.benchmark = references.begin()->second.benchmark;
  out.total = static_cast<int>(ids.size());
  Rational grade_sum = 0;
  bool graded = false;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& v = *verdicts[i];
    if (v.kind == Verdict::Kind::kGraded) {
      graded = true;
      grade_sum += v.grade;
    } else if (v.kind == Verdict::Kind::kPass) {
      ++out.passes;
    }
    out.items.push_back({ids[i], v});
  }
  out.score = graded ? grade_sum / out.total : Rational(100 * out.passes, out.total);
  return out;
}

std::string score_string(const Rational& value, int max_places) {
  std::string s = format_fixed(value, max_places);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s;
}

std::string score_record(const std::string& variant_id, BenchmarkId benchmark,
                         const Rational& score) {
  nlohmann::ordered_json j;
  j["variant_id"] = variant_id;
  j["benchmark"] = std::string(to_string(benchmark));
  j["score"] = score_string(score);
  return dump_line(j);
}

}  // namespace apiward::harness
