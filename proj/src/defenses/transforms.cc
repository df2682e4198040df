#include "apiward/defenses/transforms.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <vector>

#include "apiward/core/errors.h"
#include "apiward/core/seed.h"

namespace apiward::defenses {

namespace {

constexpr std::string_view kWhitespace = " \t\r\n\f\v";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(kWhitespace);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(kWhitespace);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

// Removes surrounding whitespace, markdown bold, $...$ and trailing sentence
// punctuation from an extracted answer.
std::string_view clean_answer(std::string_view s) {
  for (;;) {
    const auto before = s;
    s = trim(s);
    while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';')) {
      s.remove_suffix(1);
      s = trim(s);
    }
    if (s.size() >= 4 && s.starts_with("**") && s.ends_with("**")) s = s.substr(2, s.size() - 4);
    if (s.size() >= 2 && s.front() == '$' && s.back() == '$') s = s.substr(1, s.size() - 2);
    if (s == before) return s;
  }
}

// Content of the last \boxed{...} with balanced braces, if any.
std::optional<std::string_view> last_boxed(std::string_view text) {
  std::optional<std::string_view> found;
  std::size_t found_at = 0;
  for (std::string_view marker : {std::string_view("\\boxed{"), std::string_view("\\fbox{")}) {
    std::size_t pos = text.rfind(marker);
    while (pos != std::string_view::npos) {
      const std::size_t open = pos + marker.size();
      int depth = 1;
      std::size_t i = open;
      for (; i < text.size() && depth > 0; ++i) {
        if (text[i] == '{') ++depth;
        if (text[i] == '}') --depth;
      }
      if (depth == 0) {
        if (!found || pos > found_at) {
          found = text.substr(open, i - 1 - open);
          found_at = pos;
        }
        break;
      }
      if (pos == 0) break;
      pos = text.rfind(marker, pos - 1);
    }
  }
  return found;
}

std::size_t rfind_icase(std::string_view hay, std::string_view needle) {
  if (needle.size() > hay.size()) return std::string_view::npos;
  for (std::size_t i = hay.size() - needle.size() + 1; i-- > 0;) {
    bool eq = true;
    for (std::size_t k = 0; k < needle.size() && eq; ++k) {
      eq = std::tolower(static_cast<unsigned char>(hay[i + k])) == needle[k];
    }
    if (eq) return i;
  }
  return std::string_view::npos;
}

// Up to the end of the line or the first sentence-ending period (a '.'
// followed by whitespace or the end of the line).
std::string_view clause_after(std::string_view text, std::size_t pos) {
  std::string_view rest = text.substr(pos);
  if (auto nl = rest.find('\n'); nl != std::string_view::npos) rest = rest.substr(0, nl);
  for (std::size_t i = 0; i < rest.size(); ++i) {
    if (rest[i] == '.' &&
        (i + 1 == rest.size() || std::isspace(static_cast<unsigned char>(rest[i + 1])))) {
      return rest.substr(0, i);
    }
  }
  return rest;
}

bool is_c_family(std::string_view lang) {
  static constexpr std::string_view kLangs[] = {
      "c", "cpp", "c++", "cc", "h", "hpp", "java", "javascript", "js", "ts", "typescript",
      "go", "rust", "rs", "cs", "csharp", "kotlin", "swift", "scala"};
  return std::find(std::begin(kLangs), std::end(kLangs), lang) != std::end(kLangs);
}

// Strips a trailing comment outside string literals. Returns the kept prefix.
std::string_view strip_line_comment(std::string_view line, std::string_view marker) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '"' || c == '\'' || (c == '`' && marker == "//")) {
      quote = c;
      continue;
    }
    if (line.substr(i).starts_with(marker)) return line.substr(0, i);
  }
  return line;
}

std::string strip_comments(std::string_view code, std::string_view lang) {
  const bool c_family = is_c_family(lang);
  std::vector<std::string> kept;
  std::string_view doc_delim;
  bool in_block = false;

  for (auto line : lines_of(code)) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto stripped = trim(line);
    if (c_family) {
      std::string out;
      std::string_view rest = line;
      while (!rest.empty()) {
        if (in_block) {
          auto end = rest.find("*/");
          if (end == std::string_view::npos) {
            rest = {};
          } else {
            rest = rest.substr(end + 2);
            in_block = false;
          }
          continue;
        }
        auto kept_part = strip_line_comment(rest, "/*");
        auto no_line = strip_line_comment(kept_part, "//");
        if (no_line.size() < kept_part.size()) {
          out += no_line;
          rest = {};
        } else if (kept_part.size() < rest.size()) {
          out += kept_part;
          rest = rest.substr(kept_part.size() + 2);
          in_block = true;
        } else {
          out += rest;
          rest = {};
        }
      }
      auto t = out.find_last_not_of(kWhitespace);
      out.erase(t == std::string::npos ? 0 : t + 1);
      if (!out.empty() || stripped.empty()) kept.push_back(out);
      continue;
    }

    // Python-style: '#' comments and standalone docstrings.
    if (!doc_delim.empty()) {
      if (stripped.find(doc_delim) != std::string_view::npos) doc_delim = {};
      continue;
    }
    if (stripped.starts_with("\"\"\"") || stripped.starts_with("'''")) {
      const auto delim = stripped.substr(0, 3);
      if (stripped.size() < 6 || stripped.substr(3).find(delim) == std::string_view::npos) {
        doc_delim = delim;
      }
      continue;
    }
    auto code_part = strip_line_comment(line, "#");
    auto t = code_part.find_last_not_of(kWhitespace);
    code_part = t == std::string_view::npos ? std::string_view{} : code_part.substr(0, t + 1);
    if (!code_part.empty() || stripped.empty()) kept.emplace_back(code_part);
  }

  while (!kept.empty() && kept.front().empty()) kept.erase(kept.begin());
  while (!kept.empty() && kept.back().empty()) kept.pop_back();
  std::string out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (i) out += '\n';
    out += kept[i];
  }
  return out;
}

}  // namespace

double paraphrase_tier(double alpha) {
  if (!std::isfinite(alpha) || alpha < 0.0 || alpha > 1.0) {
    throw ConfigError({"alpha out of range (must be in [0,1])"});
  }
  if (alpha == 0.0) return 0.0;
  if (alpha < 0.5) return 0.3;
  if (alpha < 0.85) return 0.7;
  return 1.0;
}

std::string_view paraphrase_system_prompt(double alpha) {
  const double tier = paraphrase_tier(alpha);
  if (tier == 0.3) return kParaphraseLight;
  if (tier == 0.7) return kParaphraseSubstantial;
  if (tier == 1.0) return kParaphraseComplete;
  return {};
}

std::string paraphrase(std::string_view response, double alpha, UpstreamClient& paraphraser,
                       const GenerationParams& params) {
  if (paraphrase_tier(alpha) == 0.0) return std::string(response);
  GenerationParams greedy = params;
  greedy.temperature = 0.0;
  return paraphraser.complete(paraphrase_system_prompt(alpha), response, greedy);
}

bool poison_decision(std::string_view prompt_id, std::uint64_t global_seed, double rate) {
  return unit_interval(derive_seed(global_seed, prompt_id)) < rate;
}

std::string corrupt(const Prompt& prompt, UpstreamClient& teacher, const GenerationParams& params) {
  GenerationParams greedy = params;
  greedy.temperature = 0.0;
  return teacher.complete(kCorruptionPrompt, prompt.text, greedy);
}

std::string last_nonempty_line(std::string_view response) {
  const auto lines = lines_of(response);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (!is_blank(*it)) return std::string(trim(*it));
  }
  return std::string(response);
}

std::string extract_math_answer_once(std::string_view response) {
  std::string_view answer;
  if (auto boxed = last_boxed(response)) {
    answer = clean_answer(*boxed);
  }
  if (answer.empty()) {
    static constexpr std::string_view kPhrase = "the answer is";
    if (auto pos = rfind_icase(response, kPhrase); pos != std::string_view::npos) {
      auto clause = clause_after(response, pos + kPhrase.size());
      clause = trim(clause);
      if (clause.starts_with(':')) clause.remove_prefix(1);
      answer = clean_answer(clause);
    }
  }
  if (answer.empty()) {
    if (auto eq = response.rfind('='); eq != std::string_view::npos) {
      answer = clean_answer(clause_after(response, eq + 1));
    }
  }
  if (answer.empty()) return last_nonempty_line(response);
  return std::string(answer);
}

std::string extract_math_answer(std::string_view response) {
  std::string current(response);
  for (;;) {
    std::string next = extract_math_answer_once(current);
    if (next == current) return current;
    current = std::move(next);
  }
}

std::string extract_code(std::string_view response) {
  const auto lines = lines_of(response);
  std::size_t open = lines.size();
  std::string_view lang;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto t = trim(lines[i]);
    if (t.starts_with("```")) {
      open = i;
      lang = trim(t.substr(3));
      break;
    }
  }
  if (open == lines.size()) return last_nonempty_line(response);

  std::string body;
  for (std::size_t i = open + 1; i < lines.size(); ++i) {
    if (trim(lines[i]).starts_with("```")) break;
    body.append(lines[i]);
    body.push_back('\n');
  }
  std::string lang_lower(lang);
  std::transform(lang_lower.begin(), lang_lower.end(), lang_lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  std::string code = strip_comments(body, lang_lower);
  if (is_blank(code)) return last_nonempty_line(response);
  return code;
}

std::string last_paragraph(std::string_view response) {
  const auto lines = lines_of(response);
  std::size_t end = lines.size();
  while (end > 0 && is_blank(lines[end - 1])) --end;
  if (end == 0) return std::string(response);
  std::size_t begin = end;
  while (begin > 0 && !is_blank(lines[begin - 1])) --begin;
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back('\n');
    out.append(lines[i]);
  }
  return std::string(trim(out));
}

std::string strip_cot(std::string_view response, Domain domain) {
  std::string out;
  switch (domain) {
    case Domain::kMath: out = extract_math_answer(response); break;
    case Domain::kCode: out = extract_code(response); break;
    case Domain::kOpenEnded: out = last_paragraph(response); break;
  }
  if (is_blank(out)) return last_nonempty_line(response);
  return out;
}

std::string truncate_tokens(std::string_view response, int limit, const Tokenizer& tokenizer) {
  if (limit < 1) throw ConfigError({"token limit must be >= 1"});
  auto ids = tokenizer.encode(response);
  if (ids.size() <= static_cast<std::size_t>(limit)) return std::string(response);
  return tokenizer.decode(std::span<const TokenId>(ids).first(static_cast<std::size_t>(limit)));
}

}  // namespace apiward::defenses
