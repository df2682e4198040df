#include "apiward/core/manifest.h"

#include <fstream>
#include <set>

#include "apiward/core/errors.h"

namespace apiward {

using nlohmann::json;

void for_each_jsonl(std::istream& in, const std::string& source,
                    const std::function<void(const json&, int)>& fn) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    fn(record, line_no);
  }
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, int)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  for_each_jsonl(in, path.string(), fn);
}

std::vector<Prompt> parse_manifest(std::istream& in, const std::string& source) {
  std::vector<Prompt> out;
  std::set<std::string> seen;
  for_each_jsonl(in, source, [&](const json& r, int line) {
    auto where = source + ":" + std::to_string(line) + ": ";
    if (!r.is_object() || !r.contains("id") || !r.contains("domain") || !r.contains("text") ||
        !r["id"].is_string() || !r["domain"].is_string() || !r["text"].is_string()) {
      throw ParseError(where + "expected {id, domain, text} string fields");
    }
    Prompt p;
    p.id = r["id"].get<std::string>();
    if (p.id.empty()) throw ParseError(where + "empty prompt id");
    if (!seen.insert(p.id).second) throw ParseError(where + "duplicate prompt id '" + p.id + "'");
    try {
      p.domain = parse_domain(r["domain"].get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError(where + e.what());
    }
    p.text = r["text"].get<std::string>();
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<Prompt> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open manifest " + path.string());
  return parse_manifest(in, path.string());
}

std::string dump_line(const nlohmann::ordered_json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

void write_manifest(const std::filesystem::path& path, const std::vector<Prompt>& prompts) {
  std::vector<std::string> lines;
  lines.reserve(prompts.size());
  for (const auto& p : prompts) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["domain"] = to_string(p.domain);
    j["text"] = p.text;
    lines.push_back(dump_line(j));
  }
  write_lines(path, lines);
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::string content;
  for (const auto& l : lines) {
    content += l;
    content += '\n';
  }
  write_text(path, content);
}

}  // namespace apiward
