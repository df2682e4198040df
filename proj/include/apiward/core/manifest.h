#pragma once

#include <filesystem>
#include <functional>
#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "apiward/core/types.h"

namespace apiward {

// Calls `fn(record, line_number)` for each nonblank line of a JSONL stream.
void for_each_jsonl(std::istream& in, const std::string& source,
                    const std::function<void(const nlohmann::json&, int)>& fn);
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, int)>& fn);

// Prompt manifest: one {id, domain, text} record per line. Ids must be unique.
std::vector<Prompt> read_manifest(const std::filesystem::path& path);
std::vector<Prompt> parse_manifest(std::istream& in, const std::string& source = "<stream>");
void write_manifest(const std::filesystem::path& path, const std::vector<Prompt>& prompts);

// Replaces `path` atomically with `content`, creating parent directories.
void write_text(const std::filesystem::path& path, std::string_view content);
// Writes `lines` (already serialized) as a JSONL file, replacing it atomically.
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

// Compact single-line JSON with UTF-8 preserved.
std::string dump_line(const nlohmann::ordered_json& j);

}  // namespace apiward
