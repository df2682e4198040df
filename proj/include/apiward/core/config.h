#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "apiward/core/types.h"

namespace apiward {

// Every invariant violation in `spec`; empty means valid.
std::vector<std::string> validate_config(const ExperimentSpec& spec);
std::vector<std::string> validate_defense(const DefenseConfig& config);

// Throws ConfigError listing all problems.
void require_valid(const ExperimentSpec& spec);

// The built-in experiment grid A01..A10.
std::span<const ExperimentSpec> presets();
const ExperimentSpec* find_preset(std::string_view id);

nlohmann::ordered_json to_json(const DefenseConfig& config);
nlohmann::ordered_json to_json(const ExperimentSpec& spec);

// Parsing collects schema problems (unknown kind, wrong types, missing or
// extra parameters) and throws a single ConfigError with all of them.
DefenseConfig defense_from_json(const nlohmann::json& j);
ExperimentSpec experiment_from_json(const nlohmann::json& j);

// Resolves a preset id ("A08") or a path to an experiment spec file.
ExperimentSpec resolve_experiment(std::string_view id_or_path);

// One line per preset with its parameters, for --help output.
std::string describe_presets();

}  // namespace apiward
