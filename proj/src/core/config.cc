#include "apiward/core/config.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "apiward/core/errors.h"

namespace apiward {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

bool in_unit_range(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

void check_defense(const DefenseConfig& d, const std::string& where,
                   std::vector<std::string>& out) {
  const bool wants_alpha = d.kind == DefenseKind::kParaphrase;
  const bool wants_rate = d.kind == DefenseKind::kPoison;
  const bool wants_limit = d.kind == DefenseKind::kTokenLimit;

  auto check = [&](bool wanted, bool present, std::string_view name) {
    if (wanted && !present) {
      out.push_back(where + "missing parameter '" + std::string(name) + "' for " +
                    std::string(to_string(d.kind)));
    } else if (!wanted && present) {
      out.push_back(where + "extra parameter '" + std::string(name) + "' for " +
                    std::string(to_string(d.kind)));
    }
  };
  check(wants_alpha, d.alpha.has_value(), "alpha");
  check(wants_rate, d.poison_rate.has_value(), "poison_rate");
  check(wants_limit, d.max_tokens.has_value(), "max_tokens");

  if (d.alpha && !in_unit_range(*d.alpha)) {
    out.push_back(where + "alpha out of range (must be in [0,1])");
  }
  if (d.poison_rate && !in_unit_range(*d.poison_rate)) {
    out.push_back(where + "poison_rate out of range (must be in [0,1])");
  }
  if (d.max_tokens && *d.max_tokens < 1) {
    out.push_back(where + "max_tokens out of range (must be >= 1)");
  }
}

std::vector<ExperimentSpec> make_presets() {
  auto one = [](std::string id, DefenseConfig d) {
    return ExperimentSpec{std::move(id), {d}, 42};
  };
  return {
      one("A01", DefenseConfig::none()),
      one("A02", DefenseConfig::paraphrase(0.3)),
      one("A03", DefenseConfig::paraphrase(0.7)),
      one("A04", DefenseConfig::paraphrase(1.0)),
      one("A05", DefenseConfig::poison(0.05)),
      one("A06", DefenseConfig::poison(0.15)),
      one("A07", DefenseConfig::poison(0.30)),
      one("A08", DefenseConfig::cot_removal()),
      one("A09", DefenseConfig::token_limit(512)),
      one("A10", DefenseConfig::token_limit(1024)),
  };
}

DefenseConfig parse_defense(const json& j, const std::string& where,
                            std::vector<std::string>& problems) {
  DefenseConfig d;
  if (!j.is_object()) {
    problems.push_back(where + "defense must be an object");
    return d;
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") {
      if (!value.is_string()) {
        problems.push_back(where + "kind must be a string");
      } else if (auto k = parse_defense_kind(value.get<std::string>())) {
        d.kind = *k;
      } else {
        problems.push_back(where + "unknown kind '" + value.get<std::string>() + "'");
      }
    } else if (key == "alpha" || key == "poison_rate") {
      if (!value.is_number()) {
        problems.push_back(where + key + " must be a number");
        continue;
      }
      (key == "alpha" ? d.alpha : d.poison_rate) = value.get<double>();
    } else if (key == "max_tokens") {
      if (!value.is_number_integer()) {
        problems.push_back(where + "max_tokens must be an integer");
        continue;
      }
      d.max_tokens = value.get<int>();
    } else {
      problems.push_back(where + "unknown field '" + key + "'");
    }
  }
  if (!j.contains("kind")) problems.push_back(where + "missing field 'kind'");
  return d;
}

}  // namespace

std::vector<std::string> validate_defense(const DefenseConfig& config) {
  std::vector<std::string> out;
  check_defense(config, "", out);
  return out;
}

std::vector<std::string> validate_config(const ExperimentSpec& spec) {
  std::vector<std::string> out;
  if (spec.id.empty()) out.push_back("experiment id is empty");
  for (std::size_t i = 0; i < spec.defenses.size(); ++i) {
    check_defense(spec.defenses[i], "defenses[" + std::to_string(i) + "]: ", out);
  }
  return out;
}

void require_valid(const ExperimentSpec& spec) {
  auto problems = validate_config(spec);
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::span<const ExperimentSpec> presets() {
  static const std::vector<ExperimentSpec> kPresets = make_presets();
  return kPresets;
}

const ExperimentSpec* find_preset(std::string_view id) {
  for (const auto& p : presets()) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

ordered_json to_json(const DefenseConfig& config) {
  ordered_json j;
  j["kind"] = to_string(config.kind);
  if (config.alpha) j["alpha"] = *config.alpha;
  if (config.poison_rate) j["poison_rate"] = *config.poison_rate;
  if (config.max_tokens) j["max_tokens"] = *config.max_tokens;
  return j;
}

ordered_json to_json(const ExperimentSpec& spec) {
  ordered_json j;
  j["id"] = spec.id;
  if (spec.defenses.size() == 1) {
    j["defense"] = to_json(spec.defenses.front());
  } else {
    j["defenses"] = ordered_json::array();
    for (const auto& d : spec.defenses) j["defenses"].push_back(to_json(d));
  }
  j["seed"] = spec.seed;
  return j;
}

DefenseConfig defense_from_json(const json& j) {
  std::vector<std::string> problems;
  DefenseConfig d = parse_defense(j, "", problems);
  check_defense(d, "", problems);
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return d;
}

ExperimentSpec experiment_from_json(const json& j) {
  std::vector<std::string> problems;
  ExperimentSpec spec;
  if (!j.is_object()) throw ConfigError({"experiment spec must be an object"});

  if (auto it = j.find("id"); it != j.end() && it->is_string()) {
    spec.id = it->get<std::string>();
  } else {
    problems.push_back("missing or non-string field 'id'");
  }
  if (auto it = j.find("seed"); it != j.end()) {
    if (it->is_number_unsigned()) {
      spec.seed = it->get<std::uint64_t>();
    } else {
      problems.push_back("seed must be an unsigned integer");
    }
  }
  const bool has_one = j.contains("defense");
  const bool has_many = j.contains("defenses");
  if (has_one == has_many) {
    problems.push_back("exactly one of 'defense' or 'defenses' is required");
  } else if (has_one) {
    spec.defenses.push_back(parse_defense(j["defense"], "defense: ", problems));
  } else if (!j["defenses"].is_array()) {
    problems.push_back("'defenses' must be an array");
  } else {
    for (std::size_t i = 0; i < j["defenses"].size(); ++i) {
      spec.defenses.push_back(
          parse_defense(j["defenses"][i], "defenses[" + std::to_string(i) + "]: ", problems));
    }
  }
  for (const auto& [key, _] : j.items()) {
    if (key != "id" && key != "seed" && key != "defense" && key != "defenses") {
      problems.push_back("unknown field '" + key + "'");
    }
  }
  if (problems.empty()) problems = validate_config(spec);
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return spec;
}

ExperimentSpec resolve_experiment(std::string_view id_or_path) {
  if (const auto* p = find_preset(id_or_path)) return *p;
  const std::filesystem::path path(id_or_path);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw ConfigError({"unknown experiment '" + std::string(id_or_path) +
                       "' (not a preset id A01-A10 and not a readable file)"});
  }
  std::ifstream in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  return experiment_from_json(j);
}

std::string describe_presets() {
  std::ostringstream os;
  for (const auto& p : presets()) {
    os << "  " << p.id << "  " << p.category();
    os << std::string(14 - p.category().size(), ' ');
    for (const auto& d : p.defenses) os << d.label();
    os << "\n";
  }
  return os.str();
}

}  // namespace apiward
