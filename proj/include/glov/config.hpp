#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glov/core.hpp"

namespace glov {

struct TaskSection {
    std::string name;
    std::string description;
    TaskMode mode = TaskMode::dual_encoder;
    std::optional<std::filesystem::path> manifest;  // absent: the backend defines fitness

    friend bool operator==(const TaskSection&, const TaskSection&) = default;
};

struct BackendSection {
    std::string name = "surrogate";
    nlohmann::json options = nlohmann::json::object();

    friend bool operator==(const BackendSection&, const BackendSection&) = default;
};

// Everything a run needs, with every default filled in and every path absolute.
struct ResolvedConfig {
    RunConfig run;
    TaskSection task;
    BackendSection backend;
    std::optional<std::filesystem::path> meta_prompt_template;
    std::vector<std::string> seed_prompts;
    std::filesystem::path log_dir;
    std::filesystem::path base_dir;  // backend option paths resolve against this

    friend bool operator==(const ResolvedConfig&, const ResolvedConfig&) = default;
};

// Parses JSON text, rejecting duplicate object keys. Throws ConfigError.
nlohmann::json parse_json_strict(const std::string& text, const std::string& origin);

// Unknown keys, wrong types and invalid values throw ConfigError naming the
// key. Relative paths resolve against base_dir.
ResolvedConfig resolve_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ResolvedConfig load_config(const std::filesystem::path& path);

// load(to_json(c)) == c.
nlohmann::json to_json(const ResolvedConfig& config);

nlohmann::json steering_mode_to_json(const SteeringMode& mode);

}  // namespace glov
