#include "glov/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include <fmt/core.h>

#include "glov/error.hpp"
#include "glov/manifest.hpp"
#include "glov/optimizer.hpp"

namespace glov {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                std::string_view prefix) {
    if (!obj.is_object()) throw ConfigError(fmt::format("'{}' must be an object", prefix));
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) {
            throw ConfigError(prefix.empty() ? fmt::format("unknown key '{}'", key)
                                             : fmt::format("unknown key '{}.{}'", prefix, key));
        }
    }
}

std::string dotted(std::string_view prefix, std::string_view key) {
    return prefix.empty() ? std::string(key) : fmt::format("{}.{}", prefix, key);
}

std::size_t get_count(const json& obj, std::string_view prefix, const char* key) {
    const auto& v = obj.at(key);
    if (!non_negative_integer(v)) {
        throw ConfigError(fmt::format("'{}' must be a non-negative integer", dotted(prefix, key)));
    }
    return v.get<std::size_t>();
}

double get_real(const json& obj, std::string_view prefix, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(fmt::format("'{}' must be a number", dotted(prefix, key)));
    return v.get<double>();
}

std::string get_string(const json& obj, std::string_view prefix, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(fmt::format("'{}' must be a string", dotted(prefix, key)));
    return v.get<std::string>();
}

fs::path absolute_path(const fs::path& base, const std::string& p) {
    fs::path path(p);
    if (path.is_relative()) path = base / path;
    return path.lexically_normal();
}

SteeringMode parse_steering(const json& v) {
    SteeringMode mode;
    if (v.is_string()) {
        mode.kind = parse_steering_kind(v.get<std::string>());
        return mode;
    }
    check_keys(v, {"kind", "prefix_tokens"}, "run.steering_mode");
    if (!v.contains("kind")) throw ConfigError("'run.steering_mode.kind' is required");
    mode.kind = parse_steering_kind(get_string(v, "run.steering_mode", "kind"));
    if (v.contains("prefix_tokens")) {
        if (mode.kind != SteeringMode::Kind::actadd_first_n) {
            throw ConfigError("'run.steering_mode.prefix_tokens' only applies to actadd_first_n");
        }
        mode.prefix_tokens = get_count(v, "run.steering_mode", "prefix_tokens");
    }
    return mode;
}

}  // namespace

json parse_json_strict(const std::string& text, const std::string& origin) {
    std::vector<std::set<std::string>> seen;
    json::parser_callback_t cb = [&](int /*depth*/, json::parse_event_t event, json& parsed) {
        switch (event) {
            case json::parse_event_t::object_start: seen.emplace_back(); break;
            case json::parse_event_t::object_end: seen.pop_back(); break;
            case json::parse_event_t::key: {
                const auto key = parsed.get<std::string>();
                if (!seen.back().insert(key).second) {
                    throw ConfigError(fmt::format("{}: duplicate key '{}'", origin, key));
                }
                break;
            }
            default: break;
        }
        return true;
    };
    try {
        return json::parse(text, cb);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("{}: invalid JSON: {}", origin, e.what()));
    }
}

ResolvedConfig resolve_config(const json& doc, const fs::path& base_dir_in) {
    check_keys(doc, {"task", "backend", "run", "meta_prompt_template", "seed_prompts", "log_dir", "base_dir"}, "");
    ResolvedConfig c;
    c.base_dir = doc.contains("base_dir") ? absolute_path(base_dir_in, get_string(doc, "", "base_dir"))
                                          : base_dir_in.lexically_normal();
    const fs::path& base = c.base_dir;

    // task
    const json task = doc.value("task", json::object());
    check_keys(task, {"name", "description", "mode", "manifest"}, "task");
    if (task.contains("mode")) c.task.mode = parse_task_mode(get_string(task, "task", "mode"));
    std::vector<std::string> classes;
    std::string manifest_name;
    std::string manifest_description;
    if (task.contains("manifest")) {
        c.task.manifest = absolute_path(base, get_string(task, "task", "manifest"));
        classes = manifest_class_names(*c.task.manifest);
        std::ifstream in(*c.task.manifest);
        std::stringstream ss;
        ss << in.rdbuf();
        const json m = json::parse(ss.str(), nullptr, false);
        if (m.is_object()) {
            manifest_name = m.value("name", c.task.manifest->stem().string());
            manifest_description = m.value("description", "");
        }
    }
    c.task.name = task.contains("name") ? get_string(task, "task", "name")
                  : !manifest_name.empty() ? manifest_name
                                           : std::string("synthetic target");
    c.task.description = task.contains("description") ? get_string(task, "task", "description")
                         : !manifest_description.empty()
                             ? manifest_description
                             : std::string("find a prompt whose wording matches the hidden target");

    // backend
    const json backend = doc.value("backend", json::object());
    check_keys(backend, {"name", "options"}, "backend");
    if (backend.contains("name")) c.backend.name = get_string(backend, "backend", "name");
    if (backend.contains("options")) {
        if (!backend["options"].is_object()) throw ConfigError("'backend.options' must be an object");
        c.backend.options = backend["options"];
    }

    // run
    const json run = doc.value("run", json::object());
    check_keys(run, {"k", "candidates_per_iter", "max_iterations", "max_new_tokens", "alpha",
                     "layer_index", "steering_mode", "tau", "seed", "ensemble_size", "patience",
                     "alpha_grid", "threads"},
               "run");
    RunConfig& r = c.run;
    r.candidates_per_iter = default_candidates_per_iter(c.task.mode);
    r.max_iterations = default_max_iterations(c.task.mode, classes.size());
    if (run.contains("k")) r.k = get_count(run, "run", "k");
    if (run.contains("candidates_per_iter")) r.candidates_per_iter = get_count(run, "run", "candidates_per_iter");
    if (run.contains("max_iterations")) r.max_iterations = get_count(run, "run", "max_iterations");
    if (run.contains("max_new_tokens")) r.max_new_tokens = get_count(run, "run", "max_new_tokens");
    if (run.contains("alpha")) r.alpha = get_real(run, "run", "alpha");
    if (run.contains("layer_index") && !run["layer_index"].is_null()) {
        r.layer_index = static_cast<int>(get_count(run, "run", "layer_index"));
    }
    if (run.contains("steering_mode")) r.steering_mode = parse_steering(run["steering_mode"]);
    if (run.contains("tau")) r.tau = get_real(run, "run", "tau");
    if (run.contains("seed")) {
        if (!non_negative_integer(run["seed"])) throw ConfigError("'run.seed' must be a non-negative integer");
        r.seed = run["seed"].get<std::uint64_t>();
    }
    if (run.contains("ensemble_size")) r.ensemble_size = get_count(run, "run", "ensemble_size");
    if (run.contains("patience") && !run["patience"].is_null()) r.patience = get_count(run, "run", "patience");
    if (run.contains("alpha_grid")) {
        if (!run["alpha_grid"].is_array()) throw ConfigError("'run.alpha_grid' must be an array of numbers");
        r.alpha_grid.clear();
        for (const auto& a : run["alpha_grid"]) {
            if (!a.is_number()) throw ConfigError("'run.alpha_grid' must be an array of numbers");
            r.alpha_grid.push_back(a.get<double>());
        }
    }
    if (run.contains("threads")) r.threads = get_count(run, "run", "threads");
    try {
        r.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("run.{}", e.what()));
    }

    // the rest
    if (doc.contains("meta_prompt_template") && !doc["meta_prompt_template"].is_null()) {
        c.meta_prompt_template = absolute_path(base, get_string(doc, "", "meta_prompt_template"));
    }
    if (doc.contains("seed_prompts")) {
        const auto& s = doc["seed_prompts"];
        if (!s.is_array() || s.empty()) throw ConfigError("'seed_prompts' must be a non-empty array of strings");
        for (const auto& p : s) {
            if (!p.is_string()) throw ConfigError("'seed_prompts' must be a non-empty array of strings");
            c.seed_prompts.push_back(p.get<std::string>());
        }
    } else {
        c.seed_prompts.push_back(default_seed_prompt(c.task.mode));
    }
    c.log_dir = absolute_path(base, doc.contains("log_dir") ? get_string(doc, "", "log_dir") : "runs");
    return c;
}

ResolvedConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    const json doc = parse_json_strict(ss.str(), path.string());
    return resolve_config(doc, fs::absolute(path).parent_path());
}

json steering_mode_to_json(const SteeringMode& mode) {
    if (!mode.prefix_tokens) return std::string(to_string(mode.kind));
    return json{{"kind", to_string(mode.kind)}, {"prefix_tokens", *mode.prefix_tokens}};
}

json to_json(const ResolvedConfig& c) {
    const RunConfig& r = c.run;
    json run{{"k", r.k},
             {"candidates_per_iter", r.candidates_per_iter},
             {"max_iterations", r.max_iterations},
             {"max_new_tokens", r.max_new_tokens},
             {"alpha", r.alpha},
             {"layer_index", r.layer_index ? json(*r.layer_index) : json(nullptr)},
             {"steering_mode", steering_mode_to_json(r.steering_mode)},
             {"tau", r.tau},
             {"seed", r.seed},
             {"ensemble_size", r.ensemble_size},
             {"patience", r.patience ? json(*r.patience) : json(nullptr)},
             {"alpha_grid", r.alpha_grid},
             {"threads", r.threads}};
    json task{{"name", c.task.name}, {"description", c.task.description}, {"mode", to_string(c.task.mode)}};
    if (c.task.manifest) task["manifest"] = c.task.manifest->string();
    json doc{{"base_dir", c.base_dir.string()},
             {"task", task},
             {"backend", {{"name", c.backend.name}, {"options", c.backend.options}}},
             {"run", run},
             {"seed_prompts", c.seed_prompts},
             {"log_dir", c.log_dir.string()}};
    if (c.meta_prompt_template) doc["meta_prompt_template"] = c.meta_prompt_template->string();
    return doc;
}

}  // namespace glov
