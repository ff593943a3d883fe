#include "glov/manifest.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "glov/embedding_file.hpp"
#include "glov/error.hpp"
#include "glov/text.hpp"

namespace glov {
namespace {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const std::filesystem::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() ? base / path : path;
}

std::size_t index_field(const json& obj, const char* key, std::size_t example) {
    const auto& v = obj.at(key);
    if (!non_negative_integer(v)) {
        throw ConfigError(fmt::format("examples[{}].{} must be a non-negative integer", example, key));
    }
    return v.get<std::size_t>();
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
    }
}

}  // namespace

std::vector<std::string> read_class_names(const std::filesystem::path& path) {
    auto lines = split_lines(read_text(path));
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    std::vector<std::string> names;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string name = trim(lines[i]);
        if (name.empty()) {
            throw ConfigError(fmt::format("{}:{}: empty class name", path.string(), i + 1));
        }
        names.push_back(std::move(name));
    }
    return names;
}

std::vector<std::string> manifest_class_names(const std::filesystem::path& manifest_path) {
    const json m = read_json(manifest_path);
    if (!m.is_object() || !m.contains("class_names") || !m["class_names"].is_string()) {
        throw ConfigError(fmt::format("{}: 'class_names' must be a file path string", manifest_path.string()));
    }
    return read_class_names(resolve(manifest_path.parent_path(), m["class_names"].get<std::string>()));
}

LoadedManifest load_manifest(const std::filesystem::path& path, TaskMode mode) {
    const json m = read_json(path);
    const std::string where = path.string();
    if (!m.is_object()) throw ConfigError(fmt::format("{}: manifest must be an object", where));
    check_keys(m, {"name", "description", "class_names", "embeddings", "examples"}, where);
    const auto base = path.parent_path();

    LoadedManifest out;
    out.images = std::make_shared<ImageStore>();
    out.task.mode = mode;
    out.task.name = m.value("name", path.stem().string());
    out.task.description = m.value("description", "");
    out.task.class_names = manifest_class_names(path);

    std::map<std::filesystem::path, EmbeddingTable> tables;
    auto table = [&](const std::filesystem::path& p) -> const EmbeddingTable& {
        auto it = tables.find(p);
        if (it == tables.end()) it = tables.emplace(p, read_embedding_file(p)).first;
        return it->second;
    };
    std::string default_file;
    if (m.contains("embeddings")) {
        if (!m["embeddings"].is_string()) throw ConfigError(fmt::format("{}: 'embeddings' must be a string", where));
        default_file = m["embeddings"].get<std::string>();
    }

    if (!m.contains("examples") || !m["examples"].is_array()) {
        throw ConfigError(fmt::format("{}: 'examples' must be an array", where));
    }
    const auto& examples = m["examples"];
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        if (!ex.is_object()) throw ConfigError(fmt::format("{}: examples[{}] must be an object", where, i));
        check_keys(ex, {"row", "image", "label", "choices"}, fmt::format("{} examples[{}]", where, i));
        if (ex.contains("row") == ex.contains("image")) {
            throw ConfigError(fmt::format("{}: examples[{}] needs exactly one of 'row' and 'image'", where, i));
        }
        if (!ex.contains("label")) throw ConfigError(fmt::format("{}: examples[{}] has no label", where, i));

        LabeledExample le;
        le.label = index_field(ex, "label", i);
        std::string file;
        std::size_t row = 0;
        if (ex.contains("row")) {
            if (default_file.empty()) {
                throw ConfigError(fmt::format("{}: examples[{}] uses 'row' without 'embeddings'", where, i));
            }
            file = default_file;
            row = index_field(ex, "row", i);
        } else {
            if (!ex["image"].is_string()) throw ConfigError(fmt::format("{}: examples[{}].image must be a string", where, i));
            const std::string ref = ex["image"].get<std::string>();
            const auto hash = ref.rfind('#');
            if (hash != std::string::npos) {
                file = ref.substr(0, hash);
                try {
                    row = std::stoul(ref.substr(hash + 1));
                } catch (const std::exception&) {
                    throw ConfigError(fmt::format("{}: examples[{}].image '{}' has a bad row", where, i, ref));
                }
            } else {
                le.image = ref;
            }
        }
        if (!file.empty()) {
            le.image = fmt::format("{}#{}", file, row);
            if (out.images->find(le.image) == nullptr) {
                out.images->put(le.image, table(resolve(base, file)).row(row));
            }
        }
        if (ex.contains("choices")) {
            if (!ex["choices"].is_array()) throw ConfigError(fmt::format("{}: examples[{}].choices must be an array", where, i));
            for (const auto& c : ex["choices"]) {
                if (!non_negative_integer(c)) throw ConfigError(fmt::format("{}: examples[{}].choices must hold indices", where, i));
                le.choices.push_back(c.get<std::size_t>());
            }
        }
        out.task.examples.push_back(std::move(le));
    }
    out.task.validate();
    return out;
}

}  // namespace glov
