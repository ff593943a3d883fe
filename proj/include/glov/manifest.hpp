#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "glov/fitness.hpp"
#include "glov/interfaces.hpp"

namespace glov {

// True for JSON integers >= 0, whether the parser stored them signed or not.
inline bool non_negative_integer(const nlohmann::json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// A labeled example set on disk, as JSON:
//   {"name": ..., "description": ...,
//    "class_names": "classes.txt",          one name per line, order = index
//    "embeddings": "images.emb",            optional default embedding file
//    "examples": [{"row": 0, "label": 2},   row of the default file
//                 {"image": "x.emb#3", "label": 1, "choices": [0, 1, 4]},
//                 {"image": "photo.jpg", "label": 0}]}   opaque, for live backends
// Paths are relative to the manifest's directory.
struct LoadedManifest {
    FewShotTask task;
    std::shared_ptr<ImageStore> images;
};

// Reads only the class-name list a manifest refers to.
std::vector<std::string> read_class_names(const std::filesystem::path& path);
std::vector<std::string> manifest_class_names(const std::filesystem::path& manifest_path);

// Throws ConfigError for schema problems, IoError/ParseError for unreadable
// files, ValidationError when the task is inconsistent for the mode.
LoadedManifest load_manifest(const std::filesystem::path& path, TaskMode mode);

}  // namespace glov
