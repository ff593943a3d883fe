#pragma once

#include <memory>
#include <optional>

#include <json.hpp>

#include "glov/config.hpp"
#include "glov/manifest.hpp"
#include "glov/optimizer.hpp"
#include "glov/registry.hpp"

namespace glov {

// Backends, task and optimizer setup built from one resolved config.
struct Session {
    ResolvedConfig config;
    std::optional<LoadedManifest> manifest;
    BackendSet backends;
    std::shared_ptr<PromptEvaluator> evaluator;
    OptimizerSetup setup;

    Backends refs() { return Backends{*backends.generator, *evaluator}; }
    const FewShotTask* task() const { return manifest ? &manifest->task : nullptr; }
};

// Loads the manifest, builds the backends, checks their contracts and the
// meta-prompt template. `manifest_override` replaces the configured manifest.
Session open_session(const ResolvedConfig& config, const BackendRegistry& registry,
                     const std::optional<std::filesystem::path>& manifest_override = std::nullopt);

// The configuration used by the surrogate demo, as written in
// data/surrogate/demo.json.
nlohmann::json surrogate_demo_config();

}  // namespace glov
