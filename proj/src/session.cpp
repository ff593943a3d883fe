#include "glov/session.hpp"

#include <fmt/core.h>

#include "glov/conformance.hpp"
#include "glov/error.hpp"

namespace glov {

Session open_session(const ResolvedConfig& config, const BackendRegistry& registry,
                     const std::optional<std::filesystem::path>& manifest_override) {
    Session s;
    s.config = config;
    const auto manifest_path = manifest_override ? manifest_override : config.task.manifest;
    if (manifest_path) s.manifest = load_manifest(*manifest_path, config.task.mode);

    BackendContext ctx;
    ctx.task = s.task();
    ctx.images = s.manifest ? s.manifest->images : nullptr;
    ctx.base_dir = config.base_dir;
    s.backends = registry.create(config.backend.name, config.backend.options, ctx);
    if (!s.backends.generator) throw BackendError(fmt::format("backend '{}' has no generator", config.backend.name));

    if (const FewShotTask* task = s.task(); task != nullptr && !s.backends.evaluator_override) {
        const std::string& image = task->examples.front().image;
        if (task->mode == TaskMode::dual_encoder) {
            if (!s.backends.scorer) throw BackendError("dual_encoder task needs a scorer backend");
            check_scorer(*s.backends.scorer, image).throw_if_failed();
        } else {
            if (!s.backends.captioner || !s.backends.embedder) {
                throw BackendError("open-ended task needs captioner and embedder backends");
            }
            check_captioner(*s.backends.captioner, image).throw_if_failed();
            check_embedder(*s.backends.embedder).throw_if_failed();
        }
    }
    s.evaluator = make_evaluator(s.backends, s.task(), config.run.tau, config.run.seed);

    s.setup.config = config.run;
    s.setup.task = TaskDescriptor{config.task.name, config.task.description, config.task.mode};
    s.setup.meta_template =
        config.meta_prompt_template ? load_template(*config.meta_prompt_template) : default_template();
    s.setup.meta_template.validate();
    s.setup.seed_prompts = config.seed_prompts;
    return s;
}

nlohmann::json surrogate_demo_config() {
    return nlohmann::json::parse(R"({
  "task": {
    "name": "synthetic target",
    "description": "find a short phrase that matches a hidden target description",
    "mode": "encoder_decoder"
  },
  "backend": {
    "name": "surrogate",
    "options": {"temperature": 0.5}
  },
  "run": {
    "max_iterations": 30,
    "candidates_per_iter": 10,
    "max_new_tokens": 6,
    "alpha": 1.0,
    "seed": 0
  },
  "seed_prompts": ["a photo of a thing"]
})");
}

}  // namespace glov
