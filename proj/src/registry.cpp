#include "glov/registry.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <fmt/format.h>

#include "glov/error.hpp"
#include "glov/surrogate.hpp"
#include "glov/text.hpp"

namespace glov {
namespace {

template <class T>
T option(const nlohmann::json& options, const char* key, T fallback) {
    if (!options.contains(key)) return fallback;
    try {
        return options.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(fmt::format("backend option '{}' has the wrong type", key));
    }
}

std::vector<std::string> read_vocabulary_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read vocabulary file '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    std::vector<std::string> out;
    for (const auto& line : split_lines(ss.str())) {
        std::string t = trim(line);
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

BackendSet make_surrogate(const nlohmann::json& options, const BackendContext& ctx) {
    if (options.contains("vocabulary") && options.contains("vocabulary_file")) {
        throw ConfigError("set at most one of 'vocabulary' and 'vocabulary_file'");
    }
    std::vector<std::string> vocab = default_vocabulary();
    if (options.contains("vocabulary")) {
        vocab = option<std::vector<std::string>>(options, "vocabulary", {});
    } else if (options.contains("vocabulary_file")) {
        std::filesystem::path p = option<std::string>(options, "vocabulary_file", "");
        if (p.is_relative()) p = ctx.base_dir / p;
        vocab = read_vocabulary_file(p);
    }
    const auto dim = option<std::size_t>(options, "dim", kSurrogateDim);
    const auto layers = option<std::size_t>(options, "layers", 1);
    const auto target = option<std::string>(options, "target_phrase", std::string(kDefaultTargetPhrase));
    const auto temperature = option<double>(options, "temperature", 0.0);
    const auto caption_words = option<std::size_t>(options, "caption_words", 3);
    const auto prompt_weight = option<double>(options, "prompt_weight", 0.5);

    auto world = std::make_shared<const SurrogateWorld>(std::move(vocab), dim, target);
    auto images = ctx.images ? ctx.images : std::make_shared<const ImageStore>();

    BackendSet set;
    set.generator = std::make_shared<SurrogateGenerator>(world, layers, temperature);
    set.scorer = std::make_shared<SurrogateScorer>(world, images);
    set.captioner = std::make_shared<SurrogateCaptioner>(world, images, caption_words, prompt_weight);
    set.embedder = std::make_shared<SurrogateEmbedder>(world);
    if (ctx.task == nullptr) set.evaluator_override = std::make_shared<SurrogateTargetEvaluator>(world);
    return set;
}

}  // namespace

void BackendRegistry::add(std::string name, std::vector<std::string> option_keys, Factory factory) {
    if (!factory) throw ConfigError(fmt::format("backend '{}' has no factory", name));
    entries_[std::move(name)] = Entry{std::move(option_keys), std::move(factory)};
}

std::vector<std::string> BackendRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, entry] : entries_) out.push_back(name);
    return out;
}

const std::vector<std::string>& BackendRegistry::option_keys(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError(fmt::format("unknown backend '{}'", name));
    return it->second.option_keys;
}

BackendSet BackendRegistry::create(const std::string& name, const nlohmann::json& options,
                                   const BackendContext& context) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw ConfigError(fmt::format("unknown backend '{}' (known: {})", name,
                                      fmt::join(names(), ", ")));
    }
    if (!options.is_null() && !options.is_object()) {
        throw ConfigError("backend options must be an object");
    }
    if (options.is_object()) {
        const auto& keys = it->second.option_keys;
        for (const auto& [key, value] : options.items()) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                throw ConfigError(fmt::format("unknown option '{}' for backend '{}'", key, name));
            }
        }
    }
    return it->second.factory(options.is_object() ? options : nlohmann::json::object(), context);
}

BackendRegistry BackendRegistry::with_builtins() {
    BackendRegistry r;
    r.add("surrogate",
          {"vocabulary", "vocabulary_file", "dim", "layers", "target_phrase", "temperature",
           "caption_words", "prompt_weight"},
          make_surrogate);
    return r;
}

std::shared_ptr<PromptEvaluator> make_evaluator(const BackendSet& backends, const FewShotTask* task,
                                                double tau, std::uint64_t seed) {
    if (backends.evaluator_override) return backends.evaluator_override;
    if (task == nullptr) throw ConfigError("no task given and the backend defines no fitness");
    if (task->mode == TaskMode::dual_encoder) {
        if (!backends.scorer) throw BackendError("dual_encoder task needs a scorer backend");
        // The evaluator keeps a reference; the shared_ptr aliasing keeps the scorer alive.
        auto holder = std::make_shared<std::pair<std::shared_ptr<Scorer>, DualEncoderEvaluator>>(
            backends.scorer, DualEncoderEvaluator(*task, *backends.scorer, tau));
        return std::shared_ptr<PromptEvaluator>(holder, &holder->second);
    }
    if (!backends.captioner || !backends.embedder) {
        throw BackendError("open-ended task needs captioner and embedder backends");
    }
    struct Holder {
        Holder(std::shared_ptr<Captioner> cap, std::shared_ptr<Embedder> emb, const FewShotTask& t,
               std::uint64_t s)
            : c(std::move(cap)), e(std::move(emb)), eval(t, *c, *e, s) {}
        std::shared_ptr<Captioner> c;
        std::shared_ptr<Embedder> e;
        OpenEndedEvaluator eval;
    };
    auto holder = std::make_shared<Holder>(backends.captioner, backends.embedder, *task, seed);
    return std::shared_ptr<PromptEvaluator>(holder, &holder->eval);
}

}  // namespace glov
