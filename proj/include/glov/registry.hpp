#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "glov/fitness.hpp"
#include "glov/interfaces.hpp"

namespace glov {

// What a backend factory may rely on when it is built.
struct BackendContext {
    const FewShotTask* task = nullptr;  // null when the backend supplies its own fitness
    std::shared_ptr<const ImageStore> images;
    std::filesystem::path base_dir;  // relative option paths resolve against this
};

struct BackendSet {
    std::shared_ptr<Generator> generator;
    std::shared_ptr<Scorer> scorer;
    std::shared_ptr<Captioner> captioner;
    std::shared_ptr<Embedder> embedder;
    // Set by backends that define fitness themselves, such as the surrogate
    // target landscape.
    std::shared_ptr<PromptEvaluator> evaluator_override;
};

class BackendRegistry {
public:
    using Factory = std::function<BackendSet(const nlohmann::json& options, const BackendContext&)>;

    // Option keys are declared up front so configs with typos fail early.
    void add(std::string name, std::vector<std::string> option_keys, Factory factory);

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    std::vector<std::string> names() const;
    const std::vector<std::string>& option_keys(const std::string& name) const;

    // Throws ConfigError for an unknown name or option key.
    BackendSet create(const std::string& name, const nlohmann::json& options,
                      const BackendContext& context) const;

    // Registry pre-populated with the built-in "surrogate" backend.
    static BackendRegistry with_builtins();

private:
    struct Entry {
        std::vector<std::string> option_keys;
        Factory factory;
    };
    std::map<std::string, Entry> entries_;
};

// Builds the evaluator matching the task mode, or returns the override.
std::shared_ptr<PromptEvaluator> make_evaluator(const BackendSet& backends, const FewShotTask* task,
                                                double tau, std::uint64_t seed);

}  // namespace glov
