#include "glov/core.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/core.h>

#include "glov/error.hpp"
#include "glov/text.hpp"

namespace glov {

std::string_view to_string(TaskMode mode) {
    switch (mode) {
        case TaskMode::dual_encoder: return "dual_encoder";
        case TaskMode::encoder_decoder: return "encoder_decoder";
        case TaskMode::multiple_choice: return "multiple_choice";
    }
    return "unknown";
}

TaskMode parse_task_mode(std::string_view name) {
    if (name == "dual_encoder") return TaskMode::dual_encoder;
    if (name == "encoder_decoder") return TaskMode::encoder_decoder;
    if (name == "multiple_choice") return TaskMode::multiple_choice;
    throw ConfigError(fmt::format("unknown task mode '{}'", name));
}

std::string_view to_string(SteeringMode::Kind kind) {
    switch (kind) {
        case SteeringMode::Kind::last_token: return "last_token";
        case SteeringMode::Kind::all_tokens: return "all_tokens";
        case SteeringMode::Kind::last_token_source: return "last_token_source";
        case SteeringMode::Kind::actadd_first_n: return "actadd_first_n";
    }
    return "unknown";
}

SteeringMode::Kind parse_steering_kind(std::string_view name) {
    if (name == "last_token") return SteeringMode::Kind::last_token;
    if (name == "all_tokens") return SteeringMode::Kind::all_tokens;
    if (name == "last_token_source") return SteeringMode::Kind::last_token_source;
    if (name == "actadd_first_n") return SteeringMode::Kind::actadd_first_n;
    throw ConfigError(fmt::format("unknown steering mode '{}'", name));
}

bool ranks_before(const PromptCandidate& a, const PromptCandidate& b) {
    const double fa = a.fitness.value_or(-1.0);
    const double fb = b.fitness.value_or(-1.0);
    if (fa != fb) return fa > fb;
    if (a.iteration != b.iteration) return a.iteration < b.iteration;
    return a.text < b.text;
}

bool ranks_before_ascending(const PromptCandidate& a, const PromptCandidate& b) {
    const double fa = a.fitness.value_or(-1.0);
    const double fb = b.fitness.value_or(-1.0);
    if (fa != fb) return fa < fb;
    if (a.iteration != b.iteration) return a.iteration < b.iteration;
    return a.text < b.text;
}

HistoryBuffer::AddReport HistoryBuffer::add_scored(std::span<const PromptCandidate> scored) {
    for (const auto& c : scored) {
        if (!c.fitness) {
            throw HistoryError(fmt::format("candidate '{}' has no fitness", c.text));
        }
        if (!(*c.fitness >= 0.0 && *c.fitness <= 1.0)) {
            throw HistoryError(
                fmt::format("candidate '{}' has fitness {} outside [0, 1]", c.text, *c.fitness));
        }
        if (normalize_text(c.text).empty()) {
            throw HistoryError("candidate text is empty after trimming");
        }
    }

    AddReport report;
    for (const auto& c : scored) {
        std::string key = normalize_text(c.text);
        if (index_.contains(key)) {
            report.skipped.push_back(std::move(key));
            continue;
        }
        PromptCandidate entry = c;
        entry.text = key;
        index_.emplace(std::move(key), entries_.size());
        entries_.push_back(std::move(entry));
        ++report.added;
    }
    return report;
}

const PromptCandidate* HistoryBuffer::find(std::string_view text) const {
    auto it = index_.find(normalize_text(text));
    return it == index_.end() ? nullptr : &entries_[it->second];
}

std::optional<double> HistoryBuffer::best_fitness() const {
    std::optional<double> best;
    for (const auto& e : entries_) {
        if (!best || *e.fitness > *best) best = e.fitness;
    }
    return best;
}

namespace {

template <typename Less>
std::vector<PromptCandidate> first_n(const HistoryBuffer& history, std::size_t n, Less less) {
    const auto& entries = history.entries();
    n = std::min(n, entries.size());
    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::size_t a, std::size_t b) { return less(entries[a], entries[b]); });
    std::vector<PromptCandidate> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(entries[order[i]]);
    return out;
}

}  // namespace

TopBottom top_bottom(const HistoryBuffer& history, std::size_t k) {
    if (history.empty()) throw HistoryError("top_bottom on an empty history");
    if (k == 0) throw HistoryError("top_bottom needs k >= 1");
    return {first_n(history, k, ranks_before), first_n(history, k, ranks_before_ascending)};
}

std::vector<PromptCandidate> top_n(const HistoryBuffer& history, std::size_t n) {
    return first_n(history, n, ranks_before);
}

GuidancePair best_pair(const HistoryBuffer& history) {
    if (history.size() < 2) {
        throw HistoryError(
            fmt::format("guidance pair needs at least 2 scored prompts, history has {}",
                        history.size()));
    }
    auto best = first_n(history, 2, ranks_before);
    return {best[0].text, best[1].text, *best[0].fitness, *best[1].fitness};
}

void RunConfig::validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (candidates_per_iter < 2) {
        throw ConfigError("candidates_per_iter must be >= 2 (guidance needs best and second-best)");
    }
    if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be >= 1");
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (ensemble_size < 1) throw ConfigError("ensemble_size must be >= 1");
    if (layer_index && *layer_index < 0) throw ConfigError("layer_index must be >= 0");
    if (patience && *patience < 1) throw ConfigError("patience must be >= 1 when set");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (alpha_grid.empty()) throw ConfigError("alpha_grid must not be empty");
    for (double a : alpha_grid) {
        if (!(a >= 0.0)) throw ConfigError("alpha_grid values must be >= 0");
    }
    if (steering_mode.prefix_tokens && *steering_mode.prefix_tokens < 1) {
        throw ConfigError("steering_mode.prefix_tokens must be >= 1 when set");
    }
}

std::size_t default_candidates_per_iter(TaskMode mode) {
    return mode == TaskMode::dual_encoder ? 10 : 5;
}

std::size_t default_max_iterations(TaskMode mode, std::size_t num_classes) {
    if (num_classes >= 1000) return 25;
    return mode == TaskMode::dual_encoder ? 100 : 50;
}

}  // namespace glov
