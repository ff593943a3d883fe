#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace glov {

enum class TaskMode { dual_encoder, encoder_decoder, multiple_choice };

std::string_view to_string(TaskMode mode);
TaskMode parse_task_mode(std::string_view name);

// Where the guidance offset is added during generation, and which tokens the
// positive/negative sentence embeddings are built from.
struct SteeringMode {
    enum class Kind {
        last_token,         // mean-token embeddings, offset on the newest position
        all_tokens,         // mean-token embeddings, offset on every position
        last_token_source,  // last-token embeddings, offset on the newest position
        actadd_first_n,     // mean-token embeddings, offset on the first n positions
    };

    Kind kind = Kind::last_token;
    // Only meaningful for actadd_first_n. Unset means "token count of the
    // positive prompt", resolved when the guidance pair is embedded.
    std::optional<std::size_t> prefix_tokens;

    friend bool operator==(const SteeringMode&, const SteeringMode&) = default;
};

std::string_view to_string(SteeringMode::Kind kind);
SteeringMode::Kind parse_steering_kind(std::string_view name);

struct PromptCandidate {
    std::string text;
    std::optional<double> fitness;
    std::size_t iteration = 0;
    bool steered = false;

    friend bool operator==(const PromptCandidate&, const PromptCandidate&) = default;
};

struct GuidancePair {
    std::string positive;
    std::string negative;
    double positive_fitness = 0.0;
    double negative_fitness = 0.0;

    friend bool operator==(const GuidancePair&, const GuidancePair&) = default;
};

// Total order used everywhere a ranking is needed: higher fitness first, then
// the earlier iteration, then the lexicographically smaller text.
bool ranks_before(const PromptCandidate& a, const PromptCandidate& b);

// Same tie-breaks, but lower fitness first.
bool ranks_before_ascending(const PromptCandidate& a, const PromptCandidate& b);

// Global, append-only record of every scored prompt. Entries are keyed by
// normalized text (whitespace collapsed, case kept) and never re-scored.
class HistoryBuffer {
public:
    struct AddReport {
        std::size_t added = 0;
        std::vector<std::string> skipped;  // normalized texts already present
    };

    // All-or-nothing: a candidate without fitness (or with fitness outside
    // [0, 1]) rejects the whole batch before anything is inserted.
    AddReport add_scored(std::span<const PromptCandidate> scored);

    const std::vector<PromptCandidate>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    const PromptCandidate* find(std::string_view text) const;
    bool contains(std::string_view text) const { return find(text) != nullptr; }

    std::optional<double> best_fitness() const;

    friend bool operator==(const HistoryBuffer& a, const HistoryBuffer& b) {
        return a.entries_ == b.entries_;
    }

private:
    std::vector<PromptCandidate> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct TopBottom {
    std::vector<PromptCandidate> tops;     // best first
    std::vector<PromptCandidate> bottoms;  // worst first
};

TopBottom top_bottom(const HistoryBuffer& history, std::size_t k);

// First n entries under ranks_before, clamped to the history size.
std::vector<PromptCandidate> top_n(const HistoryBuffer& history, std::size_t n);

GuidancePair best_pair(const HistoryBuffer& history);

struct RunConfig {
    std::size_t k = 5;
    std::size_t candidates_per_iter = 10;
    std::size_t max_iterations = 100;
    std::size_t max_new_tokens = 50;
    double alpha = 1.0;
    std::optional<int> layer_index;  // unset: middle layer of the generator
    SteeringMode steering_mode;
    double tau = 0.01;
    std::uint64_t seed = 0;
    std::size_t ensemble_size = 3;
    std::optional<std::size_t> patience;  // unset: fixed budget
    std::vector<double> alpha_grid{0.5, 1.0, 2.0, 4.0};
    std::size_t threads = 1;

    // Throws ConfigError naming the first violated constraint.
    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

std::size_t default_candidates_per_iter(TaskMode mode);
std::size_t default_max_iterations(TaskMode mode, std::size_t num_classes);

}  // namespace glov
