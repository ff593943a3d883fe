#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glov/core.hpp"
#include "glov/fitness.hpp"
#include "glov/interfaces.hpp"
#include "glov/metaprompt.hpp"
#include "glov/steering.hpp"

namespace glov {

struct OptimizerSetup {
    RunConfig config;
    TaskDescriptor task;
    MetaPromptTemplate meta_template = default_template();
    std::vector<std::string> seed_prompts;  // empty: default_seed_prompt(task.mode)
};

struct Backends {
    Generator& generator;
    PromptEvaluator& evaluator;
};

enum class CandidateStatus { added, duplicate, invalid };

std::string_view to_string(CandidateStatus status);
CandidateStatus parse_candidate_status(std::string_view name);

struct CandidateRecord {
    std::string raw;   // generator output before parsing
    std::string text;  // validated prompt; empty when invalid
    std::optional<double> fitness;
    CandidateStatus status = CandidateStatus::invalid;
    std::string reason;  // why an invalid candidate was dropped
    std::uint64_t seed = 0;

    friend bool operator==(const CandidateRecord&, const CandidateRecord&) = default;
};

struct GuidanceSnapshot {
    std::optional<GuidancePair> pair;
    double alpha = 0.0;
    int layer_index = 0;
    SteeringMode mode;  // effective mode, actadd prefix resolved
    bool enabled = false;
    bool updated = false;

    friend bool operator==(const GuidanceSnapshot&, const GuidanceSnapshot&) = default;
};

struct IterationRecord {
    std::size_t iteration = 0;
    std::string meta_prompt_hash;
    bool steered = false;
    std::vector<CandidateRecord> candidates;
    std::optional<double> best_candidate;  // best valid candidate of this iteration
    double best_so_far = 0.0;
    std::string best_prompt;
    std::vector<std::string> ensemble;  // best first
    double ensemble_fitness = 0.0;
    GuidanceSnapshot guidance;  // after this iteration's update

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

// Seed scoring plus the unsteered generation round that precedes the loop.
struct InitialRound {
    std::vector<CandidateRecord> seeds;
    std::string meta_prompt_hash;
    std::vector<CandidateRecord> candidates;
    double best_so_far = 0.0;
    GuidanceSnapshot guidance;

    friend bool operator==(const InitialRound&, const InitialRound&) = default;
};

struct OptimizerState {
    OptimizerSetup setup;
    HistoryBuffer history;
    GuidanceState guidance;
    std::size_t iteration = 0;
    std::size_t since_improvement = 0;
    // Randomness is a pure function of (config.seed, iteration, candidate),
    // so the state needs no generator object to resume exactly.
};

class RunObserver {
public:
    virtual ~RunObserver() = default;
    virtual void on_initial(const InitialRound&, const OptimizerState&) {}
    virtual void on_iteration(const IterationRecord&, const OptimizerState&) {}
};

struct RunResult {
    HistoryBuffer history;
    std::vector<std::string> ensemble;
    double ensemble_fitness = 0.0;
    InitialRound initial;
    std::vector<IterationRecord> records;
    GuidanceState guidance;
};

std::string default_seed_prompt(TaskMode mode);

// Per-candidate generation seed.
std::uint64_t derive_seed(std::uint64_t base, std::size_t iteration, std::size_t candidate);

// Layer used for guidance: the configured one, else the generator's middle layer.
int resolve_layer(const RunConfig& config, const Generator& generator);

GuidanceSnapshot snapshot(const GuidanceState& state, bool updated);

// Scores the seed prompts, runs one unsteered generation round and builds
// the first guidance pair. Throws BackendError when the generator fails
// its conformance check, HistoryError with fewer than 2 distinct prompts.
OptimizerState initialize(const OptimizerSetup& setup, Backends backends,
                          InitialRound* initial = nullptr);

IterationRecord step(OptimizerState& state, Backends backends);

// True once the budget or the patience limit is reached.
bool should_stop(const OptimizerState& state);

RunResult run(const OptimizerSetup& setup, Backends backends, RunObserver* observer = nullptr);

// Continues an existing state until should_stop; records only new iterations.
RunResult run_from(OptimizerState state, Backends backends, RunObserver* observer = nullptr);

// Rebuilds a state from logged rounds, for resuming an interrupted run.
OptimizerState restore(const OptimizerSetup& setup, Backends backends, const InitialRound& initial,
                       std::span<const IterationRecord> records);

// Top n prompts, best first.
std::vector<std::string> select_ensemble(const HistoryBuffer& history, std::size_t n);

struct AlphaSearchResult {
    double alpha = 0.0;
    std::vector<std::pair<double, double>> scores;  // (alpha, best fitness) in grid order
};

// Short run per alpha with the same seed. Highest best fitness wins; ties go
// to the smaller alpha. budget 0 means ceil(max_iterations / 5).
AlphaSearchResult alpha_grid_search(const OptimizerSetup& setup, Backends backends,
                                    std::span<const double> grid, std::size_t budget = 0);

}  // namespace glov
