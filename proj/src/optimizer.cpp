#include "glov/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <unordered_map>

#include <fmt/core.h>

#include "glov/conformance.hpp"
#include "glov/error.hpp"
#include "glov/log.hpp"
#include "glov/text.hpp"

namespace glov {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Scores texts in input order; concurrently when the evaluator allows it.
std::vector<double> score_all(const std::vector<std::string>& texts, PromptEvaluator& evaluator,
                              std::size_t threads) {
    std::vector<double> out(texts.size());
    const std::size_t workers = std::min(threads, texts.size());
    if (workers <= 1 || !evaluator.reentrant()) {
        for (std::size_t i = 0; i < texts.size(); ++i) out[i] = evaluator.fitness(texts[i]);
        return out;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < texts.size(); i += workers) {
                    out[i] = evaluator.fitness(texts[i]);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

struct Round {
    std::string meta_prompt_hash;
    std::vector<CandidateRecord> candidates;
};

// Render, generate, parse, validate, score and insert one round of candidates.
Round generate_round(OptimizerState& state, Backends backends, std::size_t iteration, bool steered) {
    const RunConfig& cfg = state.setup.config;
    const auto tb = top_bottom(state.history, cfg.k);
    const std::string rendered = render(state.setup.meta_template, state.setup.task, tb.tops,
                                        tb.bottoms, cfg.candidates_per_iter);
    Round round;
    round.meta_prompt_hash = hex64(fnv1a64(rendered));

    const GuidanceState* guidance = steered ? &state.guidance : nullptr;
    std::vector<std::string> to_score;
    std::unordered_map<std::string, std::size_t> first_seen;  // normalized text -> candidate index
    for (std::size_t j = 0; j < cfg.candidates_per_iter; ++j) {
        CandidateRecord rec;
        rec.seed = derive_seed(cfg.seed, iteration, j);
        rec.raw = backends.generator.generate(rendered, guidance, cfg.max_new_tokens, rec.seed);
        try {
            const auto parsed = parse_candidates(rec.raw, 1);
            rec.text = validate_prompt(parsed.prompts.front(), state.setup.task.mode);
        } catch (const ParseError& e) {
            rec.reason = e.what();
        } catch (const ValidationError& e) {
            rec.reason = e.what();
        }
        if (!rec.reason.empty()) {
            log::info("iteration {}: dropped candidate {}: {}", iteration, j, rec.reason);
            rec.status = CandidateStatus::invalid;
        } else if (const auto* known = state.history.find(rec.text)) {
            rec.status = CandidateStatus::duplicate;
            rec.fitness = known->fitness;
        } else if (first_seen.count(normalize_text(rec.text)) != 0) {
            rec.status = CandidateStatus::duplicate;
        } else {
            rec.status = CandidateStatus::added;
            first_seen.emplace(normalize_text(rec.text), j);
            to_score.push_back(rec.text);
        }
        round.candidates.push_back(std::move(rec));
    }

    const auto scores = score_all(to_score, backends.evaluator, cfg.threads);
    std::vector<PromptCandidate> batch;
    std::size_t next = 0;
    for (auto& rec : round.candidates) {
        if (rec.status != CandidateStatus::added) continue;
        rec.fitness = scores[next++];
        batch.push_back(PromptCandidate{rec.text, rec.fitness, iteration, steered});
    }
    for (auto& rec : round.candidates) {
        if (rec.status == CandidateStatus::duplicate && !rec.fitness) {
            rec.fitness = round.candidates[first_seen.at(normalize_text(rec.text))].fitness;
        }
    }
    state.history.add_scored(batch);
    return round;
}

bool guidance_active(const GuidanceState& g) { return g.enabled && g.alpha > 0.0; }

void replay(HistoryBuffer& history, std::span<const CandidateRecord> candidates,
            std::size_t iteration, bool steered) {
    std::vector<PromptCandidate> batch;
    for (const auto& rec : candidates) {
        if (rec.status != CandidateStatus::added) continue;
        if (!rec.fitness) throw HistoryError(fmt::format("logged candidate '{}' has no fitness", rec.text));
        batch.push_back(PromptCandidate{rec.text, rec.fitness, iteration, steered});
    }
    history.add_scored(batch);
}

}  // namespace

std::string_view to_string(CandidateStatus status) {
    switch (status) {
        case CandidateStatus::added: return "added";
        case CandidateStatus::duplicate: return "duplicate";
        case CandidateStatus::invalid: return "invalid";
    }
    return "invalid";
}

CandidateStatus parse_candidate_status(std::string_view name) {
    if (name == "added") return CandidateStatus::added;
    if (name == "duplicate") return CandidateStatus::duplicate;
    if (name == "invalid") return CandidateStatus::invalid;
    throw ParseError(fmt::format("unknown candidate status '{}'", name), std::string(name));
}

std::string default_seed_prompt(TaskMode mode) {
    if (mode == TaskMode::dual_encoder) return "a photo of a {}";
    return "Describe the category present in this image briefly and also identify the name of the "
           "category present.";
}

std::uint64_t derive_seed(std::uint64_t base, std::size_t iteration, std::size_t candidate) {
    return splitmix64(splitmix64(splitmix64(base) ^ iteration) ^ candidate);
}

int resolve_layer(const RunConfig& config, const Generator& generator) {
    const std::size_t layers = generator.layer_count();
    if (layers == 0) throw BackendError("generator reports 0 layers");
    const int layer = config.layer_index.value_or(static_cast<int>(layers / 2));
    if (layer < 0 || static_cast<std::size_t>(layer) >= layers) {
        throw ConfigError(fmt::format("layer_index {} outside [0, {})", layer, layers));
    }
    return layer;
}

GuidanceSnapshot snapshot(const GuidanceState& state, bool updated) {
    return GuidanceSnapshot{state.pair, state.alpha, state.layer_index, state.effective_mode(),
                            state.enabled, updated};
}

OptimizerState initialize(const OptimizerSetup& setup, Backends backends, InitialRound* initial) {
    setup.config.validate();
    setup.meta_template.validate();
    check_generator(backends.generator).throw_if_failed();

    OptimizerState state;
    state.setup = setup;
    const int layer = resolve_layer(setup.config, backends.generator);
    state.guidance = make_guidance(setup.config.alpha, layer, setup.config.steering_mode);

    InitialRound round;
    std::vector<std::string> seeds = setup.seed_prompts;
    if (seeds.empty()) seeds.push_back(default_seed_prompt(setup.task.mode));
    std::vector<std::string> texts;
    for (const auto& s : seeds) {
        std::string text = validate_prompt(s, setup.task.mode);
        if (std::find(texts.begin(), texts.end(), text) != texts.end()) continue;
        texts.push_back(std::move(text));
    }
    const auto scores = score_all(texts, backends.evaluator, setup.config.threads);
    std::vector<PromptCandidate> batch;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        round.seeds.push_back(CandidateRecord{texts[i], texts[i], scores[i], CandidateStatus::added, {}, 0});
        batch.push_back(PromptCandidate{texts[i], scores[i], 0, false});
    }
    state.history.add_scored(batch);

    auto gen = generate_round(state, backends, 0, false);
    round.meta_prompt_hash = std::move(gen.meta_prompt_hash);
    round.candidates = std::move(gen.candidates);
    if (state.history.size() < 2) {
        throw HistoryError("initial round produced fewer than 2 distinct scored prompts");
    }
    auto update = maybe_update_guidance(state.guidance, state.history, backends.generator);
    state.guidance = std::move(update.state);
    round.best_so_far = *state.history.best_fitness();
    round.guidance = snapshot(state.guidance, update.updated);
    if (initial != nullptr) *initial = std::move(round);
    return state;
}

IterationRecord step(OptimizerState& state, Backends backends) {
    const RunConfig& cfg = state.setup.config;
    if (state.history.size() < 2) throw HistoryError("step needs an initialized state");
    if (state.iteration >= cfg.max_iterations) {
        throw HistoryError(fmt::format("iteration budget of {} is used up", cfg.max_iterations));
    }
    const std::size_t iteration = state.iteration + 1;
    const double before = *state.history.best_fitness();
    const bool steered = guidance_active(state.guidance);

    auto round = generate_round(state, backends, iteration, steered);
    auto update = maybe_update_guidance(state.guidance, state.history, backends.generator);
    state.guidance = std::move(update.state);
    state.iteration = iteration;
    const double after = *state.history.best_fitness();
    state.since_improvement = after > before ? 0 : state.since_improvement + 1;

    IterationRecord rec;
    rec.iteration = iteration;
    rec.meta_prompt_hash = std::move(round.meta_prompt_hash);
    rec.steered = steered;
    rec.candidates = std::move(round.candidates);
    for (const auto& c : rec.candidates) {
        if (c.fitness && (!rec.best_candidate || *c.fitness > *rec.best_candidate)) {
            rec.best_candidate = c.fitness;
        }
    }
    if (!rec.best_candidate) log::warn("iteration {} produced no valid candidates", iteration);
    rec.best_so_far = after;
    rec.best_prompt = top_n(state.history, 1).front().text;
    rec.ensemble = select_ensemble(state.history, cfg.ensemble_size);
    rec.ensemble_fitness = backends.evaluator.ensemble_fitness(rec.ensemble);
    rec.guidance = snapshot(state.guidance, update.updated);
    return rec;
}

bool should_stop(const OptimizerState& state) {
    const RunConfig& cfg = state.setup.config;
    if (state.iteration >= cfg.max_iterations) return true;
    return cfg.patience && state.since_improvement >= *cfg.patience;
}

RunResult run_from(OptimizerState state, Backends backends, RunObserver* observer) {
    RunResult result;
    while (!should_stop(state)) {
        auto rec = step(state, backends);
        if (observer != nullptr) observer->on_iteration(rec, state);
        result.records.push_back(std::move(rec));
    }
    result.ensemble = select_ensemble(state.history, state.setup.config.ensemble_size);
    result.ensemble_fitness = backends.evaluator.ensemble_fitness(result.ensemble);
    result.history = std::move(state.history);
    result.guidance = std::move(state.guidance);
    return result;
}

RunResult run(const OptimizerSetup& setup, Backends backends, RunObserver* observer) {
    InitialRound initial;
    OptimizerState state = initialize(setup, backends, &initial);
    if (observer != nullptr) observer->on_initial(initial, state);
    RunResult result = run_from(std::move(state), backends, observer);
    result.initial = std::move(initial);
    return result;
}

OptimizerState restore(const OptimizerSetup& setup, Backends backends, const InitialRound& initial,
                       std::span<const IterationRecord> records) {
    setup.config.validate();
    OptimizerState state;
    state.setup = setup;
    const int layer = resolve_layer(setup.config, backends.generator);
    state.guidance = make_guidance(setup.config.alpha, layer, setup.config.steering_mode);

    replay(state.history, initial.seeds, 0, false);
    replay(state.history, initial.candidates, 0, false);
    const GuidanceSnapshot* last = &initial.guidance;
    double best = initial.best_so_far;
    for (const auto& rec : records) {
        if (rec.iteration != state.iteration + 1) {
            throw HistoryError(fmt::format("logged iteration {} follows {}", rec.iteration, state.iteration));
        }
        replay(state.history, rec.candidates, rec.iteration, rec.steered);
        state.since_improvement = rec.best_so_far > best ? 0 : state.since_improvement + 1;
        best = rec.best_so_far;
        state.iteration = rec.iteration;
        last = &rec.guidance;
    }
    if (state.history.best_fitness() != best) {
        throw HistoryError("replayed history disagrees with the logged best fitness");
    }
    if (last->pair) state.guidance = embed_pair(state.guidance, *last->pair, backends.generator);
    return state;
}

std::vector<std::string> select_ensemble(const HistoryBuffer& history, std::size_t n) {
    if (history.empty()) throw HistoryError("cannot select an ensemble from an empty history");
    std::vector<std::string> out;
    for (const auto& c : top_n(history, n)) out.push_back(c.text);
    return out;
}

AlphaSearchResult alpha_grid_search(const OptimizerSetup& setup, Backends backends,
                                    std::span<const double> grid, std::size_t budget) {
    if (grid.empty()) throw ConfigError("alpha grid is empty");
    OptimizerSetup trial = setup;
    trial.config.max_iterations =
        budget != 0 ? budget : (setup.config.max_iterations + 4) / 5;
    AlphaSearchResult result;
    std::optional<double> best_score;
    for (double alpha : grid) {
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
            throw ConfigError(fmt::format("alpha {} is not a finite value >= 0", alpha));
        }
        trial.config.alpha = alpha;
        const double score = *run(trial, backends).history.best_fitness();
        log::info("alpha {}: best fitness {:.6f}", alpha, score);
        result.scores.emplace_back(alpha, score);
        if (!best_score || score > *best_score || (score == *best_score && alpha < result.alpha)) {
            best_score = score;
            result.alpha = alpha;
        }
    }
    return result;
}

}  // namespace glov
