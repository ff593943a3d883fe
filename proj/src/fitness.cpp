#include "glov/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "glov/error.hpp"
#include "glov/log.hpp"
#include "glov/text.hpp"

namespace glov {
namespace {

std::size_t argmax_among(std::span<const double> values, std::span<const std::size_t> candidates) {
    std::size_t best = candidates.front();
    for (std::size_t c : candidates) {
        if (values[c] > values[best] || (values[c] == values[best] && c < best)) best = c;
    }
    return best;
}

std::vector<Vector> embed_class_names(std::span<const std::string> class_names, Embedder& embedder) {
    std::vector<Vector> out;
    out.reserve(class_names.size());
    for (const auto& name : class_names) out.push_back(embedder.embed(name));
    return out;
}

std::size_t predict_from_embeddings(std::span<const double> caption_embedding,
                                    const std::vector<Vector>& class_embeddings,
                                    std::span<const std::size_t> candidates) {
    Vector sims(class_embeddings.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t c : candidates) sims[c] = cosine(caption_embedding, class_embeddings[c]);
    return argmax_among(sims, candidates);
}

std::vector<std::size_t> all_classes(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

std::vector<std::size_t> predict_with_prototypes(const std::vector<Vector>& prototypes,
                                                 const std::vector<Vector>& images, double tau) {
    std::vector<std::size_t> out;
    out.reserve(images.size());
    Vector sims(prototypes.size());
    for (const auto& img : images) {
        for (std::size_t c = 0; c < prototypes.size(); ++c) sims[c] = dot(prototypes[c], img);
        out.push_back(likelihoods(sims, tau).argmax());
    }
    return out;
}

std::vector<Vector> embed_images(const FewShotTask& task, Scorer& scorer) {
    std::vector<Vector> images;
    images.reserve(task.examples.size());
    for (std::size_t i = 0; i < task.examples.size(); ++i) {
        try {
            images.push_back(unit(scorer.embed_image(task.examples[i].image)));
        } catch (const std::exception& e) {
            throw BackendError(fmt::format("scorer failed on example {} ('{}'): {}", i,
                                           task.examples[i].image, e.what()));
        }
    }
    return images;
}

}  // namespace

void FewShotTask::validate() const {
    if (class_names.size() < 2) {
        throw ValidationError(fmt::format("task '{}' needs at least 2 classes", name));
    }
    if (examples.empty()) throw ValidationError(fmt::format("task '{}' has no examples", name));
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        if (ex.label >= class_names.size()) {
            throw ValidationError(fmt::format("example {} has label {} outside [0, {})", i, ex.label,
                                              class_names.size()));
        }
        if (mode != TaskMode::multiple_choice) continue;
        if (ex.choices.empty()) {
            throw ValidationError(fmt::format("multiple-choice example {} has no choices", i));
        }
        for (std::size_t c : ex.choices) {
            if (c >= class_names.size()) {
                throw ValidationError(fmt::format("example {} has choice {} out of range", i, c));
            }
        }
        if (std::find(ex.choices.begin(), ex.choices.end(), ex.label) == ex.choices.end()) {
            throw ValidationError(fmt::format("example {} choices omit its label {}", i, ex.label));
        }
    }
}

std::size_t LikelihoodVector::argmax() const { return argmax_lowest(probs); }

std::size_t argmax_lowest(std::span<const double> values) {
    if (values.empty()) throw DimensionError("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError(fmt::format("dot of widths {} and {}", a.size(), b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw BackendError("cosine of a zero-norm embedding");
    return dot(a, b) / (na * nb);
}

Vector unit(std::span<const double> v) {
    const double n = norm(v);
    if (n == 0.0 || !std::isfinite(n)) throw BackendError("cannot normalize a zero or non-finite vector");
    Vector out(v.begin(), v.end());
    for (double& x : out) x /= n;
    return out;
}

std::string class_text(std::string_view prompt, std::string_view class_name) {
    const auto pos = prompt.find(kClassPlaceholder);
    if (pos == std::string_view::npos) {
        throw ValidationError(fmt::format("prompt '{}' has no class placeholder", prompt));
    }
    std::string out(prompt.substr(0, pos));
    out += class_name;
    out += prompt.substr(pos + kClassPlaceholder.size());
    if (out.find(kClassPlaceholder) != std::string::npos) {
        throw ValidationError(fmt::format("prompt '{}' has more than one class placeholder", prompt));
    }
    return out;
}

LikelihoodVector likelihoods(std::span<const double> similarities, double tau) {
    if (!(tau > 0.0)) throw ValidationError(fmt::format("temperature must be > 0, got {}", tau));
    if (similarities.empty()) throw DimensionError("likelihoods of an empty similarity vector");
    double max_s = similarities[0];
    for (double s : similarities) {
        if (!std::isfinite(s)) throw ValidationError("similarity is not finite");
        max_s = std::max(max_s, s);
    }
    LikelihoodVector out;
    out.probs.resize(similarities.size());
    double z = 0.0;
    for (std::size_t i = 0; i < similarities.size(); ++i) {
        out.probs[i] = std::exp((similarities[i] - max_s) / tau);
        z += out.probs[i];
    }
    for (double& p : out.probs) p /= z;
    return out;
}

std::vector<Vector> class_prototypes(std::span<const std::string> prompts,
                                     std::span<const std::string> class_names, Scorer& scorer) {
    if (prompts.empty()) throw ValidationError("prompt ensemble is empty");
    std::vector<Vector> prototypes;
    prototypes.reserve(class_names.size());
    for (const auto& name : class_names) {
        Vector sum;
        for (const auto& prompt : prompts) {
            const std::string text = class_text(prompt, name);
            Vector e;
            try {
                e = unit(scorer.embed_text(text));
            } catch (const std::exception& err) {
                throw BackendError(fmt::format("scorer failed to embed '{}': {}", text, err.what()));
            }
            if (sum.empty()) {
                sum.assign(e.size(), 0.0);
            } else if (e.size() != sum.size()) {
                throw DimensionError("scorer returned text embeddings of different widths");
            }
            for (std::size_t i = 0; i < e.size(); ++i) sum[i] += e[i];
        }
        for (double& x : sum) x /= static_cast<double>(prompts.size());
        prototypes.push_back(unit(sum));
    }
    return prototypes;
}

std::vector<std::size_t> predict_dual(std::span<const std::string> prompts, const FewShotTask& task,
                                      Scorer& scorer, double tau) {
    const auto prototypes = class_prototypes(prompts, task.class_names, scorer);
    return predict_with_prototypes(prototypes, embed_images(task, scorer), tau);
}

double fitness_dual(std::string_view prompt, const FewShotTask& task, Scorer& scorer, double tau) {
    const std::string p(prompt);
    return accuracy(predict_dual(std::span(&p, 1), task, scorer, tau), task);
}

double ensemble_predict_dual(std::span<const std::string> prompts, const FewShotTask& task,
                             Scorer& scorer, double tau) {
    return accuracy(predict_dual(prompts, task, scorer, tau), task);
}

std::size_t predict_open(std::string_view caption, std::span<const std::string> class_names,
                         Embedder& embedder) {
    if (trim(caption).empty()) throw ValidationError("caption is empty");
    if (class_names.empty()) throw ValidationError("no class names to match against");
    const Vector c = embedder.embed(caption);
    const auto class_embeddings = embed_class_names(class_names, embedder);
    const auto candidates = all_classes(class_names.size());
    return predict_from_embeddings(c, class_embeddings, candidates);
}

std::vector<std::optional<std::size_t>> predictions_open(std::string_view prompt,
                                                         const FewShotTask& task,
                                                         Captioner& captioner, Embedder& embedder,
                                                         std::uint64_t seed) {
    const auto class_embeddings = embed_class_names(task.class_names, embedder);
    const auto everything = all_classes(task.class_names.size());

    std::vector<std::optional<std::size_t>> out;
    out.reserve(task.examples.size());
    for (std::size_t i = 0; i < task.examples.size(); ++i) {
        const auto& ex = task.examples[i];
        std::string caption;
        try {
            caption = captioner.caption(ex.image, prompt, seed);
        } catch (const std::exception& e) {
            log::warn("captioner failed on example {} ('{}'); counted as incorrect: {}", i, ex.image,
                      e.what());
            out.emplace_back();
            continue;
        }
        if (trim(caption).empty()) {
            log::warn("captioner returned empty text for example {}; counted as incorrect", i);
            out.emplace_back();
            continue;
        }
        const Vector c = embedder.embed(caption);
        if (task.mode == TaskMode::multiple_choice) {
            std::vector<std::size_t> choices = ex.choices;
            std::sort(choices.begin(), choices.end());
            out.emplace_back(predict_from_embeddings(c, class_embeddings, choices));
        } else {
            out.emplace_back(predict_from_embeddings(c, class_embeddings, everything));
        }
    }
    return out;
}

double fitness_open(std::string_view prompt, const FewShotTask& task, Captioner& captioner,
                    Embedder& embedder, std::uint64_t seed) {
    return accuracy(predictions_open(prompt, task, captioner, embedder, seed), task);
}

std::vector<std::optional<std::size_t>> vote(
    std::span<const std::vector<std::optional<std::size_t>>> per_prompt_predictions) {
    if (per_prompt_predictions.empty()) throw ValidationError("prompt ensemble is empty");
    const std::size_t n = per_prompt_predictions.front().size();
    std::vector<std::optional<std::size_t>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::unordered_map<std::size_t, std::size_t> counts;
        std::size_t top = 0;
        for (const auto& preds : per_prompt_predictions) {
            if (preds.size() != n) throw DimensionError("ensemble predictions differ in length");
            if (preds[i]) top = std::max(top, ++counts[*preds[i]]);
        }
        // First prompt (best-first order) whose class reaches the top count.
        for (const auto& preds : per_prompt_predictions) {
            if (preds[i] && counts[*preds[i]] == top) {
                out[i] = preds[i];
                break;
            }
        }
    }
    return out;
}

double ensemble_predict_open(std::span<const std::string> prompts_best_first,
                             const FewShotTask& task, Captioner& captioner, Embedder& embedder,
                             std::uint64_t seed) {
    std::vector<std::vector<std::optional<std::size_t>>> per_prompt;
    for (const auto& p : prompts_best_first) {
        per_prompt.push_back(predictions_open(p, task, captioner, embedder, seed));
    }
    return accuracy(vote(per_prompt), task);
}

double accuracy(std::span<const std::optional<std::size_t>> predictions, const FewShotTask& task) {
    if (predictions.size() != task.examples.size()) {
        throw DimensionError("prediction count does not match example count");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] && *predictions[i] == task.examples[i].label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(task.examples.size());
}

double accuracy(std::span<const std::size_t> predictions, const FewShotTask& task) {
    if (predictions.size() != task.examples.size()) {
        throw DimensionError("prediction count does not match example count");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == task.examples[i].label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(task.examples.size());
}

DualEncoderEvaluator::DualEncoderEvaluator(FewShotTask task, Scorer& scorer, double tau)
    : task_(std::move(task)), scorer_(scorer), tau_(tau) {
    task_.validate();
    if (task_.mode != TaskMode::dual_encoder) {
        throw ValidationError("dual-encoder evaluator needs a dual_encoder task");
    }
}

double DualEncoderEvaluator::fitness(std::string_view prompt) {
    return fitness_dual(prompt, task_, scorer_, tau_);
}

double DualEncoderEvaluator::ensemble_fitness(std::span<const std::string> prompts_best_first) {
    return ensemble_predict_dual(prompts_best_first, task_, scorer_, tau_);
}

OpenEndedEvaluator::OpenEndedEvaluator(FewShotTask task, Captioner& captioner, Embedder& embedder,
                                       std::uint64_t seed)
    : task_(std::move(task)), captioner_(captioner), embedder_(embedder), seed_(seed) {
    task_.validate();
    if (task_.mode == TaskMode::dual_encoder) {
        throw ValidationError("open-ended evaluator needs an encoder_decoder or multiple_choice task");
    }
}

std::vector<std::optional<std::size_t>> OpenEndedEvaluator::predictions(std::string_view prompt) {
    const std::string key(prompt);
    {
        std::lock_guard lock(cache_mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    auto preds = predictions_open(prompt, task_, captioner_, embedder_, seed_);
    std::lock_guard lock(cache_mutex_);
    return cache_.emplace(key, std::move(preds)).first->second;
}

double OpenEndedEvaluator::fitness(std::string_view prompt) {
    return accuracy(predictions(prompt), task_);
}

double OpenEndedEvaluator::ensemble_fitness(std::span<const std::string> prompts_best_first) {
    std::vector<std::vector<std::optional<std::size_t>>> per_prompt;
    for (const auto& p : prompts_best_first) per_prompt.push_back(predictions(p));
    return accuracy(vote(per_prompt), task_);
}

}  // namespace glov
