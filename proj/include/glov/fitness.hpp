#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "glov/interfaces.hpp"
#include "glov/metaprompt.hpp"

namespace glov {

struct LabeledExample {
    std::string image;                 // reference understood by the backends
    std::size_t label = 0;             // index into class_names
    std::vector<std::size_t> choices;  // multiple_choice only
};

struct FewShotTask {
    std::vector<std::string> class_names;
    std::vector<LabeledExample> examples;
    std::string name;
    std::string description;
    TaskMode mode = TaskMode::dual_encoder;

    // Throws ValidationError: fewer than 2 classes, no examples, a label or
    // choice out of range, or a multiple-choice set that omits its label.
    void validate() const;
    TaskDescriptor descriptor() const { return {name, description, mode}; }
};

struct LikelihoodVector {
    Vector probs;
    std::size_t argmax() const;
};

inline constexpr double kDefaultTau = 0.01;

// Index of the largest value; ties go to the lowest index.
std::size_t argmax_lowest(std::span<const double> values);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);
double cosine(std::span<const double> a, std::span<const double> b);
Vector unit(std::span<const double> v);

// Fills the prompt's class placeholder.
std::string class_text(std::string_view prompt, std::string_view class_name);

// Temperature softmax over similarities, computed with max subtraction.
LikelihoodVector likelihoods(std::span<const double> similarities, double tau);

// Dual-encoder classification. One prototype per class: the unit-normalized
// mean of the unit-normalized class-text embeddings of every prompt.
std::vector<Vector> class_prototypes(std::span<const std::string> prompts,
                                     std::span<const std::string> class_names, Scorer& scorer);

std::vector<std::size_t> predict_dual(std::span<const std::string> prompts, const FewShotTask& task,
                                      Scorer& scorer, double tau = kDefaultTau);

double fitness_dual(std::string_view prompt, const FewShotTask& task, Scorer& scorer,
                    double tau = kDefaultTau);

double ensemble_predict_dual(std::span<const std::string> prompts, const FewShotTask& task,
                             Scorer& scorer, double tau = kDefaultTau);

// Open-ended classification by nearest class name in embedding space.
std::size_t predict_open(std::string_view caption, std::span<const std::string> class_names,
                         Embedder& embedder);

// Per-example predictions of one prompt; nullopt where captioning failed.
std::vector<std::optional<std::size_t>> predictions_open(std::string_view prompt,
                                                         const FewShotTask& task,
                                                         Captioner& captioner, Embedder& embedder,
                                                         std::uint64_t seed = 0);

double fitness_open(std::string_view prompt, const FewShotTask& task, Captioner& captioner,
                    Embedder& embedder, std::uint64_t seed = 0);

// Majority vote across prompts given best-first. Ties go to the class voted
// for by the highest-ranked prompt among the tied classes.
std::vector<std::optional<std::size_t>> vote(
    std::span<const std::vector<std::optional<std::size_t>>> per_prompt_predictions);

double ensemble_predict_open(std::span<const std::string> prompts_best_first,
                             const FewShotTask& task, Captioner& captioner, Embedder& embedder,
                             std::uint64_t seed = 0);

double accuracy(std::span<const std::optional<std::size_t>> predictions, const FewShotTask& task);
double accuracy(std::span<const std::size_t> predictions, const FewShotTask& task);

// The single interface between the optimizer and whatever measures prompts.
class PromptEvaluator {
public:
    virtual ~PromptEvaluator() = default;
    virtual double fitness(std::string_view prompt) = 0;
    virtual double ensemble_fitness(std::span<const std::string> prompts_best_first) = 0;
    virtual bool reentrant() const { return false; }
};

class DualEncoderEvaluator : public PromptEvaluator {
public:
    DualEncoderEvaluator(FewShotTask task, Scorer& scorer, double tau = kDefaultTau);

    double fitness(std::string_view prompt) override;
    double ensemble_fitness(std::span<const std::string> prompts_best_first) override;
    bool reentrant() const override { return scorer_.reentrancy() == Reentrancy::reentrant; }

    const FewShotTask& task() const noexcept { return task_; }

private:
    FewShotTask task_;
    Scorer& scorer_;
    double tau_;
};

class OpenEndedEvaluator : public PromptEvaluator {
public:
    OpenEndedEvaluator(FewShotTask task, Captioner& captioner, Embedder& embedder,
                       std::uint64_t seed = 0);

    double fitness(std::string_view prompt) override;
    double ensemble_fitness(std::span<const std::string> prompts_best_first) override;
    bool reentrant() const override {
        return captioner_.reentrancy() == Reentrancy::reentrant &&
               embedder_.reentrancy() == Reentrancy::reentrant;
    }

private:
    std::vector<std::optional<std::size_t>> predictions(std::string_view prompt);

    FewShotTask task_;
    Captioner& captioner_;
    Embedder& embedder_;
    std::uint64_t seed_;
    std::mutex cache_mutex_;
    std::unordered_map<std::string, std::vector<std::optional<std::size_t>>> cache_;
};

}  // namespace glov
