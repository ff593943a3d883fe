#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "glov/fitness.hpp"
#include "glov/interfaces.hpp"

namespace glov {

// Deterministic, hash-seeded test doubles for every backend interface.
// Nothing here loads weights; a token's embedding is a pure function of its
// bytes, so results are identical on every platform.

inline constexpr std::size_t kSurrogateDim = 16;
inline constexpr std::string_view kDefaultTargetPhrase = "small blue bird on a branch";

// The built-in 64-word vocabulary, in index order.
std::vector<std::string> default_vocabulary();

// Whitespace split, lowercased.
std::vector<std::string> surrogate_tokenize(std::string_view text);

// FNV-1a seed expanded by a 64-bit LCG, mapped to [-1, 1) and L2-normalized.
Vector surrogate_embed(std::string_view token, std::size_t dim = kSurrogateDim);

class SurrogateWorld {
public:
    SurrogateWorld(std::vector<std::string> vocabulary = default_vocabulary(),
                   std::size_t dim = kSurrogateDim,
                   std::string target_phrase = std::string(kDefaultTargetPhrase));

    // Explicit embedding table, for hand-built landscapes. `extra` gives
    // embeddings for tokens that can be read but never emitted.
    static SurrogateWorld from_table(std::vector<std::string> vocabulary, std::vector<Vector> table,
                                     std::string target_phrase = {},
                                     std::unordered_map<std::string, Vector> extra = {});

    const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
    std::size_t dim() const noexcept { return dim_; }
    const std::string& target_phrase() const noexcept { return target_phrase_; }

    Vector embed(std::string_view token) const;

    // Rows are the token embeddings of the tokenized text.
    std::vector<Vector> token_embeddings(std::string_view text) const;

    // Throws ValidationError for text without tokens.
    Vector mean_embedding(std::string_view text) const;

    // (1 + cos(mean(prompt), mean(target))) / 2, clamped to [0, 1].
    double target_fitness(std::string_view prompt) const;

    Vector logits(std::span<const double> hidden) const;

    // Softmax of logits / temperature; temperature must be > 0.
    Vector next_token_probs(std::span<const double> hidden, double temperature) const;

private:
    struct RawTag {};
    explicit SurrogateWorld(RawTag) {}

    std::vector<std::string> vocabulary_;
    std::size_t dim_ = kSurrogateDim;
    std::string target_phrase_;
    std::vector<Vector> table_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, Vector> extra_;
};

// Identity-transformer generator. The hidden state at each step is the
// embedding of the previous token, plus the guidance offset when the mode
// selects the current position. Temperature 0 decodes greedily.
class SurrogateGenerator : public Generator {
public:
    SurrogateGenerator(std::shared_ptr<const SurrogateWorld> world, std::size_t layers = 1,
                       double temperature = 0.0);

    std::size_t hidden_width() const override { return world_->dim(); }
    std::size_t layer_count() const override { return layers_; }
    std::size_t token_count(std::string_view text) const override;
    ActivationMatrix probe_activations(std::string_view text, int layer) override;
    std::string generate(std::string_view prompt, const GuidanceState* guidance,
                         std::size_t max_tokens, std::uint64_t seed) override;
    Reentrancy reentrancy() const override { return Reentrancy::reentrant; }

    const SurrogateWorld& world() const noexcept { return *world_; }

private:
    std::shared_ptr<const SurrogateWorld> world_;
    std::size_t layers_;
    double temperature_;
};

// Text side: unit mean token embedding. Image side: unit vector from the store.
class SurrogateScorer : public Scorer {
public:
    SurrogateScorer(std::shared_ptr<const SurrogateWorld> world,
                    std::shared_ptr<const ImageStore> images);

    Vector embed_text(std::string_view text) override;
    Vector embed_image(std::string_view image_ref) override;
    Reentrancy reentrancy() const override { return Reentrancy::reentrant; }

private:
    std::shared_ptr<const SurrogateWorld> world_;
    std::shared_ptr<const ImageStore> images_;
};

// Describes an image with the `words` vocabulary tokens closest to
// unit(image) + prompt_weight * unit(mean(prompt)), best first.
class SurrogateCaptioner : public Captioner {
public:
    SurrogateCaptioner(std::shared_ptr<const SurrogateWorld> world,
                       std::shared_ptr<const ImageStore> images, std::size_t words = 3,
                       double prompt_weight = 0.5);

    std::string caption(std::string_view image_ref, std::string_view prompt,
                        std::uint64_t seed) override;
    Reentrancy reentrancy() const override { return Reentrancy::reentrant; }

private:
    std::shared_ptr<const SurrogateWorld> world_;
    std::shared_ptr<const ImageStore> images_;
    std::size_t words_;
    double prompt_weight_;
};

// Mean token embedding, not normalized.
class SurrogateEmbedder : public Embedder {
public:
    explicit SurrogateEmbedder(std::shared_ptr<const SurrogateWorld> world);

    Vector embed(std::string_view text) override { return world_->mean_embedding(text); }
    Reentrancy reentrancy() const override { return Reentrancy::reentrant; }

private:
    std::shared_ptr<const SurrogateWorld> world_;
};

// Synthetic landscape: fitness is closeness to the world's target phrase.
// An ensemble is scored by the mean of its unit prompt embeddings.
class SurrogateTargetEvaluator : public PromptEvaluator {
public:
    explicit SurrogateTargetEvaluator(std::shared_ptr<const SurrogateWorld> world);

    double fitness(std::string_view prompt) override { return world_->target_fitness(prompt); }
    double ensemble_fitness(std::span<const std::string> prompts_best_first) override;
    bool reentrant() const override { return true; }

private:
    std::shared_ptr<const SurrogateWorld> world_;
};

}  // namespace glov
