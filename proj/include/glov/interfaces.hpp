#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>

#include "glov/steering.hpp"

namespace glov {

// Adapters that cannot be called from several threads at once report
// `serialized`; the optimizer then never overlaps calls into them.
enum class Reentrancy { reentrant, serialized };

// The prompt generator. Besides text generation it exposes layer
// activations so guidance embeddings can be computed.
class Generator : public ActivationProbe {
public:
    virtual std::size_t hidden_width() const = 0;
    virtual std::size_t layer_count() const = 0;
    virtual std::size_t token_count(std::string_view text) const = 0;

    // Generates at most max_tokens tokens. When guidance is non-null and
    // enabled, its offset is added to the hidden state at every step.
    virtual std::string generate(std::string_view prompt, const GuidanceState* guidance,
                                 std::size_t max_tokens, std::uint64_t seed) = 0;

    virtual Reentrancy reentrancy() const { return Reentrancy::serialized; }
};

// Dual-encoder scorer. Both methods return unit-norm vectors.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual Vector embed_text(std::string_view text) = 0;
    virtual Vector embed_image(std::string_view image_ref) = 0;
    virtual Reentrancy reentrancy() const { return Reentrancy::serialized; }
};

// Encoder-decoder model: free-form text about an image, conditioned on a prompt.
class Captioner {
public:
    virtual ~Captioner() = default;
    virtual std::string caption(std::string_view image_ref, std::string_view prompt,
                                std::uint64_t seed) = 0;
    virtual Reentrancy reentrancy() const { return Reentrancy::serialized; }
};

// Sentence embedder used to match captions against class names.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual Vector embed(std::string_view text) = 0;
    virtual Reentrancy reentrancy() const { return Reentrancy::serialized; }
};

// Precomputed image features keyed by image reference.
class ImageStore {
public:
    void put(std::string ref, Vector embedding) { items_[std::move(ref)] = std::move(embedding); }
    const Vector* find(std::string_view ref) const {
        auto it = items_.find(std::string(ref));
        return it == items_.end() ? nullptr : &it->second;
    }
    std::size_t size() const noexcept { return items_.size(); }

private:
    std::unordered_map<std::string, Vector> items_;
};

}  // namespace glov
