#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glov/core.hpp"

namespace glov {

using Vector = std::vector<double>;

// Row-major S x E activations for one prompt at one layer.
class ActivationMatrix {
public:
    ActivationMatrix() = default;
    ActivationMatrix(std::size_t rows, std::size_t cols, int layer_index = 0);
    ActivationMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                     int layer_index = 0);

    static ActivationMatrix from_rows(const std::vector<Vector>& rows, int layer_index = 0);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    int layer_index() const noexcept { return layer_index_; }

    std::span<double> row(std::size_t r);
    std::span<const double> row(std::size_t r) const;
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

    const std::vector<double>& values() const noexcept { return values_; }

    // Throws DimensionError unless S >= 1, E >= 1 and every entry is finite.
    void check() const;

    friend bool operator==(const ActivationMatrix&, const ActivationMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    int layer_index_ = 0;
    std::vector<double> values_;
};

enum class EmbeddingSource { mean_tokens, last_token };

EmbeddingSource embedding_source(const SteeringMode& mode);

// Eq-style sentence embedding: mean over rows, or the last row unchanged.
Vector sentence_embedding(const ActivationMatrix& acts, EmbeddingSource source);

// alpha * (positive - negative), elementwise.
Vector guidance_vector(std::span<const double> positive, std::span<const double> negative,
                       double alpha);

// True when the offset is added to `row` of an S-row hidden matrix. The
// prefix length for actadd_first_n must already be resolved.
bool offset_applies_to_row(const SteeringMode& mode, std::size_t row, std::size_t rows);

// Adds g to the rows selected by the mode; every other entry is untouched.
ActivationMatrix apply_offset(const ActivationMatrix& hidden, std::span<const double> g,
                              const SteeringMode& mode);

// Anything that can report layer activations for a text.
class ActivationProbe {
public:
    virtual ~ActivationProbe() = default;
    virtual ActivationMatrix probe_activations(std::string_view text, int layer) = 0;
};

struct GuidanceState {
    std::optional<GuidancePair> pair;
    Vector positive_embedding;
    Vector negative_embedding;
    double alpha = 0.0;
    int layer_index = 0;
    SteeringMode mode;  // as configured
    // actadd_first_n prefix in effect: the configured one, or the positive
    // prompt's token count. Zero for the other modes.
    std::size_t prefix_tokens = 0;
    bool enabled = false;

    // The configured mode with the actadd prefix filled in.
    SteeringMode effective_mode() const;

    // alpha * (H+ - H-); empty when the state is not enabled.
    Vector offset() const;

    friend bool operator==(const GuidanceState&, const GuidanceState&) = default;
};

GuidanceState make_guidance(double alpha, int layer_index, const SteeringMode& mode);

struct GuidanceUpdate {
    GuidanceState state;
    bool updated = false;
};

// Re-selects and re-embeds the pair only when the history's best fitness
// strictly beats the current positive prompt (or the state is still empty).
GuidanceUpdate maybe_update_guidance(const GuidanceState& state, const HistoryBuffer& history,
                                     ActivationProbe& probe);

// Embeds an explicit pair; used on resume where the pair comes from a log.
GuidanceState embed_pair(const GuidanceState& base, const GuidancePair& pair,
                         ActivationProbe& probe);

}  // namespace glov
