#include "glov/steering.hpp"

#include <cmath>

#include <fmt/core.h>

#include "glov/error.hpp"

namespace glov {

ActivationMatrix::ActivationMatrix(std::size_t rows, std::size_t cols, int layer_index)
    : rows_(rows), cols_(cols), layer_index_(layer_index), values_(rows * cols, 0.0) {}

ActivationMatrix::ActivationMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                                   int layer_index)
    : rows_(rows), cols_(cols), layer_index_(layer_index), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
        throw DimensionError(fmt::format("activation matrix {}x{} given {} values", rows_, cols_,
                                         values_.size()));
    }
}

ActivationMatrix ActivationMatrix::from_rows(const std::vector<Vector>& rows, int layer_index) {
    if (rows.empty()) throw DimensionError("activation matrix needs at least one row");
    const std::size_t cols = rows.front().size();
    std::vector<double> values;
    values.reserve(rows.size() * cols);
    for (const auto& r : rows) {
        if (r.size() != cols) throw DimensionError("activation rows have different widths");
        values.insert(values.end(), r.begin(), r.end());
    }
    return ActivationMatrix(rows.size(), cols, std::move(values), layer_index);
}

std::span<double> ActivationMatrix::row(std::size_t r) {
    return std::span<double>(values_).subspan(r * cols_, cols_);
}

std::span<const double> ActivationMatrix::row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
}

void ActivationMatrix::check() const {
    if (rows_ < 1 || cols_ < 1) {
        throw DimensionError(fmt::format("activation matrix must be non-empty, got {}x{}", rows_, cols_));
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw DimensionError("activation matrix has a non-finite entry");
    }
}

EmbeddingSource embedding_source(const SteeringMode& mode) {
    return mode.kind == SteeringMode::Kind::last_token_source ? EmbeddingSource::last_token
                                                              : EmbeddingSource::mean_tokens;
}

Vector sentence_embedding(const ActivationMatrix& acts, EmbeddingSource source) {
    acts.check();
    const std::size_t s = acts.rows();
    const std::size_t e = acts.cols();
    if (source == EmbeddingSource::last_token) {
        auto last = acts.row(s - 1);
        return Vector(last.begin(), last.end());
    }
    Vector out(e, 0.0);
    for (std::size_t r = 0; r < s; ++r) {
        auto row = acts.row(r);
        for (std::size_t c = 0; c < e; ++c) out[c] += row[c];
    }
    for (double& v : out) v /= static_cast<double>(s);
    return out;
}

Vector guidance_vector(std::span<const double> positive, std::span<const double> negative,
                       double alpha) {
    if (positive.size() != negative.size()) {
        throw DimensionError(fmt::format("guidance embeddings differ in width: {} vs {}",
                                         positive.size(), negative.size()));
    }
    Vector g(positive.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = alpha * (positive[i] - negative[i]);
    return g;
}

bool offset_applies_to_row(const SteeringMode& mode, std::size_t row, std::size_t rows) {
    switch (mode.kind) {
        case SteeringMode::Kind::last_token:
        case SteeringMode::Kind::last_token_source:
            return row + 1 == rows;
        case SteeringMode::Kind::all_tokens:
            return row < rows;
        case SteeringMode::Kind::actadd_first_n:
            return row < std::min(mode.prefix_tokens.value_or(0), rows);
    }
    return false;
}

ActivationMatrix apply_offset(const ActivationMatrix& hidden, std::span<const double> g,
                              const SteeringMode& mode) {
    if (g.size() != hidden.cols()) {
        throw DimensionError(fmt::format("offset width {} does not match hidden width {}", g.size(),
                                         hidden.cols()));
    }
    ActivationMatrix out = hidden;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        if (!offset_applies_to_row(mode, r, out.rows())) continue;
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += g[c];
    }
    return out;
}

Vector GuidanceState::offset() const {
    if (!enabled) return {};
    return guidance_vector(positive_embedding, negative_embedding, alpha);
}

SteeringMode GuidanceState::effective_mode() const {
    SteeringMode m = mode;
    if (m.kind == SteeringMode::Kind::actadd_first_n) m.prefix_tokens = prefix_tokens;
    return m;
}

GuidanceState make_guidance(double alpha, int layer_index, const SteeringMode& mode) {
    GuidanceState s;
    s.alpha = alpha;
    s.layer_index = layer_index;
    s.mode = mode;
    return s;
}

GuidanceState embed_pair(const GuidanceState& base, const GuidancePair& pair,
                         ActivationProbe& probe) {
    if (pair.positive_fitness < pair.negative_fitness) {
        throw HistoryError("guidance pair has positive fitness below negative fitness");
    }
    const auto source = embedding_source(base.mode);
    const ActivationMatrix pos = probe.probe_activations(pair.positive, base.layer_index);
    const ActivationMatrix neg = probe.probe_activations(pair.negative, base.layer_index);

    GuidanceState next = base;
    next.pair = pair;
    next.positive_embedding = sentence_embedding(pos, source);
    next.negative_embedding = sentence_embedding(neg, source);
    if (next.positive_embedding.size() != next.negative_embedding.size()) {
        throw DimensionError("probe returned embeddings of different widths");
    }
    next.prefix_tokens = next.mode.kind == SteeringMode::Kind::actadd_first_n
                             ? next.mode.prefix_tokens.value_or(pos.rows())
                             : 0;
    next.enabled = true;
    return next;
}

GuidanceUpdate maybe_update_guidance(const GuidanceState& state, const HistoryBuffer& history,
                                     ActivationProbe& probe) {
    const GuidancePair candidate = best_pair(history);
    if (state.pair && !(candidate.positive_fitness > state.pair->positive_fitness)) {
        return {state, false};
    }
    return {embed_pair(state, candidate, probe), true};
}

}  // namespace glov
