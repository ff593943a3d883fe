#include "glov/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/core.h>

#include "glov/error.hpp"
#include "glov/text.hpp"

namespace glov {
namespace {

constexpr std::uint64_t kLcgMul = 6364136223846793005ULL;
constexpr std::uint64_t kLcgAdd = 1442695040888963407ULL;

double unit_interval(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

std::shared_ptr<const SurrogateWorld> require(std::shared_ptr<const SurrogateWorld> world) {
    if (!world) throw BackendError("surrogate backend has no world");
    return world;
}

}  // namespace

std::vector<std::string> default_vocabulary() {
    return split_whitespace(
        "a an the photo image picture of small large big tiny blue red green yellow bird dog cat "
        "flower car plane tree on in with near bright dark close up view blurry sharp drawing "
        "painting sketch rendering cropped good bad clean dirty natural scene object animal wild "
        "pet style art toy model outdoor indoor grass water sky branch field street food texture "
        "pattern shiny");
}

std::vector<std::string> surrogate_tokenize(std::string_view text) {
    return split_whitespace(to_lower(text));
}

Vector surrogate_embed(std::string_view token, std::size_t dim) {
    if (dim == 0) throw DimensionError("surrogate embedding width must be >= 1");
    std::uint64_t x = fnv1a64(token);
    Vector v(dim);
    double sq = 0.0;
    for (double& c : v) {
        x = kLcgMul * x + kLcgAdd;
        c = unit_interval(x) * 2.0 - 1.0;
        sq += c * c;
    }
    const double n = std::sqrt(sq);
    for (double& c : v) c /= n;
    return v;
}

SurrogateWorld::SurrogateWorld(std::vector<std::string> vocabulary, std::size_t dim,
                               std::string target_phrase)
    : vocabulary_(std::move(vocabulary)), dim_(dim), target_phrase_(std::move(target_phrase)) {
    if (vocabulary_.empty()) throw ConfigError("surrogate vocabulary is empty");
    if (dim_ == 0) throw ConfigError("surrogate dim must be >= 1");
    table_.reserve(vocabulary_.size());
    for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
        vocabulary_[i] = to_lower(vocabulary_[i]);
        if (!index_.emplace(vocabulary_[i], i).second) {
            throw ConfigError(fmt::format("surrogate vocabulary repeats '{}'", vocabulary_[i]));
        }
        table_.push_back(surrogate_embed(vocabulary_[i], dim_));
    }
}

SurrogateWorld SurrogateWorld::from_table(std::vector<std::string> vocabulary,
                                          std::vector<Vector> table, std::string target_phrase,
                                          std::unordered_map<std::string, Vector> extra) {
    if (vocabulary.empty() || vocabulary.size() != table.size()) {
        throw DimensionError("vocabulary and embedding table must be non-empty and equal length");
    }
    SurrogateWorld w{RawTag{}};
    w.dim_ = table.front().size();
    if (w.dim_ == 0) throw DimensionError("embedding table rows are empty");
    for (std::size_t i = 0; i < vocabulary.size(); ++i) {
        if (table[i].size() != w.dim_) throw DimensionError("embedding table rows differ in width");
        if (!w.index_.emplace(vocabulary[i], i).second) {
            throw ConfigError(fmt::format("vocabulary repeats '{}'", vocabulary[i]));
        }
    }
    for (const auto& [token, v] : extra) {
        if (v.size() != w.dim_) throw DimensionError(fmt::format("extra token '{}' width", token));
    }
    w.vocabulary_ = std::move(vocabulary);
    w.table_ = std::move(table);
    w.target_phrase_ = std::move(target_phrase);
    w.extra_ = std::move(extra);
    return w;
}

Vector SurrogateWorld::embed(std::string_view token) const {
    const std::string key(token);
    if (auto it = index_.find(key); it != index_.end()) return table_[it->second];
    if (auto it = extra_.find(key); it != extra_.end()) return it->second;
    return surrogate_embed(token, dim_);
}

std::vector<Vector> SurrogateWorld::token_embeddings(std::string_view text) const {
    std::vector<Vector> rows;
    for (const auto& tok : surrogate_tokenize(text)) rows.push_back(embed(tok));
    return rows;
}

Vector SurrogateWorld::mean_embedding(std::string_view text) const {
    const auto rows = token_embeddings(text);
    if (rows.empty()) throw ValidationError("text has no tokens");
    Vector mean(dim_, 0.0);
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < dim_; ++i) mean[i] += r[i];
    }
    for (double& x : mean) x /= static_cast<double>(rows.size());
    return mean;
}

double SurrogateWorld::target_fitness(std::string_view prompt) const {
    if (target_phrase_.empty()) throw ConfigError("surrogate world has no target phrase");
    const double c = cosine(mean_embedding(prompt), mean_embedding(target_phrase_));
    return std::clamp((1.0 + c) / 2.0, 0.0, 1.0);
}

Vector SurrogateWorld::logits(std::span<const double> hidden) const {
    Vector out(table_.size());
    for (std::size_t i = 0; i < table_.size(); ++i) out[i] = dot(table_[i], hidden);
    return out;
}

Vector SurrogateWorld::next_token_probs(std::span<const double> hidden, double temperature) const {
    if (!(temperature > 0.0)) throw ValidationError("sampling temperature must be > 0");
    Vector p = logits(hidden);
    const double m = *std::max_element(p.begin(), p.end());
    double z = 0.0;
    for (double& x : p) {
        x = std::exp((x - m) / temperature);
        z += x;
    }
    for (double& x : p) x /= z;
    return p;
}

SurrogateGenerator::SurrogateGenerator(std::shared_ptr<const SurrogateWorld> world,
                                       std::size_t layers, double temperature)
    : world_(require(std::move(world))), layers_(layers), temperature_(temperature) {
    if (layers_ == 0) throw ConfigError("surrogate layer count must be >= 1");
    if (!(temperature_ >= 0.0)) throw ConfigError("surrogate temperature must be >= 0");
}

std::size_t SurrogateGenerator::token_count(std::string_view text) const {
    return surrogate_tokenize(text).size();
}

ActivationMatrix SurrogateGenerator::probe_activations(std::string_view text, int layer) {
    if (layer < 0 || static_cast<std::size_t>(layer) >= layers_) {
        throw BackendError(fmt::format("layer {} outside [0, {})", layer, layers_));
    }
    const auto rows = world_->token_embeddings(text);
    if (rows.empty()) throw ValidationError("cannot probe text without tokens");
    return ActivationMatrix::from_rows(rows, layer);
}

std::string SurrogateGenerator::generate(std::string_view prompt, const GuidanceState* guidance,
                                         std::size_t max_tokens, std::uint64_t seed) {
    const auto prompt_tokens = surrogate_tokenize(prompt);
    if (prompt_tokens.empty()) throw ValidationError("generation prompt has no tokens");

    Vector offset;
    SteeringMode mode;
    if (guidance != nullptr && guidance->enabled) {
        offset = guidance->offset();
        mode = guidance->effective_mode();
        if (offset.size() != world_->dim()) {
            throw DimensionError(fmt::format("guidance width {} does not match hidden width {}",
                                             offset.size(), world_->dim()));
        }
    }

    std::mt19937_64 rng(seed);
    const auto& vocab = world_->vocabulary();
    std::string out;
    std::string previous = prompt_tokens.back();
    std::size_t rows = prompt_tokens.size();
    for (std::size_t t = 0; t < max_tokens; ++t) {
        Vector h = world_->embed(previous);
        if (!offset.empty() && offset_applies_to_row(mode, rows - 1, rows)) {
            for (std::size_t i = 0; i < h.size(); ++i) h[i] += offset[i];
        }
        std::size_t next = 0;
        if (temperature_ == 0.0) {
            next = argmax_lowest(world_->logits(h));
        } else {
            const Vector p = world_->next_token_probs(h, temperature_);
            const double u = unit_interval(rng());
            double cum = 0.0;
            next = p.size() - 1;
            for (std::size_t i = 0; i < p.size(); ++i) {
                cum += p[i];
                if (u < cum) {
                    next = i;
                    break;
                }
            }
        }
        if (!out.empty()) out += ' ';
        out += vocab[next];
        previous = vocab[next];
        ++rows;
    }
    return out;
}

SurrogateScorer::SurrogateScorer(std::shared_ptr<const SurrogateWorld> world,
                                 std::shared_ptr<const ImageStore> images)
    : world_(require(std::move(world))), images_(std::move(images)) {
    if (!images_) throw BackendError("surrogate scorer has no image store");
}

Vector SurrogateScorer::embed_text(std::string_view text) {
    return unit(world_->mean_embedding(text));
}

Vector SurrogateScorer::embed_image(std::string_view image_ref) {
    const Vector* v = images_->find(image_ref);
    if (v == nullptr) throw BackendError(fmt::format("unknown image '{}'", image_ref));
    if (v->size() != world_->dim()) {
        throw DimensionError(fmt::format("image '{}' has width {}, expected {}", image_ref,
                                         v->size(), world_->dim()));
    }
    return unit(*v);
}

SurrogateCaptioner::SurrogateCaptioner(std::shared_ptr<const SurrogateWorld> world,
                                       std::shared_ptr<const ImageStore> images, std::size_t words,
                                       double prompt_weight)
    : world_(require(std::move(world))),
      images_(std::move(images)),
      words_(words),
      prompt_weight_(prompt_weight) {
    if (!images_) throw BackendError("surrogate captioner has no image store");
    if (words_ == 0) throw ConfigError("caption_words must be >= 1");
}

std::string SurrogateCaptioner::caption(std::string_view image_ref, std::string_view prompt,
                                        std::uint64_t /*seed*/) {
    const Vector* img = images_->find(image_ref);
    if (img == nullptr) throw BackendError(fmt::format("unknown image '{}'", image_ref));
    if (img->size() != world_->dim()) throw DimensionError("image width does not match the world");
    Vector query = unit(*img);
    if (prompt_weight_ != 0.0 && !surrogate_tokenize(prompt).empty()) {
        const Vector p = unit(world_->mean_embedding(prompt));
        for (std::size_t i = 0; i < query.size(); ++i) query[i] += prompt_weight_ * p[i];
    }
    const Vector scores = world_->logits(query);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::string out;
    for (std::size_t i = 0; i < std::min(words_, order.size()); ++i) {
        if (!out.empty()) out += ' ';
        out += world_->vocabulary()[order[i]];
    }
    return out;
}

SurrogateEmbedder::SurrogateEmbedder(std::shared_ptr<const SurrogateWorld> world)
    : world_(require(std::move(world))) {}

SurrogateTargetEvaluator::SurrogateTargetEvaluator(std::shared_ptr<const SurrogateWorld> world)
    : world_(require(std::move(world))) {
    if (world_->target_phrase().empty()) throw ConfigError("surrogate target phrase is empty");
}

double SurrogateTargetEvaluator::ensemble_fitness(std::span<const std::string> prompts_best_first) {
    if (prompts_best_first.empty()) throw ValidationError("prompt ensemble is empty");
    Vector sum(world_->dim(), 0.0);
    for (const auto& p : prompts_best_first) {
        const Vector u = unit(world_->mean_embedding(p));
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += u[i];
    }
    const double c = cosine(sum, world_->mean_embedding(world_->target_phrase()));
    return std::clamp((1.0 + c) / 2.0, 0.0, 1.0);
}

}  // namespace glov
