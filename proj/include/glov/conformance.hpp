#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "glov/interfaces.hpp"

namespace glov {

struct ConformanceReport {
    std::string backend;
    std::vector<std::string> failures;

    bool ok() const noexcept { return failures.empty(); }
    // Throws BackendError listing every failure.
    void throw_if_failed() const;
};

inline constexpr double kUnitNormTolerance = 1e-5;

// Contract checks run before an optimization starts. Each probes the adapter
// with small inputs and records every violated invariant.
ConformanceReport check_generator(Generator& generator, std::string_view sample_text = "a photo of a dog");
ConformanceReport check_scorer(Scorer& scorer, std::string_view sample_image,
                               std::string_view sample_text = "a photo of a dog");
ConformanceReport check_captioner(Captioner& captioner, std::string_view sample_image,
                                  std::string_view prompt = "describe the image");
ConformanceReport check_embedder(Embedder& embedder, std::string_view sample_text = "a photo of a dog");

}  // namespace glov
