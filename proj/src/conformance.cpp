#include "glov/conformance.hpp"

#include <cmath>

#include <fmt/core.h>

#include "glov/error.hpp"
#include "glov/fitness.hpp"

namespace glov {
namespace {

bool all_finite(const Vector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void check_unit(ConformanceReport& report, const Vector& v, std::string_view what) {
    if (v.empty()) {
        report.failures.push_back(fmt::format("{} returned an empty vector", what));
        return;
    }
    if (!all_finite(v)) {
        report.failures.push_back(fmt::format("{} returned non-finite values", what));
        return;
    }
    const double n = norm(v);
    if (std::abs(n - 1.0) > kUnitNormTolerance) {
        report.failures.push_back(fmt::format("{} returned norm {:.8f}, expected 1", what, n));
    }
}

template <class F>
void guarded(ConformanceReport& report, std::string_view what, F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        report.failures.push_back(fmt::format("{} threw: {}", what, e.what()));
    }
}

}  // namespace

void ConformanceReport::throw_if_failed() const {
    if (ok()) return;
    std::string msg = fmt::format("{} backend failed conformance:", backend);
    for (const auto& f : failures) msg += "\n  - " + f;
    throw BackendError(msg);
}

ConformanceReport check_generator(Generator& generator, std::string_view sample_text) {
    ConformanceReport report{"generator", {}};
    const std::size_t width = generator.hidden_width();
    const std::size_t layers = generator.layer_count();
    if (width == 0) report.failures.push_back("hidden width is 0");
    if (layers == 0) report.failures.push_back("layer count is 0");
    if (!report.ok()) return report;

    guarded(report, "probe_activations", [&] {
        const auto acts = generator.probe_activations(sample_text, static_cast<int>(layers / 2));
        if (acts.rows() != generator.token_count(sample_text)) {
            report.failures.push_back(fmt::format("probe returned {} rows for {} tokens", acts.rows(),
                                                  generator.token_count(sample_text)));
        }
        if (acts.cols() != width) {
            report.failures.push_back(
                fmt::format("probe returned width {}, expected {}", acts.cols(), width));
        }
        acts.check();
    });
    guarded(report, "generate", [&] {
        constexpr std::size_t kMax = 4;
        const std::string a = generator.generate(sample_text, nullptr, kMax, 0);
        const std::string b = generator.generate(sample_text, nullptr, kMax, 0);
        if (a != b) report.failures.push_back("generate is not deterministic for a fixed seed");
        if (generator.token_count(a) > kMax) {
            report.failures.push_back(
                fmt::format("generate emitted {} tokens with max {}", generator.token_count(a), kMax));
        }
    });
    return report;
}

ConformanceReport check_scorer(Scorer& scorer, std::string_view sample_image,
                               std::string_view sample_text) {
    ConformanceReport report{"scorer", {}};
    Vector t;
    Vector i;
    guarded(report, "embed_text", [&] {
        t = scorer.embed_text(sample_text);
        check_unit(report, t, "embed_text");
    });
    guarded(report, "embed_image", [&] {
        i = scorer.embed_image(sample_image);
        check_unit(report, i, "embed_image");
    });
    if (!t.empty() && !i.empty() && t.size() != i.size()) {
        report.failures.push_back(
            fmt::format("text width {} differs from image width {}", t.size(), i.size()));
    }
    return report;
}

ConformanceReport check_captioner(Captioner& captioner, std::string_view sample_image,
                                  std::string_view prompt) {
    ConformanceReport report{"captioner", {}};
    guarded(report, "caption", [&] {
        const std::string a = captioner.caption(sample_image, prompt, 0);
        const std::string b = captioner.caption(sample_image, prompt, 0);
        if (a != b) report.failures.push_back("caption is not deterministic for a fixed seed");
    });
    return report;
}

ConformanceReport check_embedder(Embedder& embedder, std::string_view sample_text) {
    ConformanceReport report{"embedder", {}};
    guarded(report, "embed", [&] {
        const Vector a = embedder.embed(sample_text);
        const Vector b = embedder.embed(sample_text);
        if (a.empty() || !all_finite(a)) {
            report.failures.push_back("embed returned an empty or non-finite vector");
        } else if (a != b) {
            report.failures.push_back("embed is not deterministic");
        }
    });
    return report;
}

}  // namespace glov
