#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glov/fitness.hpp"
#include "glov/optimizer.hpp"
#include "glov/registry.hpp"

namespace glov {

struct ClassAccuracy {
    std::string name;
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

struct AccuracyReport {
    double overall = 0.0;
    std::vector<ClassAccuracy> per_class;
};

// Ensemble accuracy of prompts (best first) on a task, per class and overall.
AccuracyReport evaluate(std::span<const std::string> prompts, const FewShotTask& task,
                        const BackendSet& backends, double tau = kDefaultTau,
                        std::uint64_t seed = 0);

std::string format_report(const AccuracyReport& report);

inline constexpr double kDefaultSmoothing = 0.3;

struct CurveRow {
    std::size_t iteration = 0;
    std::optional<double> best_candidate;
    double best_so_far = 0.0;
    double ensemble = 0.0;
    std::optional<double> ema;  // of best_candidate; unset until the first candidate
};

// best_so_far_t = max(initial_best, best candidates up to t).
// ema_t = s * x_t + (1 - s) * ema_{t-1}, starting from the first x; rows
// without a candidate carry the previous value.
std::vector<CurveRow> build_curve(std::span<const std::optional<double>> best_candidates,
                                  std::span<const double> ensembles, double initial_best,
                                  double smoothing = kDefaultSmoothing);

// Throws ValidationError for an empty log and ParseError when the logged
// best-so-far disagrees with the recomputed column.
std::vector<CurveRow> curve_from_log(const InitialRound& initial,
                                     std::span<const IterationRecord> records,
                                     double smoothing = kDefaultSmoothing);

std::string curve_csv(std::span<const CurveRow> rows);
std::string curve_svg(std::span<const CurveRow> rows, const std::string& title);

}  // namespace glov
