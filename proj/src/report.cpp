#include "glov/report.hpp"

#include <algorithm>

#include <fmt/core.h>

#include "glov/error.hpp"

namespace glov {
namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

AccuracyReport evaluate(std::span<const std::string> prompts, const FewShotTask& task,
                        const BackendSet& backends, double tau, std::uint64_t seed) {
    task.validate();
    if (prompts.empty()) throw ValidationError("no prompts to evaluate");
    std::vector<std::optional<std::size_t>> preds;
    if (task.mode == TaskMode::dual_encoder) {
        if (!backends.scorer) throw BackendError("dual_encoder evaluation needs a scorer");
        for (auto p : predict_dual(prompts, task, *backends.scorer, tau)) preds.emplace_back(p);
    } else {
        if (!backends.captioner || !backends.embedder) {
            throw BackendError("open-ended evaluation needs a captioner and an embedder");
        }
        std::vector<std::vector<std::optional<std::size_t>>> per_prompt;
        for (const auto& p : prompts) {
            per_prompt.push_back(predictions_open(p, task, *backends.captioner, *backends.embedder, seed));
        }
        preds = vote(per_prompt);
    }
    AccuracyReport report;
    report.overall = accuracy(preds, task);
    for (const auto& name : task.class_names) report.per_class.push_back(ClassAccuracy{name, 0, 0});
    for (std::size_t i = 0; i < preds.size(); ++i) {
        auto& c = report.per_class[task.examples[i].label];
        ++c.total;
        if (preds[i] && *preds[i] == task.examples[i].label) ++c.correct;
    }
    return report;
}

std::string format_report(const AccuracyReport& report) {
    std::string out = fmt::format("overall top-1: {:.4f}\n", report.overall);
    for (const auto& c : report.per_class) {
        if (c.total == 0) continue;
        out += fmt::format("  {:<24} {:.4f} ({}/{})\n", c.name, c.accuracy(), c.correct, c.total);
    }
    return out;
}

std::vector<CurveRow> build_curve(std::span<const std::optional<double>> best_candidates,
                                  std::span<const double> ensembles, double initial_best,
                                  double smoothing) {
    if (best_candidates.empty()) throw ValidationError("cannot build a curve from an empty log");
    if (ensembles.size() != best_candidates.size()) throw DimensionError("curve columns differ in length");
    if (!(smoothing > 0.0 && smoothing <= 1.0)) throw ValidationError("smoothing must be in (0, 1]");
    std::vector<CurveRow> rows;
    double best = initial_best;
    std::optional<double> ema;
    for (std::size_t i = 0; i < best_candidates.size(); ++i) {
        const auto& x = best_candidates[i];
        if (x) {
            best = std::max(best, *x);
            ema = ema ? smoothing * *x + (1.0 - smoothing) * *ema : *x;
        }
        rows.push_back(CurveRow{i + 1, x, best, ensembles[i], ema});
    }
    return rows;
}

std::vector<CurveRow> curve_from_log(const InitialRound& initial, std::span<const IterationRecord> records,
                                     double smoothing) {
    if (records.empty()) throw ValidationError("run log has no iterations to plot");
    std::vector<std::optional<double>> xs;
    std::vector<double> ens;
    for (const auto& r : records) {
        xs.push_back(r.best_candidate);
        ens.push_back(r.ensemble_fitness);
    }
    auto rows = build_curve(xs, ens, initial.best_so_far, smoothing);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].iteration = records[i].iteration;
        if (rows[i].best_so_far != records[i].best_so_far) {
            throw ParseError(fmt::format("iteration {} logs best-so-far {} but its candidates give {}",
                                         records[i].iteration, records[i].best_so_far, rows[i].best_so_far),
                             {});
        }
    }
    return rows;
}

std::string curve_csv(std::span<const CurveRow> rows) {
    std::string out = "iteration,best_candidate,best_so_far,ensemble,ema\n";
    auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string(); };
    for (const auto& r : rows) {
        out += fmt::format("{},{},{:.6f},{:.6f},{}\n", r.iteration, opt(r.best_candidate), r.best_so_far,
                           r.ensemble, opt(r.ema));
    }
    return out;
}

std::string curve_svg(std::span<const CurveRow> rows, const std::string& title) {
    constexpr double kW = 640, kH = 400, kL = 60, kR = 20, kT = 40, kB = 50;
    if (rows.empty()) throw ValidationError("cannot plot an empty curve");
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& r : rows) {
        for (double v : {r.best_so_far, r.ensemble}) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (r.best_candidate) {
            lo = std::min(lo, *r.best_candidate);
            hi = std::max(hi, *r.best_candidate);
        }
    }
    if (hi - lo < 1e-6) {
        lo -= 0.05;
        hi += 0.05;
    }
    const double x0 = static_cast<double>(rows.front().iteration);
    const double x1 = std::max(x0 + 1.0, static_cast<double>(rows.back().iteration));
    auto px = [&](double x) { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); };
    auto py = [&](double y) { return kT + (hi - y) / (hi - lo) * (kH - kT - kB); };

    auto polyline = [&](auto value, const char* color, const char* dash) {
        std::string pts;
        for (const auto& r : rows) {
            const std::optional<double> v = value(r);
            if (v) pts += fmt::format("{:.2f},{:.2f} ", px(static_cast<double>(r.iteration)), py(*v));
        }
        return fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" stroke-dasharray=\"{}\" points=\"{}\"/>\n",
                           color, dash, pts);
    };

    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{}\" y=\"24\" font-size=\"15\">{}</text>\n",
        kW, kH, kL, xml_escape(title));
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kL, kT, kH - kB);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", kL, kH - kB, kW - kR);
    for (int i = 0; i <= 4; ++i) {
        const double y = lo + (hi - lo) * i / 4.0;
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3f}</text>\n", kL - 6, py(y) + 4, y);
    }
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">iteration</text>\n", (kL + kW - kR) / 2, kH - 12);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", kL, kH - kB + 16, rows.front().iteration);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", kW - kR, kH - kB + 16, rows.back().iteration);
    svg += polyline([](const CurveRow& r) { return r.best_candidate; }, "#9ab", "2,3");
    svg += polyline([](const CurveRow& r) { return r.ema; }, "#1f77b4", "none");
    svg += polyline([](const CurveRow& r) { return std::optional<double>(r.best_so_far); }, "#d62728", "none");
    svg += polyline([](const CurveRow& r) { return std::optional<double>(r.ensemble); }, "#2ca02c", "6,3");
    const char* labels[] = {"best candidate", "ema", "best so far", "ensemble"};
    const char* colors[] = {"#9ab", "#1f77b4", "#d62728", "#2ca02c"};
    for (int i = 0; i < 4; ++i) {
        svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"3\" fill=\"{}\"/><text x=\"{}\" y=\"{}\">{}</text>\n",
                           kW - 150, kT + 8 + 16 * i, colors[i], kW - 132, kT + 13 + 16 * i, labels[i]);
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace glov
