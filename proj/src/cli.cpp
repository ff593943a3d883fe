#include "glov/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/format.h>

#include "glov/config.hpp"
#include "glov/error.hpp"
#include "glov/log.hpp"
#include "glov/report.hpp"
#include "glov/run_log.hpp"
#include "glov/session.hpp"
#include "glov/text.hpp"

namespace glov {
namespace {

namespace fs = std::filesystem;

void apply_log_dir_env(ResolvedConfig& config) {
    if (const char* dir = std::getenv(kLogDirEnv); dir != nullptr && *dir != '\0') {
        config.log_dir = fs::absolute(dir).lexically_normal();
    }
}

std::string slug(std::string_view name) {
    std::string out;
    for (char c : to_lower(name)) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        if (keep) {
            out += c;
        } else if (!out.empty() && out.back() != '-') {
            out += '-';
        }
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out.empty() ? std::string("run") : out;
}

fs::path default_log_path(const ResolvedConfig& config) {
    return config.log_dir / fmt::format("{}-seed{}.jsonl", slug(config.task.name), config.run.seed);
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
}

std::vector<std::string> read_prompt_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read prompts file '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    std::vector<std::string> prompts;
    for (const auto& line : split_lines(ss.str())) {
        if (!trim(line).empty()) prompts.push_back(trim(line));
    }
    if (prompts.empty()) throw ConfigError(fmt::format("prompts file '{}' is empty", path.string()));
    return prompts;
}

// The parts of a config that must match when a run is resumed.
nlohmann::json resume_key(const nlohmann::json& config) {
    nlohmann::json key = config;
    key.erase("log_dir");
    return key;
}

void print_summary(std::ostream& out, const RunResult& result, const InitialRound& initial,
                   const fs::path& log_path) {
    const PromptCandidate best = top_n(result.history, 1).front();
    double seed_best = 0.0;
    for (const auto& s : initial.seeds) seed_best = std::max(seed_best, s.fitness.value_or(0.0));
    out << fmt::format("seed prompt fitness: {:.6f}\n", seed_best);
    out << fmt::format("after first round:   {:.6f}\n", initial.best_so_far);
    out << fmt::format("final best fitness:  {:.6f}\n", *best.fitness);
    out << fmt::format("best prompt:         {}\n", best.text);
    out << fmt::format("ensemble fitness:    {:.6f}\n", result.ensemble_fitness);
    for (std::size_t i = 0; i < result.ensemble.size(); ++i) {
        out << fmt::format("  {}. {}\n", i + 1, result.ensemble[i]);
    }
    out << fmt::format("run log:             {}\n", log_path.string());
}

RunResult optimize_to_log(Session& session, const fs::path& log_path, bool resume, std::ostream& out) {
    const nlohmann::json config_json = to_json(session.config);
    if (resume && fs::exists(log_path)) {
        auto contents = read_run_log(log_path);
        if (resume_key(contents.config) != resume_key(config_json)) {
            throw ConfigError(fmt::format("config differs from the one recorded in '{}'", log_path.string()));
        }
        if (contents.truncated_tail) out << "ignoring a truncated final line in the run log\n";
        auto state = restore(session.setup, session.refs(), contents.initial, contents.records);
        out << fmt::format("resuming after iteration {}\n", state.iteration);
        auto writer = RunLogWriter::append(log_path, contents.valid_bytes);
        RunLogObserver observer(writer, config_json);
        RunResult result = run_from(std::move(state), session.refs(), &observer);
        result.initial = contents.initial;
        result.records.insert(result.records.begin(), contents.records.begin(), contents.records.end());
        return result;
    }
    auto writer = RunLogWriter::create(log_path);
    RunLogObserver observer(writer, config_json);
    return run(session.setup, session.refs(), &observer);
}

void finish_run(const RunResult& result, const fs::path& log_path, std::ostream& out) {
    fs::path prompts_path = log_path;
    prompts_path.replace_extension(".prompts.txt");
    std::string text;
    for (const auto& p : result.ensemble) text += p + "\n";
    write_text(prompts_path, text);
    print_summary(out, result, result.initial, log_path);
    out << fmt::format("ensemble prompts:    {}\n", prompts_path.string());
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitConfig;
    if (dynamic_cast<const BackendError*>(&e) != nullptr) return kExitBackend;
    return kExitRuntime;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    return run_cli(args, out, err, BackendRegistry::with_builtins());
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const BackendRegistry& registry) {
    CLI::App app{"Guided prompt optimization for vision-language classifiers"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string verbosity;
    app.add_option("--log-level", verbosity, "debug, info, warn or error")
        ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

    auto* optimize = app.add_subcommand("optimize", "Run the optimization loop from a config file");
    std::string config_path;
    std::string log_override;
    bool resume = false;
    optimize->add_option("config", config_path, "Run config (JSON)")->required();
    optimize->add_option("--log", log_override, "Run log path (default: <log_dir>/<task>-seed<seed>.jsonl)");
    optimize->add_flag("--resume", resume, "Continue from the last complete line of an existing log");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a prompt ensemble on a manifest");
    std::string eval_config;
    std::string prompts_path;
    std::string manifest_path;
    evaluate_cmd->add_option("config", eval_config, "Run config (JSON)")->required();
    evaluate_cmd->add_option("--prompts", prompts_path, "One prompt per line, best first")->required();
    evaluate_cmd->add_option("--manifest", manifest_path, "Labeled example manifest")->required();

    auto* plot = app.add_subcommand("plot", "Export the optimization curve of a run log as CSV");
    std::string plot_log;
    std::string image_path;
    std::string csv_path;
    double smoothing = kDefaultSmoothing;
    plot->add_option("runlog", plot_log, "Run log (JSONL)")->required();
    plot->add_option("--image", image_path, "Also write an SVG chart here");
    plot->add_option("--out", csv_path, "Write the CSV here instead of stdout");
    plot->add_option("--smoothing", smoothing, "EMA smoothing in (0, 1]");

    auto* sweep = app.add_subcommand("alpha-sweep", "Choose the steering strength by grid search");
    std::string sweep_config;
    std::vector<double> grid;
    std::size_t budget = 0;
    sweep->add_option("config", sweep_config, "Run config (JSON)")->required();
    sweep->add_option("--grid", grid, "Comma-separated alpha values")->delimiter(',');
    sweep->add_option("--budget", budget, "Iterations per alpha (default: max_iterations / 5, rounded up)");

    auto* demo = app.add_subcommand("surrogate-demo", "Run the bundled synthetic task end to end");
    std::uint64_t demo_seed = 0;
    std::string demo_log;
    std::string demo_image;
    demo->add_option("--seed", demo_seed, "Run seed");
    demo->add_option("--log", demo_log, "Run log path");
    demo->add_option("--image", demo_image, "Write an SVG chart of the run here");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitConfig;
    }
    if (!verbosity.empty()) {
        log::set_level(verbosity == "debug"  ? log::Level::debug
                       : verbosity == "info" ? log::Level::info
                       : verbosity == "warn" ? log::Level::warn
                                             : log::Level::error);
    }

    try {
        if (*optimize) {
            auto config = load_config(config_path);
            apply_log_dir_env(config);
            Session session = open_session(config, registry);
            const fs::path log_path = log_override.empty() ? default_log_path(config) : fs::path(log_override);
            auto result = optimize_to_log(session, log_path, resume, out);
            finish_run(result, log_path, out);
        } else if (*evaluate_cmd) {
            auto config = load_config(eval_config);
            Session session = open_session(config, registry, fs::absolute(manifest_path));
            const auto prompts = read_prompt_file(prompts_path);
            const auto report = evaluate(prompts, *session.task(), session.backends, config.run.tau, config.run.seed);
            out << format_report(report);
        } else if (*plot) {
            if (!(smoothing > 0.0 && smoothing <= 1.0)) throw ConfigError("--smoothing must be in (0, 1]");
            const auto contents = read_run_log(plot_log);
            const auto rows = curve_from_log(contents.initial, contents.records, smoothing);
            const std::string csv = curve_csv(rows);
            if (csv_path.empty()) {
                out << csv;
            } else {
                write_text(csv_path, csv);
            }
            if (!image_path.empty()) {
                const std::string title = contents.config.at("task").value("name", "run");
                write_text(image_path, curve_svg(rows, title));
            }
        } else if (*sweep) {
            auto config = load_config(sweep_config);
            Session session = open_session(config, registry);
            if (grid.empty()) grid = config.run.alpha_grid;
            const auto result = alpha_grid_search(session.setup, session.refs(), grid, budget);
            for (const auto& [alpha, score] : result.scores) {
                out << fmt::format("alpha {:<8g} best fitness {:.6f}\n", alpha, score);
            }
            out << fmt::format("chosen alpha: {:g}\n", result.alpha);
        } else if (*demo) {
            auto doc = surrogate_demo_config();
            doc["run"]["seed"] = demo_seed;
            auto config = resolve_config(doc, fs::current_path());
            apply_log_dir_env(config);
            Session session = open_session(config, registry);
            const fs::path log_path = demo_log.empty() ? default_log_path(config) : fs::path(demo_log);
            auto writer = RunLogWriter::create(log_path);
            RunLogObserver observer(writer, to_json(config));
            auto result = run(session.setup, session.refs(), &observer);
            out << curve_csv(curve_from_log(result.initial, result.records));
            if (!demo_image.empty()) {
                write_text(demo_image, curve_svg(curve_from_log(result.initial, result.records), config.task.name));
            }
            finish_run(result, log_path, out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitOk;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace glov
