#include "glov/metaprompt.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>

#include <fmt/core.h>

#include "glov/error.hpp"
#include "glov/log.hpp"
#include "glov/text.hpp"

namespace glov {
namespace {

constexpr std::array<std::string_view, 5> kTaskPlaceholders = {
    "{task_name}", "{task_description}", "{num_candidates}", "{top_examples}",
    "{bottom_examples}"};

constexpr std::string_view kNoneYet = "(none yet)";

struct Binding {
    std::string_view key;
    std::string value;
};

// Single left-to-right pass, so substituted values are never rescanned.
std::string substitute(std::string_view text, std::span<const Binding> bindings) {
    std::string out;
    out.reserve(text.size() + 256);
    std::size_t i = 0;
    while (i < text.size()) {
        bool replaced = false;
        if (text[i] == '{') {
            for (const auto& b : bindings) {
                if (text.compare(i, b.key.size(), b.key) == 0) {
                    out += b.value;
                    i += b.key.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) out.push_back(text[i++]);
    }
    return out;
}

std::string render_examples(const MetaPromptTemplate& tmpl,
                            std::span<const PromptCandidate> examples) {
    if (examples.empty()) return std::string(kNoneYet);
    std::string out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        if (!ex.fitness) {
            throw TemplateError(fmt::format("in-context example '{}' has no fitness", ex.text));
        }
        const std::array<Binding, 3> b = {Binding{"{rank}", std::to_string(i + 1)},
                                          Binding{"{text}", ex.text},
                                          Binding{"{accuracy_pct}", format_accuracy(*ex.fitness)}};
        if (i > 0) out.push_back('\n');
        out += substitute(tmpl.example_line_format, b);
    }
    return out;
}

std::string strip_blank_edges(const std::vector<std::string>& lines) {
    std::size_t begin = 0;
    std::size_t end = lines.size();
    while (begin < end && trim(lines[begin]).empty()) ++begin;
    while (end > begin && trim(lines[end - 1]).empty()) --end;
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) out.push_back('\n');
        out += lines[i];
    }
    return out;
}

std::string strip_quotes(std::string s) {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 4> kPairs = {{
        {"\"", "\""}, {"'", "'"}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}, {"`", "`"}}};
    for (const auto& [open, close] : kPairs) {
        if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
            return trim(std::string_view(s).substr(open.size(), s.size() - open.size() - close.size()));
        }
    }
    return s;
}

const std::regex& numbered_line() {
    static const std::regex re(R"(^\s*(\d+)\s*[.)]\s*(.*)$)");
    return re;
}

}  // namespace

void MetaPromptTemplate::validate() const {
    if (trim(system_text).empty()) throw TemplateError("template system text is empty");
    for (auto key : kTaskPlaceholders) {
        const auto n = count_occurrences(task_body, key);
        if (n != 1) {
            throw TemplateError(fmt::format("task body must contain placeholder {} exactly once (found {})",
                                            key, n));
        }
    }
    for (std::string_view key : {std::string_view("{text}"), std::string_view("{accuracy_pct}")}) {
        const auto n = count_occurrences(example_line_format, key);
        if (n != 1) {
            throw TemplateError(fmt::format(
                "example line format must contain placeholder {} exactly once (found {})", key, n));
        }
    }
    if (count_occurrences(example_line_format, "{rank}") > 1) {
        throw TemplateError("example line format may contain placeholder {rank} at most once");
    }
}

MetaPromptTemplate default_template() {
    MetaPromptTemplate t;
    t.system_text =
        "You are an expert prompt engineer. You help a user find natural language prompts that "
        "maximize the accuracy of a vision-language model on a downstream image recognition "
        "task. You are shown prompts that were already tested together with the accuracy each "
        "one reached, and you propose new prompts that are likely to reach a higher accuracy.";
    t.task_body =
        "Task name: {task_name}\n"
        "Task description: {task_description}\n"
        "\n"
        "Your goal is to write prompts for the vision-language model that improve its accuracy "
        "on this task.\n"
        "\n"
        "Best prompts found so far, from best to worse, with their accuracy:\n"
        "{top_examples}\n"
        "\n"
        "Worst prompts found so far, from worst to better, with their accuracy:\n"
        "{bottom_examples}\n"
        "\n"
        "Study which kinds of prompts score well and which score poorly, then write "
        "{num_candidates} new prompts that differ from all prompts above and are likely to "
        "score higher than the best one.";
    t.example_line_format = "{rank}. {text} (accuracy: {accuracy_pct}%)";
    return t;
}

MetaPromptTemplate parse_template(std::string_view text) {
    enum class Section { none, system, task, example };
    std::array<std::vector<std::string>, 4> bodies;
    std::array<bool, 4> seen{};
    Section current = Section::none;
    for (const auto& line : split_lines(text)) {
        const std::string t = trim(line);
        if (t == "[system]" || t == "[task]" || t == "[example]") {
            current = t == "[system]" ? Section::system
                      : t == "[task]" ? Section::task
                                      : Section::example;
            const auto idx = static_cast<std::size_t>(current);
            if (seen[idx]) throw TemplateError(fmt::format("duplicate template section {}", t));
            seen[idx] = true;
            continue;
        }
        if (current == Section::none) {
            if (!t.empty()) throw TemplateError("template text before the first section header");
            continue;
        }
        bodies[static_cast<std::size_t>(current)].push_back(line);
    }
    for (auto [section, name] : {std::pair{Section::system, "[system]"},
                                 std::pair{Section::task, "[task]"},
                                 std::pair{Section::example, "[example]"}}) {
        if (!seen[static_cast<std::size_t>(section)]) {
            throw TemplateError(fmt::format("template is missing section {}", name));
        }
    }
    MetaPromptTemplate t;
    t.system_text = strip_blank_edges(bodies[1]);
    t.task_body = strip_blank_edges(bodies[2]);
    t.example_line_format = strip_blank_edges(bodies[3]);
    if (t.example_line_format.find('\n') != std::string::npos) {
        throw TemplateError("example line format must be a single line");
    }
    t.validate();
    return t;
}

MetaPromptTemplate load_template(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open meta-prompt template {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_template(ss.str());
}

std::string serialize_template(const MetaPromptTemplate& tmpl) {
    return fmt::format("[system]\n{}\n\n[task]\n{}\n\n[example]\n{}\n", tmpl.system_text,
                       tmpl.task_body, tmpl.example_line_format);
}

std::string format_accuracy(double fitness) {
    // Tenths of a percent; nearbyint uses the default ties-to-even mode.
    const double tenths = std::nearbyint(fitness * 1000.0);
    return fmt::format("{:.1f}", tenths / 10.0);
}

std::string render(const MetaPromptTemplate& tmpl, const TaskDescriptor& task,
                   std::span<const PromptCandidate> tops,
                   std::span<const PromptCandidate> bottoms, std::size_t num_candidates) {
    tmpl.validate();
    if (num_candidates < 1) throw TemplateError("num_candidates must be >= 1");
    if (trim(task.name).empty() || trim(task.description).empty()) {
        throw TemplateError("task name and description must be non-empty");
    }

    const std::array<Binding, 5> bindings = {
        Binding{"{task_name}", task.name},
        Binding{"{task_description}", task.description},
        Binding{"{num_candidates}", std::to_string(num_candidates)},
        Binding{"{top_examples}", render_examples(tmpl, tops)},
        Binding{"{bottom_examples}", render_examples(tmpl, bottoms)},
    };

    std::string out = tmpl.system_text;
    out += "\n\n";
    out += substitute(tmpl.task_body, bindings);
    out += fmt::format(
        "\n\nAnswer with exactly {} prompts written as a numbered list (\"1. ...\"), one prompt "
        "per line and nothing else.",
        num_candidates);
    if (task.mode == TaskMode::dual_encoder) {
        out += " Every prompt must contain the class placeholder {} exactly once; it is replaced "
               "by the class name.";
    }
    return out;
}

ParsedCandidates parse_candidates(std::string_view raw, std::size_t expected) {
    ParsedCandidates result;
    if (expected == 0) return result;

    const auto lines = split_lines(raw);
    std::vector<std::string> numbered;
    for (const auto& line : lines) {
        std::smatch m;
        if (std::regex_match(line, m, numbered_line())) {
            std::string text = strip_quotes(trim(m[2].str()));
            if (!text.empty()) numbered.push_back(std::move(text));
        }
    }

    std::vector<std::string> picked;
    if (numbered.size() >= expected) {
        picked = std::move(numbered);
    } else {
        result.used_fallback = true;
        for (const auto& line : lines) {
            std::string text = trim(line);
            std::smatch m;
            if (std::regex_match(line, m, numbered_line())) text = trim(m[2].str());
            text = strip_quotes(std::move(text));
            if (!text.empty()) picked.push_back(std::move(text));
        }
    }

    if (picked.empty()) throw ParseError("generator output contains no candidate prompt", std::string(raw));
    if (picked.size() > expected) picked.resize(expected);
    if (picked.size() < expected) {
        log::warn("expected {} candidate prompts, found {}", expected, picked.size());
    }
    result.prompts = std::move(picked);
    return result;
}

std::string format_numbered(std::span<const std::string> prompts) {
    std::string out;
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        out += fmt::format("{}. {}\n", i + 1, prompts[i]);
    }
    return out;
}

std::string validate_prompt(std::string_view text, TaskMode mode) {
    std::string t = trim(text);
    if (t.empty()) throw ValidationError("prompt is empty");
    if (mode != TaskMode::dual_encoder) return t;

    const auto placeholders = count_occurrences(t, kClassPlaceholder);
    if (placeholders == 1) return t;
    if (placeholders > 1) {
        throw ValidationError(fmt::format("prompt '{}' contains {} class placeholders", t, placeholders));
    }

    static constexpr std::array<std::string_view, 8> kAliases = {
        "<class name>", "<classname>", "<class>", "[class name]",
        "[class]",      "{class name}", "{class}", "<category>"};
    const std::string lower = to_lower(t);
    std::optional<std::pair<std::size_t, std::size_t>> hit;
    std::size_t hits = 0;
    for (auto alias : kAliases) {
        for (std::size_t pos = lower.find(alias); pos != std::string::npos;
             pos = lower.find(alias, pos + alias.size())) {
            ++hits;
            if (!hit) hit = {pos, alias.size()};
        }
    }
    if (hits != 1) {
        throw ValidationError(fmt::format(
            "prompt '{}' needs exactly one class placeholder {{}} (found {} aliases)", t, hits));
    }
    t.replace(hit->first, hit->second, kClassPlaceholder);
    return t;
}

}  // namespace glov
