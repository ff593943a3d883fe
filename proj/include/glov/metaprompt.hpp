#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glov/core.hpp"

namespace glov {

// The three editable parts of the meta-prompt. task_body must contain each of
// {task_name}, {task_description}, {num_candidates}, {top_examples} and
// {bottom_examples} exactly once; example_line_format must contain {text} and
// {accuracy_pct} exactly once and may contain {rank}.
struct MetaPromptTemplate {
    std::string system_text;
    std::string task_body;
    std::string example_line_format;

    // Throws TemplateError naming the offending placeholder.
    void validate() const;
};

struct TaskDescriptor {
    std::string name;
    std::string description;
    TaskMode mode = TaskMode::dual_encoder;
};

MetaPromptTemplate default_template();

// Fixture format: three sections introduced by the lines "[system]",
// "[task]" and "[example]". Section bodies are trimmed of leading and
// trailing blank lines.
MetaPromptTemplate parse_template(std::string_view text);
MetaPromptTemplate load_template(const std::filesystem::path& path);
std::string serialize_template(const MetaPromptTemplate& tmpl);

// Fitness in [0, 1] as a percentage with one decimal, rounded half-even.
std::string format_accuracy(double fitness);

// Renders system text, task section, ranked examples (tops best-first,
// bottoms worst-first) and an output-format footer asking for exactly
// num_candidates numbered prompts. Pure: identical inputs give identical bytes.
std::string render(const MetaPromptTemplate& tmpl, const TaskDescriptor& task,
                   std::span<const PromptCandidate> tops,
                   std::span<const PromptCandidate> bottoms, std::size_t num_candidates);

struct ParsedCandidates {
    std::vector<std::string> prompts;
    bool used_fallback = false;
};

// Extracts up to `expected` prompts from generator output. Numbered lines
// ("3. text" / "3) text") are preferred; with fewer numbered lines than
// expected every non-empty line is used instead. Throws ParseError when
// nothing usable is found.
ParsedCandidates parse_candidates(std::string_view raw, std::size_t expected);

// Formats prompts as the numbered list parse_candidates reads.
std::string format_numbered(std::span<const std::string> prompts);

inline constexpr std::string_view kClassPlaceholder = "{}";

// Trims and checks the class placeholder rule for the mode. In dual_encoder
// mode exactly one "{}" is required; a single recognised alias such as
// "<class name>" is rewritten to "{}". Throws ValidationError otherwise.
std::string validate_prompt(std::string_view text, TaskMode mode);

}  // namespace glov
