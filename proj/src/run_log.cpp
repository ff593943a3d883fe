#include "glov/run_log.hpp"

#include <sstream>

#include <fmt/core.h>

#include "glov/config.hpp"
#include "glov/error.hpp"
#include "glov/text.hpp"

namespace glov {
namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

json pair_to_json(const std::optional<GuidancePair>& p) {
    if (!p) return nullptr;
    return json{{"positive", p->positive},
                {"negative", p->negative},
                {"positive_fitness", p->positive_fitness},
                {"negative_fitness", p->negative_fitness}};
}

std::optional<GuidancePair> pair_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return GuidancePair{j.at("positive").get<std::string>(), j.at("negative").get<std::string>(),
                        j.at("positive_fitness").get<double>(), j.at("negative_fitness").get<double>()};
}

json guidance_to_json(const GuidanceSnapshot& g) {
    return json{{"pair", pair_to_json(g.pair)},
                {"alpha", g.alpha},
                {"layer", g.layer_index},
                {"mode", steering_mode_to_json(g.mode)},
                {"enabled", g.enabled},
                {"updated", g.updated}};
}

GuidanceSnapshot guidance_from_json(const json& j) {
    GuidanceSnapshot g;
    g.pair = pair_from_json(j.at("pair"));
    g.alpha = j.at("alpha").get<double>();
    g.layer_index = j.at("layer").get<int>();
    const auto& m = j.at("mode");
    if (m.is_string()) {
        g.mode.kind = parse_steering_kind(m.get<std::string>());
    } else {
        g.mode.kind = parse_steering_kind(m.at("kind").get<std::string>());
        g.mode.prefix_tokens = m.at("prefix_tokens").get<std::size_t>();
    }
    g.enabled = j.at("enabled").get<bool>();
    g.updated = j.at("updated").get<bool>();
    return g;
}

json candidates_to_json(const std::vector<CandidateRecord>& cs) {
    json arr = json::array();
    for (const auto& c : cs) {
        json o{{"status", to_string(c.status)}, {"seed", c.seed}, {"raw", c.raw},
               {"text", c.text}, {"fitness", optional_number(c.fitness)}};
        if (!c.reason.empty()) o["reason"] = c.reason;
        arr.push_back(std::move(o));
    }
    return arr;
}

std::vector<CandidateRecord> candidates_from_json(const json& arr) {
    std::vector<CandidateRecord> out;
    for (const auto& o : arr) {
        CandidateRecord c;
        c.status = parse_candidate_status(o.at("status").get<std::string>());
        c.seed = o.at("seed").get<std::uint64_t>();
        c.raw = o.at("raw").get<std::string>();
        c.text = o.at("text").get<std::string>();
        c.fitness = read_optional(o, "fitness");
        c.reason = o.value("reason", "");
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace

json header_to_json(const json& config, const InitialRound& initial) {
    return json{{"type", "header"},
                {"format", kRunLogFormat},
                {"version", kRunLogVersion},
                {"artifact_version", kArtifactVersion},
                {"seed", config.at("run").at("seed")},
                {"config", config},
                {"initial",
                 {{"seeds", candidates_to_json(initial.seeds)},
                  {"meta_prompt_hash", initial.meta_prompt_hash},
                  {"candidates", candidates_to_json(initial.candidates)},
                  {"best_so_far", initial.best_so_far},
                  {"guidance", guidance_to_json(initial.guidance)}}}};
}

InitialRound initial_from_json(const json& j) {
    InitialRound r;
    r.seeds = candidates_from_json(j.at("seeds"));
    r.meta_prompt_hash = j.at("meta_prompt_hash").get<std::string>();
    r.candidates = candidates_from_json(j.at("candidates"));
    r.best_so_far = j.at("best_so_far").get<double>();
    r.guidance = guidance_from_json(j.at("guidance"));
    return r;
}

json record_to_json(const IterationRecord& r) {
    return json{{"type", "iteration"},
                {"iteration", r.iteration},
                {"meta_prompt_hash", r.meta_prompt_hash},
                {"steered", r.steered},
                {"candidates", candidates_to_json(r.candidates)},
                {"best_candidate", optional_number(r.best_candidate)},
                {"best_so_far", r.best_so_far},
                {"best_prompt", r.best_prompt},
                {"ensemble", r.ensemble},
                {"ensemble_fitness", r.ensemble_fitness},
                {"guidance", guidance_to_json(r.guidance)}};
}

IterationRecord record_from_json(const json& j) {
    IterationRecord r;
    r.iteration = j.at("iteration").get<std::size_t>();
    r.meta_prompt_hash = j.at("meta_prompt_hash").get<std::string>();
    r.steered = j.at("steered").get<bool>();
    r.candidates = candidates_from_json(j.at("candidates"));
    r.best_candidate = read_optional(j, "best_candidate");
    r.best_so_far = j.at("best_so_far").get<double>();
    r.best_prompt = j.at("best_prompt").get<std::string>();
    r.ensemble = j.at("ensemble").get<std::vector<std::string>>();
    r.ensemble_fitness = j.at("ensemble_fitness").get<double>();
    r.guidance = guidance_from_json(j.at("guidance"));
    return r;
}

RunLogWriter::RunLogWriter(std::filesystem::path path, std::ios::openmode mode)
    : path_(std::move(path)), out_(path_, mode) {
    if (!out_) throw IoError(fmt::format("cannot open run log '{}' for writing", path_.string()));
}

RunLogWriter RunLogWriter::create(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    return RunLogWriter(path, std::ios::binary | std::ios::trunc);
}

RunLogWriter RunLogWriter::append(const std::filesystem::path& path, std::uintmax_t valid_bytes) {
    std::error_code ec;
    std::filesystem::resize_file(path, valid_bytes, ec);
    if (ec) throw IoError(fmt::format("cannot truncate run log '{}': {}", path.string(), ec.message()));
    return RunLogWriter(path, std::ios::binary | std::ios::app);
}

void RunLogWriter::write_line(const json& j) {
    out_ << j.dump() << '\n';
    out_.flush();
    if (!out_) throw IoError(fmt::format("write to run log '{}' failed", path_.string()));
}

void RunLogWriter::write_header(const json& config, const InitialRound& initial) {
    write_line(header_to_json(config, initial));
}

void RunLogWriter::write_iteration(const IterationRecord& record) { write_line(record_to_json(record)); }

RunLogContents parse_run_log(std::string_view text) {
    RunLogContents out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool have_header = false;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        const bool complete = nl != std::string_view::npos;
        const std::string_view line = text.substr(pos, complete ? nl - pos : std::string_view::npos);
        const std::size_t next = complete ? nl + 1 : text.size();
        ++line_no;
        const bool last = next >= text.size();
        json j = json::parse(line, nullptr, false);
        if (!complete || j.is_discarded()) {
            if (last) {
                out.truncated_tail = true;
                break;
            }
            throw ParseError(fmt::format("run log line {} is not valid JSON", line_no), std::string(line));
        }
        try {
            if (!have_header) {
                if (j.value("type", "") != "header" || j.value("format", "") != kRunLogFormat) {
                    throw ParseError("run log does not start with a header", std::string(line));
                }
                if (j.at("version").get<int>() != kRunLogVersion) {
                    throw ParseError(fmt::format("unsupported run log version {}", j.at("version").dump()),
                                     std::string(line));
                }
                out.config = j.at("config");
                out.initial = initial_from_json(j.at("initial"));
                have_header = true;
            } else {
                auto rec = record_from_json(j);
                const std::size_t expected = out.records.empty() ? 1 : out.records.back().iteration + 1;
                if (rec.iteration != expected) {
                    throw ParseError(fmt::format("run log line {} has iteration {}, expected {}", line_no,
                                                 rec.iteration, expected),
                                     std::string(line));
                }
                out.records.push_back(std::move(rec));
            }
        } catch (const json::exception& e) {
            throw ParseError(fmt::format("run log line {}: {}", line_no, e.what()), std::string(line));
        }
        out.valid_bytes = next;
        pos = next;
    }
    if (!have_header) throw ParseError("run log has no complete header", std::string(text.substr(0, 200)));
    return out;
}

RunLogContents read_run_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open run log '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_log(ss.str());
}

}  // namespace glov
