#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "glov/optimizer.hpp"

namespace glov {

inline constexpr std::string_view kRunLogFormat = "glov-runlog";
inline constexpr int kRunLogVersion = 1;
inline constexpr std::string_view kArtifactVersion = "0.1.0";

// One JSON object per line. The first line is the header (resolved config
// and the initial round); each further line is one iteration.
nlohmann::json header_to_json(const nlohmann::json& config, const InitialRound& initial);
nlohmann::json record_to_json(const IterationRecord& record);
IterationRecord record_from_json(const nlohmann::json& j);
InitialRound initial_from_json(const nlohmann::json& j);

class RunLogWriter {
public:
    // Starts a new log, replacing any existing file.
    static RunLogWriter create(const std::filesystem::path& path);
    // Continues a log after its first `valid_bytes` bytes, dropping the rest.
    static RunLogWriter append(const std::filesystem::path& path, std::uintmax_t valid_bytes);

    void write_header(const nlohmann::json& config, const InitialRound& initial);
    void write_iteration(const IterationRecord& record);

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    RunLogWriter(std::filesystem::path path, std::ios::openmode mode);
    void write_line(const nlohmann::json& j);

    std::filesystem::path path_;
    std::ofstream out_;
};

struct RunLogContents {
    nlohmann::json config;
    InitialRound initial;
    std::vector<IterationRecord> records;
    std::uintmax_t valid_bytes = 0;  // through the last complete line
    bool truncated_tail = false;
};

// A final line that is cut off or unparseable is ignored; any other damage
// throws ParseError. Iterations must increase by one.
RunLogContents read_run_log(const std::filesystem::path& path);
RunLogContents parse_run_log(std::string_view text);

// Writes the header and each iteration as the optimizer produces them.
class RunLogObserver : public RunObserver {
public:
    RunLogObserver(RunLogWriter& writer, nlohmann::json config)
        : writer_(writer), config_(std::move(config)) {}
    void on_initial(const InitialRound& initial, const OptimizerState&) override {
        writer_.write_header(config_, initial);
    }
    void on_iteration(const IterationRecord& record, const OptimizerState&) override {
        writer_.write_iteration(record);
    }

private:
    RunLogWriter& writer_;
    nlohmann::json config_;
};

}  // namespace glov
