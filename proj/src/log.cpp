#include "glov/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace glov::log {
namespace {

Level level_from_env() {
    const char* env = std::getenv("GLOV_LOG_LEVEL");
    if (env == nullptr) return Level::warn;
    std::string_view v(env);
    if (v == "debug") return Level::debug;
    if (v == "info") return Level::info;
    if (v == "error") return Level::error;
    if (v == "off") return Level::off;
    return Level::warn;
}

std::atomic<Level>& current_level() {
    static std::atomic<Level> lvl{level_from_env()};
    return lvl;
}

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

Sink& current_sink() {
    static Sink sink;
    return sink;
}

const char* label(Level l) {
    switch (l) {
        case Level::debug: return "debug";
        case Level::info: return "info";
        case Level::warn: return "warn";
        case Level::error: return "error";
        case Level::off: break;
    }
    return "";
}

}  // namespace

void set_level(Level l) { current_level().store(l); }

Level level() { return current_level().load(); }

Sink set_sink(Sink sink) {
    std::lock_guard lock(sink_mutex());
    Sink previous = std::move(current_sink());
    current_sink() = std::move(sink);
    return previous;
}

void write(Level l, std::string_view message) {
    std::lock_guard lock(sink_mutex());
    if (current_sink()) {
        current_sink()(l, message);
        return;
    }
    std::cerr << "[glov " << label(l) << "] " << message << '\n';
}

}  // namespace glov::log
