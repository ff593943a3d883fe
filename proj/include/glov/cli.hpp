#pragma once

#include <exception>
#include <ostream>
#include <string>
#include <vector>

#include "glov/registry.hpp"

namespace glov {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitBackend = 2;
inline constexpr int kExitRuntime = 3;

// Environment variable that replaces the configured log directory.
inline constexpr const char* kLogDirEnv = "GLOV_LOG_DIR";

int exit_code_for(const std::exception& e);

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
// Same, resolving backend names against `registry`; this is how a program
// that links its own model adapters exposes them on the command line.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const BackendRegistry& registry);
int run_cli(int argc, char** argv);

}  // namespace glov
