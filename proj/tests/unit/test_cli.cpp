#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "../support/fakes.hpp"
#include "glov/cli.hpp"
#include "glov/error.hpp"
#include "glov/registry.hpp"
#include "glov/run_log.hpp"
#include "glov/surrogate.hpp"

using namespace glov;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

// Clears the log directory override for the lifetime of the guard.
struct EnvGuard {
    EnvGuard() { unsetenv(kLogDirEnv); }
    ~EnvGuard() { unsetenv(kLogDirEnv); }
};

const fs::path kSynthetic = testing::data_dir() / "synthetic";

}  // namespace

TEST_CASE("exit codes follow the error family") {
    CHECK(exit_code_for(ConfigError("x")) == kExitConfig);
    CHECK(exit_code_for(BackendError("x")) == kExitBackend);
    CHECK(exit_code_for(ParseError("x", "raw")) == kExitRuntime);
    CHECK(exit_code_for(std::runtime_error("x")) == kExitRuntime);

    CHECK(cli({}).code == kExitConfig);
    CHECK(cli({"bogus"}).code == kExitConfig);
    CHECK(cli({"--help"}).code == kExitOk);

    const auto dir = testing::scratch_dir("cli_codes");
    write(dir / "bad.json", R"({"run": {"k": 0}})");
    auto r = cli({"optimize", (dir / "bad.json").string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("run.k") != std::string::npos);

    write(dir / "bad_backend.json", R"({"backend": {"name": "remote"}})");
    CHECK(cli({"optimize", (dir / "bad_backend.json").string()}).code == kExitConfig);

    write(dir / "garbage.jsonl", "{\"type\": \"header\"}\n");
    CHECK(cli({"plot", (dir / "garbage.jsonl").string()}).code == kExitRuntime);
    CHECK(cli({"plot", (dir / "absent.jsonl").string()}).code == kExitRuntime);
}

TEST_CASE("optimize, plot and evaluate work from the command line") {
    EnvGuard guard;
    const auto dir = testing::scratch_dir("cli_flow");
    const auto log = dir / "run.jsonl";
    auto r = cli({"optimize", (kSynthetic / "config.json").string(), "--log", log.string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    CHECK(r.out.find("final best fitness:") != std::string::npos);
    CHECK(read_run_log(log).records.size() == 20);
    const auto prompts = dir / "run.prompts.txt";
    REQUIRE(fs::exists(prompts));

    auto p = cli({"plot", log.string(), "--out", (dir / "curve.csv").string(), "--image", (dir / "curve.svg").string()});
    CHECK(p.code == kExitOk);
    CHECK(slurp(dir / "curve.csv").rfind("iteration,best_candidate", 0) == 0);
    CHECK(slurp(dir / "curve.svg").find("</svg>") != std::string::npos);
    CHECK(cli({"plot", log.string(), "--smoothing", "0"}).code == kExitConfig);

    auto e = cli({"evaluate", (kSynthetic / "config.json").string(), "--prompts", prompts.string(), "--manifest",
                  (kSynthetic / "test.json").string()});
    CHECK(e.code == kExitOk);
    CHECK(e.out.find("overall top-1:") != std::string::npos);
    CHECK(e.out.find("flower") != std::string::npos);

    write(dir / "empty.txt", "\n\n");
    CHECK(cli({"evaluate", (kSynthetic / "config.json").string(), "--prompts", (dir / "empty.txt").string(),
               "--manifest", (kSynthetic / "test.json").string()})
              .code == kExitConfig);
}

TEST_CASE("resume continues a truncated log and rejects a changed config") {
    EnvGuard guard;
    const auto dir = testing::scratch_dir("cli_resume");
    const auto full = dir / "full.jsonl";
    const auto cut = dir / "cut.jsonl";
    const auto demo = testing::data_dir() / "surrogate" / "demo.json";
    write(dir / "demo3.json", [&] {
        std::string s = slurp(demo);
        return s.replace(s.find("\"seed\": 0"), 9, "\"seed\": 3");
    }());
    REQUIRE(cli({"optimize", (dir / "demo3.json").string(), "--log", full.string()}).code == kExitOk);
    const std::string text = slurp(full);

    std::size_t pos = 0;
    for (int line = 0; line < 10; ++line) pos = text.find('\n', pos) + 1;
    write(cut, text.substr(0, pos + 17));
    auto r = cli({"optimize", (dir / "demo3.json").string(), "--log", cut.string(), "--resume"});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    CHECK(r.out.find("resuming after iteration 9") != std::string::npos);
    CHECK(slurp(cut) == text);

    write(dir / "changed.json", [&] {
        std::string s = slurp(dir / "demo3.json");
        return s.replace(s.find("\"alpha\": 1.0"), 12, "\"alpha\": 2.0");
    }());
    CHECK(cli({"optimize", (dir / "changed.json").string(), "--log", cut.string(), "--resume"}).code == kExitConfig);
}

TEST_CASE("the log directory can be overridden from the environment") {
    EnvGuard guard;
    const auto dir = testing::scratch_dir("cli_env");
    setenv(kLogDirEnv, (dir / "elsewhere").string().c_str(), 1);
    auto r = cli({"surrogate-demo", "--seed", "1"});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    CHECK(fs::exists(dir / "elsewhere" / "synthetic-target-seed1.jsonl"));
    CHECK(fs::exists(dir / "elsewhere" / "synthetic-target-seed1.prompts.txt"));
}

TEST_CASE("alpha sweep reports every grid point") {
    const auto dir = testing::scratch_dir("cli_sweep");
    auto r = cli({"alpha-sweep", (testing::data_dir() / "surrogate" / "demo.json").string(), "--grid", "0,0.5,1",
                  "--budget", "2"});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    CHECK(r.out.find("alpha 0 ") != std::string::npos);
    CHECK(r.out.find("alpha 0.5 ") != std::string::npos);
    CHECK(r.out.find("chosen alpha:") != std::string::npos);
}

TEST_CASE("programs can expose their own backends on the command line") {
    EnvGuard guard;
    const auto dir = testing::scratch_dir("cli_registry");
    auto registry = BackendRegistry::with_builtins();
    registry.add("fixed", {"score"}, [](const nlohmann::json& options, const BackendContext&) {
        auto evaluator = std::make_shared<testing::TableEvaluator>();
        evaluator->fallback = options.value("score", 0.25);
        BackendSet set;
        set.generator = std::make_shared<SurrogateGenerator>(std::make_shared<SurrogateWorld>(), 1, 0.5);
        set.evaluator_override = evaluator;
        return set;
    });
    write(dir / "c.json", R"({"task": {"mode": "encoder_decoder"}, "backend": {"name": "fixed",
        "options": {"score": 0.5}}, "run": {"max_iterations": 2}, "log_dir": "logs"})");
    std::ostringstream out, err;
    CHECK(run_cli({"optimize", (dir / "c.json").string()}, out, err, registry) == kExitOk);
    CHECK(out.str().find("final best fitness:  0.500000") != std::string::npos);
    CHECK(cli({"optimize", (dir / "c.json").string()}).code == kExitConfig);
}
