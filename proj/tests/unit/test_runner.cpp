#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "../support/fakes.hpp"
#include "glov/config.hpp"
#include "glov/embedding_file.hpp"
#include "glov/error.hpp"
#include "glov/manifest.hpp"
#include "glov/report.hpp"
#include "glov/run_log.hpp"
#include "glov/session.hpp"

using namespace glov;
namespace fs = std::filesystem;

namespace {

fs::path write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    return path;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const fs::path kSynthetic = testing::data_dir() / "synthetic";

ResolvedConfig demo_config(std::uint64_t seed, std::size_t iterations) {
    auto doc = surrogate_demo_config();
    doc["run"]["seed"] = seed;
    doc["run"]["max_iterations"] = iterations;
    return resolve_config(doc, testing::data_dir());
}

RunResult run_logged(const ResolvedConfig& config, const fs::path& log_path) {
    auto reg = BackendRegistry::with_builtins();
    Session s = open_session(config, reg);
    auto writer = RunLogWriter::create(log_path);
    RunLogObserver obs(writer, to_json(config));
    return run(s.setup, s.refs(), &obs);
}

}  // namespace

TEST_CASE("minimal config fills the defaults") {
    const auto dir = testing::scratch_dir("config_min");
    auto cfg_path = write_file(dir / "c.json",
                               R"({"task": {"manifest": ")" + (kSynthetic / "train.json").string() + R"("}})");
    const auto c = load_config(cfg_path);
    CHECK(c.run.k == 5);
    CHECK(c.run.max_new_tokens == 50);
    CHECK(c.run.ensemble_size == 3);
    CHECK(c.run.candidates_per_iter == 10);
    CHECK(c.run.max_iterations == 100);
    CHECK(c.task.mode == TaskMode::dual_encoder);
    CHECK(c.task.name == "synthetic objects");
    CHECK(c.seed_prompts == std::vector<std::string>{"a photo of a {}"});
    CHECK(c.log_dir == dir / "runs");
    CHECK(c.backend.name == "surrogate");
}

TEST_CASE("config errors name the key") {
    const auto dir = testing::scratch_dir("config_bad");
    auto expect_error = [&](const std::string& text, const std::string& fragment) {
        auto p = write_file(dir / "c.json", text);
        try {
            load_config(p);
            FAIL("expected a ConfigError for " << text);
        } catch (const ConfigError& e) {
            CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
        }
    };
    expect_error(R"({"run": {"candidates_per_iter": 1}})", "candidates_per_iter");
    expect_error(R"({"run": {"k": 5, "k": 6}})", "duplicate key 'k'");
    expect_error(R"({"run": {"kk": 5}})", "run.kk");
    expect_error(R"({"run": {"alpha": "big"}})", "run.alpha");
    expect_error(R"({"run": {"max_iterations": -3}})", "run.max_iterations");
    expect_error(R"({"tasks": {}})", "tasks");
    expect_error(R"({"task": {"mode": "vqa"}})", "vqa");
    expect_error(R"({"run": {"steering_mode": {"kind": "last_token", "prefix_tokens": 2}}})", "prefix_tokens");
    expect_error("{not json", "invalid JSON");
}

TEST_CASE("resolved config serialization is a fixed point") {
    const auto dir = testing::scratch_dir("config_fixed");
    auto p = write_file(dir / "c.json", R"({
      "task": {"mode": "dual_encoder", "manifest": ")" + (kSynthetic / "train.json").string() + R"("},
      "backend": {"name": "surrogate", "options": {"vocabulary_file": ")" + (kSynthetic / "vocabulary.txt").string() + R"(", "temperature": 0.7}},
      "run": {"alpha": 2.5, "patience": 4, "steering_mode": {"kind": "actadd_first_n", "prefix_tokens": 3}, "layer_index": 0, "seed": 12345678901234},
      "seed_prompts": ["a {}", "the {}"]
    })");
    const auto c = load_config(p);
    CHECK(c.run.steering_mode.prefix_tokens == std::optional<std::size_t>(3));
    const auto again = resolve_config(to_json(c), "/elsewhere");
    CHECK(again == c);
    CHECK(to_json(again) == to_json(c));

    const auto demo = demo_config(4, 30);
    CHECK(resolve_config(to_json(demo), "/x") == demo);
}

TEST_CASE("the demo fixture equals the built-in demo config") {
    const auto file = parse_json_strict(read_file(testing::data_dir() / "surrogate" / "demo.json"), "demo.json");
    CHECK(file == surrogate_demo_config());
}

TEST_CASE("embedding files round-trip exactly") {
    std::mt19937_64 rng(2);
    std::normal_distribution<float> n;
    EmbeddingTable t;
    t.count = 7;
    t.dim = 5;
    for (int i = 0; i < 35; ++i) t.values.push_back(n(rng));
    t.values[3] = -0.0f;
    t.values[4] = std::numeric_limits<float>::denorm_min();
    const auto bytes = encode_embeddings(t);
    CHECK(bytes.size() == 16 + 35 * 4);
    CHECK(bytes.substr(0, 8) == "GLOVEMB1");
    CHECK(static_cast<unsigned char>(bytes[8]) == 7);
    CHECK(bytes[9] == 0);
    const auto back = decode_embeddings(bytes);
    CHECK(std::memcmp(back.values.data(), t.values.data(), 35 * sizeof(float)) == 0);
    CHECK(back.count == 7);
    CHECK(back.dim == 5);

    const auto dir = testing::scratch_dir("emb");
    write_embedding_file(dir / "x.emb", t);
    CHECK(read_file(dir / "x.emb") == bytes);
    CHECK(read_embedding_file(dir / "x.emb") == t);

    CHECK_THROWS_AS(decode_embeddings("GLOVEMB2" + bytes.substr(8)), ParseError);
    CHECK_THROWS_AS(decode_embeddings(bytes.substr(0, bytes.size() - 1)), ParseError);
    CHECK_THROWS_AS(decode_embeddings(bytes + "x"), ParseError);
}

TEST_CASE("manifests load rows, references and choices") {
    const auto m = load_manifest(kSynthetic / "test.json", TaskMode::dual_encoder);
    CHECK(m.task.class_names.size() == 6);
    CHECK(m.task.examples.size() == 30);
    CHECK(m.task.examples[0].image == "test.emb#0");
    CHECK(m.images->size() == 30);
    CHECK(m.task.name == "synthetic objects");

    const auto dir = testing::scratch_dir("manifest");
    write_file(dir / "classes.txt", "a\nb\nc\n\n");
    write_embedding_file(dir / "x.emb", make_embedding_table({{1, 0}, {0, 1}}));
    write_file(dir / "m.json", R"({"class_names": "classes.txt", "examples": [
        {"image": "x.emb#1", "label": 1, "choices": [1, 2]}, {"image": "live.jpg", "label": 0, "choices": [0, 2]}]})");
    const auto mc = load_manifest(dir / "m.json", TaskMode::multiple_choice);
    CHECK(mc.task.examples[0].choices == std::vector<std::size_t>{1, 2});
    CHECK(*mc.images->find("x.emb#1") == Vector{0, 1});
    CHECK(mc.task.examples[1].image == "live.jpg");

    write_file(dir / "bad_label.json", R"({"class_names": "classes.txt", "examples": [{"image": "x.emb#0", "label": 3}]})");
    CHECK_THROWS_AS(load_manifest(dir / "bad_label.json", TaskMode::dual_encoder), ValidationError);
    write_file(dir / "bad_row.json", R"({"class_names": "classes.txt", "examples": [{"image": "x.emb#9", "label": 0}]})");
    CHECK_THROWS_AS(load_manifest(dir / "bad_row.json", TaskMode::dual_encoder), DimensionError);
    write_file(dir / "missing.json", R"({"class_names": "nope.txt", "examples": []})");
    CHECK_THROWS_AS(load_manifest(dir / "missing.json", TaskMode::dual_encoder), IoError);
    write_file(dir / "extra.json", R"({"class_names": "classes.txt", "examples": [], "labels": 1})");
    CHECK_THROWS_AS(load_manifest(dir / "extra.json", TaskMode::dual_encoder), ConfigError);
}

TEST_CASE("evaluation on the synthetic test split matches the oracle") {
    auto reg = BackendRegistry::with_builtins();
    auto cfg = load_config(kSynthetic / "config.json");
    Session s = open_session(cfg, reg, kSynthetic / "test.json");
    const std::vector<std::string> single{"a photo of a {}"};
    auto r1 = evaluate(single, *s.task(), s.backends, cfg.run.tau);
    CHECK(r1.overall == 23.0 / 30.0);
    const std::vector<std::size_t> per1{4, 4, 3, 4, 4, 4};
    for (std::size_t c = 0; c < 6; ++c) CHECK(r1.per_class[c].correct == per1[c]);

    const std::vector<std::string> pair{"a photo of a {}", "the {} in the sky"};
    auto r2 = evaluate(pair, *s.task(), s.backends, cfg.run.tau);
    CHECK(r2.overall == 22.0 / 30.0);
    CHECK(r2.per_class[3].correct == 3);
    CHECK(format_report(r2).find("overall top-1: 0.7333") != std::string::npos);
}

TEST_CASE("train-manifest evaluation equals the logged ensemble fitness") {
    const auto dir = testing::scratch_dir("consistency");
    auto cfg = load_config(kSynthetic / "config.json");
    cfg.run.max_iterations = 6;
    auto res = run_logged(cfg, dir / "run.jsonl");
    auto log = read_run_log(dir / "run.jsonl");
    auto reg = BackendRegistry::with_builtins();
    Session s = open_session(cfg, reg);
    const auto& last = log.records.back();
    CHECK(evaluate(last.ensemble, *s.task(), s.backends, cfg.run.tau).overall == last.ensemble_fitness);
}

TEST_CASE("run logs: counting, round-trip and truncated tails") {
    const auto dir = testing::scratch_dir("runlog");
    const auto cfg = demo_config(0, 30);
    auto res = run_logged(cfg, dir / "run.jsonl");
    const std::string text = read_file(dir / "run.jsonl");
    CHECK(std::count(text.begin(), text.end(), '\n') == 31);

    auto log = read_run_log(dir / "run.jsonl");
    CHECK_FALSE(log.truncated_tail);
    CHECK(log.records == res.records);
    CHECK(log.initial == res.initial);
    CHECK(log.config == to_json(cfg));
    for (std::size_t i = 0; i < log.records.size(); ++i) CHECK(log.records[i].best_so_far == res.records[i].best_so_far);

    const auto cut = text.substr(0, text.size() - 40);
    auto partial = parse_run_log(cut);
    CHECK(partial.truncated_tail);
    CHECK(partial.records.size() == 29);
    CHECK(partial.valid_bytes == cut.rfind('\n') + 1);

    std::string damaged = text;
    damaged.replace(damaged.find("\"type\":\"iteration\""), 6, "#type#");
    CHECK_THROWS_AS(parse_run_log(damaged), ParseError);
    CHECK_THROWS_AS(parse_run_log(""), ParseError);
}

TEST_CASE("resume after a crash reproduces the uninterrupted log") {
    const auto dir = testing::scratch_dir("resume");
    const auto cfg = demo_config(2, 12);
    run_logged(cfg, dir / "full.jsonl");
    const std::string full = read_file(dir / "full.jsonl");

    std::size_t pos = 0;
    for (int line = 0; line < 6; ++line) pos = full.find('\n', pos) + 1;
    write_file(dir / "crashed.jsonl", full.substr(0, pos + 25));

    auto log = read_run_log(dir / "crashed.jsonl");
    CHECK(log.truncated_tail);
    auto reg = BackendRegistry::with_builtins();
    Session s = open_session(cfg, reg);
    auto state = restore(s.setup, s.refs(), log.initial, log.records);
    auto writer = RunLogWriter::append(dir / "crashed.jsonl", log.valid_bytes);
    RunLogObserver obs(writer, to_json(cfg));
    run_from(std::move(state), s.refs(), &obs);
    CHECK(read_file(dir / "crashed.jsonl") == full);
}

TEST_CASE("curve export") {
    const std::vector<std::optional<double>> xs{0.2, 0.5, 0.4};
    const std::vector<double> ens{0.1, 0.2, 0.3};
    auto rows = build_curve(xs, ens, 0.0);
    CHECK(rows[0].best_so_far == 0.2);
    CHECK(rows[1].best_so_far == 0.5);
    CHECK(rows[2].best_so_far == 0.5);
    CHECK(*rows[1].ema == doctest::Approx(0.3 * 0.5 + 0.7 * 0.2));

    auto raw = build_curve(xs, ens, 0.0, 1.0);
    for (std::size_t i = 0; i < raw.size(); ++i) CHECK(raw[i].ema == xs[i]);

    const std::vector<std::optional<double>> gap{std::nullopt, 0.4, std::nullopt};
    auto g = build_curve(gap, ens, 0.3);
    CHECK_FALSE(g[0].ema.has_value());
    CHECK(g[2].ema == 0.4);
    CHECK(g[0].best_so_far == 0.3);
    CHECK(curve_csv(g) == "iteration,best_candidate,best_so_far,ensemble,ema\n"
                          "1,,0.300000,0.100000,\n"
                          "2,0.400000,0.400000,0.200000,0.400000\n"
                          "3,,0.400000,0.300000,0.400000\n");
    CHECK_THROWS_AS(build_curve({}, {}, 0.0), ValidationError);
    CHECK_THROWS_AS(curve_from_log(InitialRound{}, {}), ValidationError);

    const std::string svg = curve_svg(rows, "a <b> & c");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("a &lt;b&gt; &amp; c") != std::string::npos);
}

TEST_CASE("curves regenerate from the log alone with a monotone best column") {
    const auto dir = testing::scratch_dir("curve");
    for (std::uint64_t seed : {0, 1, 2}) {
        auto res = run_logged(demo_config(seed, 15), dir / "run.jsonl");
        auto log = read_run_log(dir / "run.jsonl");
        const auto a = curve_csv(curve_from_log(res.initial, res.records));
        const auto b = curve_csv(curve_from_log(log.initial, log.records));
        CHECK(a == b);
        auto rows = curve_from_log(log.initial, log.records);
        for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].best_so_far >= rows[i - 1].best_so_far);
    }
}
