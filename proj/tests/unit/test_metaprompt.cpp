#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "../support/fakes.hpp"
#include "glov/error.hpp"
#include "glov/metaprompt.hpp"
#include "glov/text.hpp"

using namespace glov;

namespace {

const TaskDescriptor kTask{"ImageNet", "classify everyday objects", TaskMode::dual_encoder};

PromptCandidate scored(std::string text, double f) { return PromptCandidate{std::move(text), f, 0, false}; }

}  // namespace

TEST_CASE("render shows accuracies and the requested count") {
    std::vector tops{scored("a photo of a {}", 0.619)};
    std::vector bottoms{scored("{} thing", 0.30)};
    const std::string out = render(default_template(), kTask, tops, bottoms, 10);
    CHECK(out.find("61.9") != std::string::npos);
    CHECK(out.find("30.0") != std::string::npos);
    CHECK(out.find("exactly 10 prompts") != std::string::npos);
    CHECK(out.find("ImageNet") != std::string::npos);
    CHECK(out.find("class placeholder {}") != std::string::npos);

    const std::string five = render(default_template(), kTask, tops, bottoms, 5);
    CHECK(five.find("exactly 5 prompts") != std::string::npos);
    CHECK(five.find("write 5 new prompts") != std::string::npos);
}

TEST_CASE("render marks empty example lists") {
    const std::string out = render(default_template(), kTask, {}, {}, 3);
    CHECK(count_occurrences(out, "(none yet)") == 2);
}

TEST_CASE("render is pure") {
    std::vector tops{scored("a", 0.5), scored("b", 0.25)};
    CHECK(render(default_template(), kTask, tops, tops, 4) == render(default_template(), kTask, tops, tops, 4));
}

TEST_CASE("open-ended render omits the class placeholder rule") {
    TaskDescriptor t{"demo", "describe", TaskMode::encoder_decoder};
    CHECK(render(default_template(), t, {}, {}, 2).find("class placeholder") == std::string::npos);
}

TEST_CASE("printed accuracies are the stored fitness rounded half-even") {
    CHECK(format_accuracy(0.619) == "61.9");
    CHECK(format_accuracy(0.3) == "30.0");
    CHECK(format_accuracy(1.0) == "100.0");
    CHECK(format_accuracy(0.0) == "0.0");
    CHECK(format_accuracy(0.00125) == "0.1");
    // Exact binary halves of a tenth-percent: 62.5 and 187.5 tenths.
    CHECK(format_accuracy(0.0625) == "6.2");
    CHECK(format_accuracy(0.1875) == "18.8");

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double f = u(rng);
        std::vector tops{scored("p" + std::to_string(i), f)};
        const std::string out = render(default_template(), kTask, tops, {}, 2);
        CHECK(out.find("(accuracy: " + format_accuracy(f) + "%)") != std::string::npos);
    }
}

TEST_CASE("parse_candidates examples") {
    auto two = parse_candidates("1. A photo of a {}\n2. An image of a {}", 2);
    CHECK(two.prompts == std::vector<std::string>{"A photo of a {}", "An image of a {}"});
    CHECK_FALSE(two.used_fallback);

    CHECK(parse_candidates("1) \"x {}\"", 1).prompts == std::vector<std::string>{"x {}"});

    auto fb = parse_candidates("garbage with no list\nsecond line", 2);
    CHECK(fb.prompts == std::vector<std::string>{"garbage with no list", "second line"});
    CHECK(fb.used_fallback);

    CHECK(parse_candidates("Sure!\n1. one {}\n2. two {}\n3. three {}", 2).prompts.size() == 2);
    CHECK_THROWS_AS(parse_candidates("  \n\n", 2), ParseError);
}

TEST_CASE("parse of a formatted list is the identity") {
    std::mt19937_64 rng(5);
    const std::vector<std::string> words{"a", "photo", "of", "the", "{}", "blurry", "x-ray", "cat's", "(big)"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> prompts;
        const std::size_t n = 1 + rng() % 8;
        for (std::size_t i = 0; i < n; ++i) {
            std::string p;
            const std::size_t len = 1 + rng() % 6;
            for (std::size_t w = 0; w < len; ++w) p += (w ? " " : "") + words[rng() % words.size()];
            prompts.push_back(p);
        }
        CHECK(parse_candidates(format_numbered(prompts), n).prompts == prompts);
    }
}

TEST_CASE("validate_prompt") {
    CHECK(validate_prompt("a photo of a {}", TaskMode::dual_encoder) == "a photo of a {}");
    CHECK(validate_prompt("a photo of a <class name>", TaskMode::dual_encoder) == "a photo of a {}");
    CHECK(validate_prompt("[class] in the wild", TaskMode::dual_encoder) == "{} in the wild");
    CHECK(validate_prompt("describe the image", TaskMode::encoder_decoder) == "describe the image");
    CHECK_THROWS_AS(validate_prompt("a photo", TaskMode::dual_encoder), ValidationError);
    CHECK_THROWS_AS(validate_prompt("{} and {}", TaskMode::dual_encoder), ValidationError);
    CHECK_THROWS_AS(validate_prompt("   ", TaskMode::encoder_decoder), ValidationError);
}

TEST_CASE("template fixture matches the built-in default and round-trips") {
    std::ifstream in(testing::data_dir() / "meta_prompt.txt");
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto loaded = parse_template(ss.str());
    const auto def = default_template();
    CHECK(loaded.system_text == def.system_text);
    CHECK(loaded.task_body == def.task_body);
    CHECK(loaded.example_line_format == def.example_line_format);
    const auto again = parse_template(serialize_template(def));
    CHECK(again.task_body == def.task_body);
}

TEST_CASE("template validation names the placeholder") {
    auto t = default_template();
    t.task_body = "no placeholders here";
    CHECK_THROWS_AS(t.validate(), TemplateError);
    t = default_template();
    t.example_line_format = "{text} {text} {accuracy_pct}";
    CHECK_THROWS_AS(t.validate(), TemplateError);
    CHECK_THROWS_AS(parse_template("[system]\nx\n[task]\ny"), TemplateError);
}
