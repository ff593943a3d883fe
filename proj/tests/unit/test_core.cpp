#include <doctest.h>

#include <algorithm>
#include <random>
#include <tuple>

#include "glov/core.hpp"
#include "glov/error.hpp"

using namespace glov;

namespace {

PromptCandidate cand(std::string text, double fitness, std::size_t iteration = 0) {
    return PromptCandidate{std::move(text), fitness, iteration, false};
}

HistoryBuffer make_history(std::vector<PromptCandidate> items) {
    HistoryBuffer h;
    h.add_scored(items);
    return h;
}

std::vector<std::string> texts(const std::vector<PromptCandidate>& cs) {
    std::vector<std::string> out;
    for (const auto& c : cs) out.push_back(c.text);
    return out;
}

}  // namespace

TEST_CASE("add_scored inserts, counts and skips duplicates") {
    HistoryBuffer h;
    auto r = h.add_scored(std::vector{cand("a photo of a {}", 0.619)});
    CHECK(h.size() == 1);
    CHECK(r.added == 1);

    HistoryBuffer p = make_history({cand("p", 0.5)});
    r = p.add_scored(std::vector{cand("p", 0.5)});
    CHECK(p.size() == 1);
    CHECK(r.added == 0);
    REQUIRE(r.skipped.size() == 1);
    CHECK(r.skipped[0] == "p");

    HistoryBuffer three = make_history({cand("a", 0.1), cand("b", 0.2), cand("c", 0.3)});
    three.add_scored(std::vector{cand("d", 0.4), cand("e", 0.5)});
    CHECK(three.size() == 5);
}

TEST_CASE("add_scored normalizes whitespace but keeps case") {
    HistoryBuffer h = make_history({cand("  a   photo\tof a {} ", 0.5)});
    CHECK(h.contains("a photo of a {}"));
    CHECK(h.entries().front().text == "a photo of a {}");
    h.add_scored(std::vector{cand("A photo of a {}", 0.4)});
    CHECK(h.size() == 2);
    h.add_scored(std::vector{cand("a photo  of a {}", 0.9)});
    CHECK(h.size() == 2);
    CHECK(h.find("a photo of a {}")->fitness == 0.5);  // never re-scored
}

TEST_CASE("add_scored rejects a bad batch without inserting anything") {
    HistoryBuffer h;
    std::vector<PromptCandidate> batch{cand("ok", 0.5), PromptCandidate{"missing", std::nullopt, 0, false}};
    CHECK_THROWS_AS(h.add_scored(batch), HistoryError);
    CHECK(h.empty());
    CHECK_THROWS_AS(h.add_scored(std::vector{cand("ok", 0.5), cand("high", 1.5)}), HistoryError);
    CHECK_THROWS_AS(h.add_scored(std::vector{cand("   ", 0.5)}), HistoryError);
    CHECK(h.empty());
}

TEST_CASE("add_scored is idempotent for an identical list") {
    std::vector<PromptCandidate> batch{cand("x", 0.3), cand("y", 0.7), cand("x", 0.3)};
    HistoryBuffer once;
    once.add_scored(batch);
    HistoryBuffer twice = once;
    twice.add_scored(batch);
    CHECK(once == twice);
    CHECK(once.size() == 2);
}

TEST_CASE("top_bottom examples") {
    auto h = make_history({cand("A", 0.9), cand("B", 0.1), cand("C", 0.5)});
    auto tb = top_bottom(h, 1);
    CHECK(texts(tb.tops) == std::vector<std::string>{"A"});
    CHECK(texts(tb.bottoms) == std::vector<std::string>{"B"});

    auto tie = make_history({cand("B", 0.9, 2), cand("A", 0.9, 1)});
    CHECK(texts(top_bottom(tie, 1).tops) == std::vector<std::string>{"A"});

    std::vector<PromptCandidate> ten;
    for (int i = 0; i < 10; ++i) ten.push_back(cand("p" + std::to_string(i), i / 10.0));
    auto big = top_bottom(make_history(ten), 5);
    for (const auto& t : big.tops) {
        CHECK(std::none_of(big.bottoms.begin(), big.bottoms.end(),
                           [&](const PromptCandidate& b) { return b.text == t.text; }));
    }

    auto small = top_bottom(h, 10);
    CHECK(small.tops.size() == 3);
    CHECK(small.bottoms.size() == 3);
    CHECK_THROWS_AS(top_bottom(HistoryBuffer{}, 1), HistoryError);
    CHECK_THROWS_AS(top_bottom(h, 0), HistoryError);
}

TEST_CASE("best_pair examples") {
    auto h = make_history({cand("A", 0.9), cand("B", 0.1), cand("C", 0.5)});
    auto p = best_pair(h);
    CHECK(p.positive == "A");
    CHECK(p.negative == "C");
    CHECK(p.positive_fitness == 0.9);
    CHECK(p.negative_fitness == 0.5);

    auto tie = make_history({cand("A", 0.7, 0), cand("B", 0.7, 1)});
    CHECK(best_pair(tie).positive == "A");
    CHECK(best_pair(tie).negative == "B");

    h.add_scored(std::vector{cand("D", 0.95, 1)});
    CHECK(best_pair(h).positive == "D");
    CHECK(best_pair(h).negative == "A");

    CHECK_THROWS_AS(best_pair(make_history({cand("only", 0.5)})), HistoryError);
}

TEST_CASE("ranking matches a full-sort oracle on random histories") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<PromptCandidate> items;
        const int n = 1 + static_cast<int>(rng() % 100);
        for (int i = 0; i < n; ++i) {
            items.push_back(cand("t" + std::to_string(rng() % 1000), static_cast<double>(rng() % 6) / 5.0, rng() % 4));
        }
        HistoryBuffer h;
        h.add_scored(items);
        auto all = h.entries();
        auto key = [](const PromptCandidate& c) { return std::make_tuple(-*c.fitness, c.iteration, c.text); };
        auto key_up = [](const PromptCandidate& c) { return std::make_tuple(*c.fitness, c.iteration, c.text); };
        auto desc = all;
        std::sort(desc.begin(), desc.end(), [&](auto& a, auto& b) { return key(a) < key(b); });
        auto asc = all;
        std::sort(asc.begin(), asc.end(), [&](auto& a, auto& b) { return key_up(a) < key_up(b); });
        const std::size_t k = 1 + rng() % 7;
        auto tb = top_bottom(h, k);
        const std::size_t m = std::min(k, all.size());
        CHECK(tb.tops == std::vector<PromptCandidate>(desc.begin(), desc.begin() + m));
        CHECK(tb.bottoms == std::vector<PromptCandidate>(asc.begin(), asc.begin() + m));
        if (all.size() >= 2) {
            auto p = best_pair(h);
            CHECK(p.positive == desc[0].text);
            CHECK(p.negative == desc[1].text);
        }
    }
}

TEST_CASE("run config defaults and validation") {
    RunConfig c;
    CHECK(c.k == 5);
    CHECK(c.max_new_tokens == 50);
    CHECK(c.ensemble_size == 3);
    CHECK(c.tau == 0.01);
    CHECK(c.alpha_grid == std::vector<double>{0.5, 1.0, 2.0, 4.0});
    CHECK_NOTHROW(c.validate());
    c.candidates_per_iter = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.tau = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.alpha = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    CHECK(default_max_iterations(TaskMode::dual_encoder, 10) == 100);
    CHECK(default_max_iterations(TaskMode::encoder_decoder, 10) == 50);
    CHECK(default_max_iterations(TaskMode::dual_encoder, 1000) == 25);
    CHECK(default_candidates_per_iter(TaskMode::dual_encoder) == 10);
}

TEST_CASE("mode names round-trip") {
    for (auto m : {TaskMode::dual_encoder, TaskMode::encoder_decoder, TaskMode::multiple_choice}) {
        CHECK(parse_task_mode(to_string(m)) == m);
    }
    for (auto k : {SteeringMode::Kind::last_token, SteeringMode::Kind::all_tokens,
                   SteeringMode::Kind::last_token_source, SteeringMode::Kind::actadd_first_n}) {
        CHECK(parse_steering_kind(to_string(k)) == k);
    }
    CHECK_THROWS_AS(parse_task_mode("vqa"), ConfigError);
    CHECK_THROWS_AS(parse_steering_kind("sideways"), ConfigError);
}
