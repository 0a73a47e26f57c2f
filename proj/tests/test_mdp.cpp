#include <algorithm>
#include <cmath>
#include <string>

#include "doctest.h"
#include "qmanip/errors.hpp"
#include "qmanip/json_io.hpp"
#include "qmanip/mdp.hpp"
#include "test_support.hpp"

using namespace qm;
using qmtest::MdpBuilder;

namespace {

bool report_mentions(const std::vector<std::string>& report, const std::string& needle) {
    for (const std::string& line : report)
        if (line.find(needle) != std::string::npos) return true;
    return false;
}

} // namespace

TEST_CASE("validate accepts a well-formed chain") {
    auto [mdp, rewards] = qmtest::chain_mdp({1.0}, 0.9);
    CHECK(validate(mdp, rewards).empty());
}

TEST_CASE("validate flags a row that does not sum to one") {
    MdpBuilder b(2, 1, 0.9, {1}, 0);
    b.add(0, 0, {{1, 0.9, 1.0}});
    const auto report = validate(b.mdp, b.rewards);
    REQUIRE(report.size() == 1);
    CHECK(report_mentions(report, "(s=0, a=0)"));
    CHECK(report_mentions(report, "sum"));
}

TEST_CASE("validate flags a reward entry off the transition support") {
    MdpBuilder b(3, 1, 0.9, {2}, 0);
    b.add(0, 0, {{1, 1.0, 0.0}});
    b.add(1, 0, {{2, 1.0, 1.0}});
    b.rewards.rows[b.rewards.row_index(0, 0)].push_back({2, 0.5});  // zero-probability transition
    const auto report = validate(b.mdp, b.rewards);
    REQUIRE(report.size() == 1);
    CHECK(report_mentions(report, "off the transition support"));
}

TEST_CASE("validate flags structural breakage") {
    MdpBuilder b(3, 1, 0.9, {2}, 2);  // terminal initial state
    b.add(0, 0, {{1, 0.5, 0.0}, {1, 0.5, 0.0}});  // duplicate successor
    b.add(1, 0, {{2, 1.0, 1.0}});
    b.add(2, 0, {{0, 1.0, 0.0}});  // terminal with outgoing row
    const auto report = validate(b.mdp);
    CHECK(report_mentions(report, "initial_state is terminal"));
    CHECK(report_mentions(report, "duplicate successor"));
    CHECK(report_mentions(report, "terminal state has outgoing transitions"));
}

TEST_CASE("lite model extraction is the transition support") {
    auto [chain, chain_rewards] = qmtest::chain_mdp({0.0, 0.0}, 0.9);
    const LiteModel lite = extract_lite_model(chain);
    CHECK(lite.row(0, 0) == std::vector<int>{1});
    CHECK(lite.row(1, 0) == std::vector<int>{2});
    CHECK(lite.row(2, 0).empty());
    CHECK(lite.is_terminal(2));

    auto [branching, branching_rewards] = qmtest::counterexample_mdp();
    CHECK(extract_lite_model(branching).row(0, 0) == std::vector<int>{1, 2});
}

TEST_CASE("sbf is the largest support size") {
    auto [chain, r1] = qmtest::chain_mdp({0.0, 0.0}, 0.9);
    CHECK(sbf(chain) == 1);

    auto [branching, r2] = qmtest::counterexample_mdp();
    CHECK(sbf(branching) == 2);

    MdpBuilder all_terminal(2, 1, 0.9, {0, 1}, 0);
    CHECK_THROWS_AS(sbf(all_terminal.mdp), ValidationError);
}

TEST_CASE("sbf of a capped random MDP stays within the requested cap") {
    auto [mdp, rewards] = qmtest::random_mdp(17, 30, 5, 5, 0.9);
    int widest = 0;
    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.is_terminal(s)) continue;
        for (int a = 0; a < mdp.n_actions; ++a)
            widest = std::max(widest, static_cast<int>(mdp.row(s, a).size()));
    }
    CHECK(sbf(mdp) == widest);
    CHECK(sbf(mdp) >= 1);
    CHECK(sbf(mdp) <= 5);
}

TEST_CASE("sample_step follows deterministic rows exactly") {
    auto [mdp, rewards] = qmtest::chain_mdp({1.0}, 0.9);
    Rng rng(0);
    for (int i = 0; i < 10; ++i) {
        const StepResult step = sample_step(mdp, rewards, 0, 0, rng);
        CHECK(step.next_state == 1);
        CHECK(step.reward == 1.0);
        CHECK(step.done);
    }
}

TEST_CASE("sample_step frequencies match the transition row") {
    auto [mdp, rewards] = qmtest::counterexample_mdp();
    Rng rng(123);
    const int n = 100000;
    int hits = 0;
    for (int i = 0; i < n; ++i)
        if (sample_step(mdp, rewards, 0, 0, rng).next_state == 1) ++hits;
    const double freq = static_cast<double>(hits) / n;
    CHECK(std::abs(freq - 0.5) < 0.01);
    // three-sigma band of a fair Bernoulli draw
    CHECK(std::abs(freq - 0.5) <= 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("sample_step refuses terminal states") {
    auto [mdp, rewards] = qmtest::chain_mdp({1.0}, 0.9);
    Rng rng(0);
    CHECK_THROWS_AS(sample_step(mdp, rewards, 1, 0, rng), ValidationError);
}

TEST_CASE("reward reads off the support are errors") {
    auto [mdp, rewards] = qmtest::counterexample_mdp();
    CHECK(rewards.at(0, 0, 1) == 1.0);
    CHECK_THROWS_AS(rewards.at(0, 0, 0), ValidationError);
}

TEST_CASE("MDP JSON round-trips bit-exactly") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        auto [mdp, rewards] = qmtest::random_mdp(seed, 12, 3, 4, 0.93);
        auto [back_mdp, back_rewards] = mdp_from_json(mdp_to_json(mdp, rewards));
        CHECK(back_mdp.n_states == mdp.n_states);
        CHECK(back_mdp.n_actions == mdp.n_actions);
        CHECK(back_mdp.gamma == mdp.gamma);
        CHECK(back_mdp.initial_state == mdp.initial_state);
        CHECK(back_mdp.terminal == mdp.terminal);
        REQUIRE(back_mdp.transitions.size() == mdp.transitions.size());
        for (std::size_t i = 0; i < mdp.transitions.size(); ++i) {
            REQUIRE(back_mdp.transitions[i].size() == mdp.transitions[i].size());
            for (std::size_t k = 0; k < mdp.transitions[i].size(); ++k) {
                CHECK(back_mdp.transitions[i][k].next_state == mdp.transitions[i][k].next_state);
                CHECK(back_mdp.transitions[i][k].prob == mdp.transitions[i][k].prob);
                CHECK(back_rewards.rows[i][k].value == rewards.rows[i][k].value);
            }
        }
        CHECK(validate(back_mdp, back_rewards).empty());
    }
}

TEST_CASE("loading keeps off-support rewards visible to validate") {
    MdpBuilder b(2, 1, 0.9, {1}, 0);
    b.add(0, 0, {{1, 1.0, 1.0}});
    std::string text = mdp_to_json(b.mdp, b.rewards);
    // splice an extra reward entry on a transition that does not exist
    const std::string needle = "\"rewards\": [";
    const auto pos = text.find(needle);
    REQUIRE(pos != std::string::npos);
    text.insert(pos + needle.size(), "{\"s\":0,\"a\":0,\"sp\":0,\"r\":2.5},");
    auto [mdp, rewards] = mdp_from_json(text);
    const auto report = validate(mdp, rewards);
    REQUIRE(report.size() == 1);
    CHECK(report_mentions(report, "off the transition support"));
}
