#include <cmath>

#include "doctest.h"
#include "qmanip/bounds.hpp"
#include "qmanip/domains.hpp"
#include "qmanip/qlearn.hpp"
#include "qmanip/solve.hpp"
#include "test_support.hpp"

using namespace qm;
using qmtest::MdpBuilder;

namespace {

LearnConfig quick_config(int episodes, std::uint64_t seed) {
    LearnConfig cfg;
    cfg.episodes = episodes;
    cfg.t_max = 50;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("zero rewards learn nothing and return nothing") {
    auto [mdp, rewards] = qmtest::random_mdp(31, 10, 3, 3, 0.9);
    RewardTable zero = rewards;
    for (auto& row : zero.rows)
        for (RewardEntry& e : row) e.value = 0.0;
    const QLearnResult res = q_learning(mdp, zero, quick_config(50, 7));
    CHECK(sup_norm_diff(res.q, QTable::zeros(mdp.n_states, mdp.n_actions)) == 0.0);
    for (const EpisodeRecord& rec : res.curve.episodes) {
        CHECK(rec.undiscounted_return == 0.0);
        CHECK(rec.discounted_return == 0.0);
    }
    CHECK(res.curve.episodes.size() == 50);
}

TEST_CASE("a singleton mask plays its policy from the first episode") {
    auto [mdp, rewards] = qmtest::chain_mdp({0.0, 0.0, 1.0}, 0.9);
    ActionMask mask;
    mask.allowed.assign(static_cast<std::size_t>(mdp.n_states), {0});
    const QLearnResult res = q_learning(mdp, rewards, quick_config(20, 3), &mask);
    for (const EpisodeRecord& rec : res.curve.episodes) {
        CHECK(rec.undiscounted_return == 1.0);
        CHECK(rec.steps == 3);
    }
}

TEST_CASE("masked learning never touches disallowed actions") {
    MdpBuilder b(3, 2, 0.9, {2}, 0);
    b.add(0, 0, {{1, 1.0, 0.1}});
    b.add(0, 1, {{1, 1.0, 5.0}});
    b.add(1, 0, {{2, 1.0, 1.0}});
    b.add(1, 1, {{2, 1.0, 5.0}});
    ActionMask mask;
    mask.allowed = {{0}, {0}, {0, 1}};

    QTable poisoned = QTable::zeros(3, 2);
    poisoned(0, 1) = 100.0;  // tempting but disallowed
    poisoned(1, 1) = 100.0;

    const QLearnResult res = q_learning(b.mdp, b.rewards, quick_config(200, 5), &mask, &poisoned);
    CHECK(res.q(0, 1) == 100.0);  // never selected, never updated
    CHECK(res.q(1, 1) == 100.0);
    // bootstraps ignored the disallowed entries: the allowed values stay at
    // the true returns instead of chasing the poisoned ones
    CHECK(res.q(1, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.q(0, 0) <= 0.1 + 0.9 * 1.0 + 1e-6);
}

TEST_CASE("clipped targets keep the table inside the bounds") {
    auto [mdp, rewards] = qmtest::random_mdp(41, 12, 3, 3, 0.9);
    const LiteModel lite = extract_lite_model(mdp);
    BoundPair clip = mqm_init_naive(lite, rewards, mdp.gamma, std::nullopt);
    // shrink artificially so clipping actually engages
    for (double& v : clip.ub.values) v = std::min(v, 0.5);
    for (double& v : clip.lb.values) v = std::max(v, -0.5);

    const QLearnResult res = q_learning(mdp, rewards, quick_config(300, 11), nullptr, nullptr, &clip);
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            CHECK(res.q(s, a) <= clip.ub(s, a) + 1e-12);
            CHECK(res.q(s, a) >= clip.lb(s, a) - 1e-12);
        }
    }
}

TEST_CASE("clipping starts from the bound midpoint when no warm start is given") {
    auto [mdp, rewards] = qmtest::chain_mdp({1.0}, 0.9);
    BoundPair clip;
    clip.ub = QTable::constant(2, 1, 3.0);
    clip.lb = QTable::constant(2, 1, 1.0);
    LearnConfig cfg = quick_config(1, 0);
    cfg.alpha.initial = 1e-12;  // keep the initial table visible
    const QLearnResult res = q_learning(mdp, rewards, cfg, nullptr, nullptr, &clip);
    CHECK(res.q(1, 0) == 2.0);  // untouched terminal row shows the midpoint
}

TEST_CASE("seeded runs are bit-identical") {
    auto [mdp, rewards] = qmtest::random_mdp(51, 14, 3, 4, 0.9);
    const QLearnResult a = q_learning(mdp, rewards, quick_config(100, 99));
    const QLearnResult b = q_learning(mdp, rewards, quick_config(100, 99));
    CHECK(sup_norm_diff(a.q, b.q) == 0.0);
    REQUIRE(a.curve.episodes.size() == b.curve.episodes.size());
    for (std::size_t e = 0; e < a.curve.episodes.size(); ++e) {
        CHECK(a.curve.episodes[e].undiscounted_return == b.curve.episodes[e].undiscounted_return);
        CHECK(a.curve.episodes[e].steps == b.curve.episodes[e].steps);
    }
}

TEST_CASE("enough exploration recovers the optimal greedy policy") {
    auto [mdp, rewards] = qmtest::random_mdp(61, 6, 2, 2, 0.9, 1, 0.0, 1.0);
    LearnConfig cfg;
    cfg.episodes = 4000;
    cfg.t_max = 40;
    cfg.seed = 13;
    cfg.epsilon_explore = {1.0, 0.999, 0.2};
    const QLearnResult res = q_learning(mdp, rewards, cfg);
    const QTable oracle = value_iteration(mdp, rewards, {1e-10, 1000000});
    const Policy learned = greedy_policy(res.q);
    const Policy best = greedy_policy(oracle);
    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.is_terminal(s)) continue;
        // equal-value ties are fine; the learned action must be optimal
        CHECK(oracle(s, learned.action[static_cast<std::size_t>(s)]) ==
              doctest::Approx(oracle(s, best.action[static_cast<std::size_t>(s)])).epsilon(1e-6));
    }
}

TEST_CASE("unmasked learning approaches the oracle return on the two-currency grid") {
    Rng bundle_rng(21);
    const qm::DomainBundle bundle = qm::dollar_euro(1, bundle_rng);
    const RewardTable target = combine_rewards(bundle.source_rewards, bundle.combination);
    LearnConfig cfg;
    cfg.episodes = 2500;
    cfg.t_max = 100;
    cfg.seed = 22;
    cfg.epsilon_explore = {1.0, 0.995, 0.05};
    const QLearnResult res = q_learning(bundle.mdp, target, cfg);

    Rng eval_rng(23);
    const QTable oracle = value_iteration(bundle.mdp, target, {1e-8, 1000000});
    const double oracle_return =
        evaluate_policy_return(bundle.mdp, target, greedy_policy(oracle), 1, 100, eval_rng);
    CHECK(oracle_return == doctest::Approx(1.2).epsilon(1e-9));

    double tail = 0.0;
    const int window = 200;
    for (int e = cfg.episodes - window; e < cfg.episodes; ++e)
        tail += res.curve.episodes[static_cast<std::size_t>(e)].undiscounted_return;
    tail /= window;
    CHECK(tail >= 0.9 * oracle_return);  // residual exploration keeps it below 1.2
}

TEST_CASE("policy return evaluation is exact on deterministic domains") {
    auto [mdp, rewards] = qmtest::chain_mdp({0.5, 0.5, -0.25}, 0.9);
    Policy policy{{0, 0, 0, 0}};
    Rng rng(1);
    const double mean = evaluate_policy_return(mdp, rewards, policy, 10, 50, rng);
    CHECK(mean == doctest::Approx(0.75).epsilon(1e-12));

    RewardTable zero = rewards;
    for (auto& row : zero.rows)
        for (RewardEntry& e : row) e.value = 0.0;
    Rng rng2(2);
    CHECK(evaluate_policy_return(mdp, zero, policy, 10, 50, rng2) == 0.0);
}

TEST_CASE("per-step reward noise feeds the returns") {
    auto [mdp, rewards] = qmtest::chain_mdp({0.0, 0.0, 0.0, 0.0}, 0.9);
    LearnConfig cfg = quick_config(400, 17);
    cfg.reward_noise = NoiseRange{-0.5, 0.5};
    const QLearnResult res = q_learning(mdp, rewards, cfg);
    double mean = 0.0;
    bool nonzero = false;
    for (const EpisodeRecord& rec : res.curve.episodes) {
        mean += rec.undiscounted_return;
        nonzero = nonzero || rec.undiscounted_return != 0.0;
    }
    mean /= static_cast<double>(res.curve.episodes.size());
    CHECK(nonzero);
    CHECK(std::abs(mean) < 0.25);  // zero-mean noise over 4-step episodes
}
