#include <benchmark/benchmark.h>

#include "qmanip/bounds.hpp"
#include "qmanip/domains.hpp"
#include "qmanip/qlearn.hpp"
#include "qmanip/solve.hpp"

namespace {

using namespace qm;

const SolveConfig kSolve{1e-8, 1000000};

DomainBundle bundle_of(const std::string& name, int sbf_level) {
    Rng rng(404);
    return make_domain(name, sbf_level, rng);
}

void BM_ValueIteration(benchmark::State& state, const std::string& name, int sbf_level) {
    const DomainBundle bundle = bundle_of(name, sbf_level);
    const RewardTable target = combine_rewards(bundle.source_rewards, bundle.combination);
    for (auto _ : state) {
        benchmark::DoNotOptimize(value_iteration(bundle.mdp, target, kSolve));
    }
}

void BM_PlainBounds(benchmark::State& state, const std::string& name, int sbf_level) {
    const DomainBundle bundle = bundle_of(name, sbf_level);
    const RewardTable target = combine_rewards(bundle.source_rewards, bundle.combination);
    const LiteModel lite = extract_lite_model(bundle.mdp);
    for (auto _ : state) {
        benchmark::DoNotOptimize(qm_iterate(lite, target, bundle.mdp.gamma, kSolve));
    }
}

void BM_ClampedBounds(benchmark::State& state, const std::string& name, int sbf_level) {
    const DomainBundle bundle = bundle_of(name, sbf_level);
    const RewardTable target = combine_rewards(bundle.source_rewards, bundle.combination);
    const LiteModel lite = extract_lite_model(bundle.mdp);
    std::vector<QTable> q_stars, q_mus;
    for (const RewardTable& src : bundle.source_rewards) {
        q_stars.push_back(value_iteration(bundle.mdp, src, kSolve));
        q_mus.push_back(q_mu(bundle.mdp, src, kSolve));
    }
    const BoundPair init = mqm_init_linear(q_stars, q_mus, bundle.combination.coeffs());
    for (auto _ : state) {
        benchmark::DoNotOptimize(mqm_iterate(lite, target, bundle.mdp.gamma, init, kSolve));
    }
}

void BM_MaskedLearning(benchmark::State& state, const std::string& name) {
    const DomainBundle bundle = bundle_of(name, 1);
    const RewardTable target = combine_rewards(bundle.source_rewards, bundle.combination);
    const LiteModel lite = extract_lite_model(bundle.mdp);
    const BoundPair bounds = qm_iterate(lite, target, bundle.mdp.gamma, kSolve);
    const ActionMask mask =
        prune_actions(bounds, PruneConfig{default_delta(kSolve.epsilon, bundle.mdp.gamma)});
    LearnConfig cfg;
    cfg.episodes = 200;
    cfg.t_max = 100;
    cfg.seed = 9;
    for (auto _ : state) {
        benchmark::DoNotOptimize(q_learning(bundle.mdp, target, cfg, &mask));
    }
}

} // namespace

BENCHMARK_CAPTURE(BM_ValueIteration, dollar_euro_sbf3, "dollar_euro", 3);
BENCHMARK_CAPTURE(BM_ValueIteration, autogen_sbf9, "autogen", 9);
BENCHMARK_CAPTURE(BM_PlainBounds, dollar_euro_sbf3, "dollar_euro", 3);
BENCHMARK_CAPTURE(BM_PlainBounds, racetrack_sbf3, "racetrack", 3);
BENCHMARK_CAPTURE(BM_PlainBounds, autogen_sbf9, "autogen", 9);
BENCHMARK_CAPTURE(BM_ClampedBounds, dollar_euro_sbf3, "dollar_euro", 3);
BENCHMARK_CAPTURE(BM_ClampedBounds, autogen_sbf9, "autogen", 9);
BENCHMARK_CAPTURE(BM_MaskedLearning, dollar_euro, "dollar_euro");

BENCHMARK_MAIN();
