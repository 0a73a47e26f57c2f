#include "qmanip/baselines.hpp"

#include <algorithm>

#include "qmanip/errors.hpp"

namespace qm {

SourceBehavior make_source_behavior(const TabularMdp& mdp, const RewardTable& rewards,
                                    const SolveConfig& cfg) {
    SourceBehavior src;
    src.q_star = value_iteration(mdp, rewards, cfg);
    src.q_mu = q_mu(mdp, rewards, cfg);
    src.q_star_abs = value_iteration(mdp, rewards.absolute(), cfg);
    src.policy = greedy_policy(src.q_star);
    src.rewards = rewards;
    return src;
}

QTable sfql_bootstrap(const TabularMdp& mdp, const RewardTable& target,
                      const std::vector<SourceBehavior>& sources, const SolveConfig& cfg) {
    if (sources.empty()) throw ValidationError("bootstrap needs at least one source behavior");
    QTable best = policy_evaluation(mdp, target, sources.front().policy, cfg);
    for (std::size_t i = 1; i < sources.size(); ++i) {
        const QTable candidate = policy_evaluation(mdp, target, sources[i].policy, cfg);
        for (std::size_t idx = 0; idx < best.values.size(); ++idx)
            best.values[idx] = std::max(best.values[idx], candidate.values[idx]);
    }
    return best;
}

BoundPair sqb_bounds_from_mqm(BoundPair init) {
    init.tag = init.tag.empty() ? "sqb-prior" : "sqb-prior:" + init.tag;
    return init;
}

} // namespace qm
