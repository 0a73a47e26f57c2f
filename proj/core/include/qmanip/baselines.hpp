#pragma once

#include "qmanip/bounds.hpp"
#include "qmanip/solve.hpp"

namespace qm {

// Everything a source task hands to the target: its greedy policy, the
// three Q variants, and its reward table.
struct SourceBehavior {
    Policy policy;
    QTable q_star;
    QTable q_mu;
    QTable q_star_abs;
    RewardTable rewards;
};

SourceBehavior make_source_behavior(const TabularMdp& mdp, const RewardTable& rewards,
                                    const SolveConfig& cfg);

// Generalized-policy-improvement bootstrap: the pointwise max over the
// source policies evaluated under the target reward. Used to warm-start
// learning.
QTable sfql_bootstrap(const TabularMdp& mdp, const RewardTable& target,
                      const std::vector<SourceBehavior>& sources, const SolveConfig& cfg);

// Identity adapter that records which bounds the clipped-update baseline
// receives, so experiment configs name their bound source explicitly.
BoundPair sqb_bounds_from_mqm(BoundPair init);

} // namespace qm
