#pragma once

#include "qmanip/errors.hpp"
#include "qmanip/mdp.hpp"

namespace qm {

// Stopping control shared by every fixed-point solver in this library:
// synchronous sweeps end when the sup-norm change between consecutive
// sweeps drops to epsilon or below.
struct SolveConfig {
    double epsilon = 1e-8;
    int max_sweeps = 1000000;
};

// One synchronous Bellman-optimality sweep. Terminal rows are copied
// through unchanged; terminal successors contribute zero future value.
// A mask restricts the maximization to the allowed actions.
QTable vi_sweep(const TabularMdp& mdp, const RewardTable& rewards, const QTable& q,
                const ActionMask* mask = nullptr);

// Q* via synchronous value iteration from zeros. Throws SolverError when
// max_sweeps is exceeded.
QTable value_iteration(const TabularMdp& mdp, const RewardTable& rewards,
                       const SolveConfig& cfg, const ActionMask* mask = nullptr);

// Q of the return-minimizing policy, computed as -Q*(-R).
QTable q_mu(const TabularMdp& mdp, const RewardTable& rewards, const SolveConfig& cfg);

// Q^pi under a fixed policy.
QTable policy_evaluation(const TabularMdp& mdp, const RewardTable& rewards,
                         const Policy& policy, const SolveConfig& cfg);

// Deterministic greedy policy; ties break toward the lowest action index.
Policy greedy_policy(const QTable& q, const ActionMask* mask = nullptr);

} // namespace qm
