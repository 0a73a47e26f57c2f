#pragma once

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <utility>
#include <vector>

#include "qmanip/mdp.hpp"
#include "qmanip/solve.hpp"

namespace qmtest {

// Assembles small hand-written MDPs entry by entry.
struct MdpBuilder {
    qm::TabularMdp mdp;
    qm::RewardTable rewards;

    MdpBuilder(int n_states, int n_actions, double gamma, std::vector<int> terminals,
               int initial_state) {
        mdp.n_states = n_states;
        mdp.n_actions = n_actions;
        mdp.gamma = gamma;
        mdp.initial_state = initial_state;
        mdp.terminal.assign(static_cast<std::size_t>(n_states), 0);
        for (int t : terminals) mdp.terminal[static_cast<std::size_t>(t)] = 1;
        mdp.transitions.resize(static_cast<std::size_t>(n_states) * n_actions);
        rewards.n_states = n_states;
        rewards.n_actions = n_actions;
        rewards.rows.resize(mdp.transitions.size());
    }

    // entries: (next_state, probability, reward)
    MdpBuilder& add(int s, int a, std::vector<std::tuple<int, double, double>> entries) {
        auto& trow = mdp.transitions[mdp.row_index(s, a)];
        auto& rrow = rewards.rows[mdp.row_index(s, a)];
        for (const auto& [sp, p, r] : entries) {
            trow.push_back({sp, p});
            rrow.push_back({sp, r});
        }
        return *this;
    }
};

// Deterministic chain s0 -> s1 -> ... -> terminal with one action and the
// given per-step rewards.
inline std::pair<qm::TabularMdp, qm::RewardTable> chain_mdp(std::vector<double> step_rewards,
                                                            double gamma) {
    const int n = static_cast<int>(step_rewards.size()) + 1;
    MdpBuilder b(n, 1, gamma, {n - 1}, 0);
    for (int s = 0; s + 1 < n; ++s) b.add(s, 0, {{s + 1, 1.0, step_rewards[static_cast<std::size_t>(s)]}});
    return {b.mdp, b.rewards};
}

// The three-state example with one action, uniform branching to the other
// non-terminal state and the terminal, reward 1 everywhere, gamma 0.5.
inline std::pair<qm::TabularMdp, qm::RewardTable> counterexample_mdp() {
    MdpBuilder b(3, 1, 0.5, {2}, 0);
    b.add(0, 0, {{1, 0.5, 1.0}, {2, 0.5, 1.0}});
    b.add(1, 0, {{0, 0.5, 1.0}, {2, 0.5, 1.0}});
    return {b.mdp, b.rewards};
}

// Seeded random MDP with dense-ish sparse rows and bounded rewards.
inline std::pair<qm::TabularMdp, qm::RewardTable> random_mdp(std::uint64_t seed, int n_states,
                                                             int n_actions, int max_support,
                                                             double gamma, int n_terminals = 1,
                                                             double r_lo = -1.0, double r_hi = 1.0) {
    qm::Rng rng(seed);
    qm::TabularMdp mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.gamma = gamma;
    mdp.terminal.assign(static_cast<std::size_t>(n_states), 0);

    std::vector<int> all(static_cast<std::size_t>(n_states));
    for (int s = 0; s < n_states; ++s) all[static_cast<std::size_t>(s)] = s;
    for (int t : rng.sample_without_replacement(all, n_terminals))
        mdp.terminal[static_cast<std::size_t>(t)] = 1;

    std::vector<int> nonterminal;
    for (int s = 0; s < n_states; ++s)
        if (!mdp.is_terminal(s)) nonterminal.push_back(s);
    mdp.initial_state =
        nonterminal[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(nonterminal.size()) - 1))];

    mdp.transitions.resize(static_cast<std::size_t>(n_states) * n_actions);
    qm::RewardTable rewards;
    rewards.n_states = n_states;
    rewards.n_actions = n_actions;
    rewards.rows.resize(mdp.transitions.size());

    for (int s = 0; s < n_states; ++s) {
        if (mdp.is_terminal(s)) continue;
        for (int a = 0; a < n_actions; ++a) {
            const int k = rng.uniform_int(1, max_support);
            std::vector<int> support = rng.sample_without_replacement(all, k);
            std::sort(support.begin(), support.end());
            std::vector<double> weights(support.size());
            double total = 0.0;
            for (double& w : weights) {
                w = rng.uniform(0.05, 1.0);
                total += w;
            }
            auto& trow = mdp.transitions[mdp.row_index(s, a)];
            auto& rrow = rewards.rows[mdp.row_index(s, a)];
            for (std::size_t i = 0; i < support.size(); ++i) {
                trow.push_back({support[i], weights[i] / total});
                rrow.push_back({support[i], rng.uniform(r_lo, r_hi)});
            }
        }
    }
    return {mdp, rewards};
}

// Independent route to the worst-policy value: direct fixed-point iteration
// of the min-over-actions Bellman operator.
inline qm::QTable min_bellman_q_mu(const qm::TabularMdp& mdp, const qm::RewardTable& rewards,
                                   const qm::SolveConfig& cfg) {
    qm::QTable q = qm::QTable::zeros(mdp.n_states, mdp.n_actions);
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        qm::QTable next = q;
        for (int s = 0; s < mdp.n_states; ++s) {
            if (mdp.is_terminal(s)) continue;
            for (int a = 0; a < mdp.n_actions; ++a) {
                const auto& trow = mdp.row(s, a);
                const auto& rrow = rewards.row(s, a);
                double acc = 0.0;
                for (std::size_t k = 0; k < trow.size(); ++k) {
                    const int sp = trow[k].next_state;
                    double boot = 0.0;
                    if (!mdp.is_terminal(sp)) {
                        boot = q(sp, 0);
                        for (int ap = 1; ap < mdp.n_actions; ++ap) boot = std::min(boot, q(sp, ap));
                    }
                    acc += trow[k].prob * (rrow[k].value + mdp.gamma * boot);
                }
                next(s, a) = acc;
            }
        }
        const double residual = qm::sup_norm_diff(next, q);
        q = std::move(next);
        if (residual <= cfg.epsilon) break;
    }
    return q;
}

} // namespace qmtest
