#include "qmanip/solve.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <utility>

namespace qm {

QTable vi_sweep(const TabularMdp& mdp, const RewardTable& rewards, const QTable& q,
                const ActionMask* mask) {
    QTable next = q;
    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.is_terminal(s)) continue;
        for (int a = 0; a < mdp.n_actions; ++a) {
            const auto& trow = mdp.row(s, a);
            const auto& rrow = rewards.row(s, a);
            assert(trow.size() == rrow.size());
            double acc = 0.0;
            for (std::size_t k = 0; k < trow.size(); ++k) {
                const int sp = trow[k].next_state;
                double boot = 0.0;
                if (!mdp.is_terminal(sp))
                    boot = mask ? q.row_max(sp, mask->allowed[static_cast<std::size_t>(sp)])
                                : q.row_max(sp);
                acc += trow[k].prob * (rrow[k].value + mdp.gamma * boot);
            }
            next(s, a) = acc;
        }
    }
    return next;
}

QTable value_iteration(const TabularMdp& mdp, const RewardTable& rewards, const SolveConfig& cfg,
                       const ActionMask* mask) {
    QTable q = QTable::zeros(mdp.n_states, mdp.n_actions);
    double residual = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        QTable next = vi_sweep(mdp, rewards, q, mask);
        residual = sup_norm_diff(next, q);
        q = std::move(next);
        if (residual <= cfg.epsilon) return q;
    }
    throw SolverError("value iteration did not converge within " + std::to_string(cfg.max_sweeps) +
                          " sweeps (residual " + std::to_string(residual) + ")",
                      residual, cfg.max_sweeps);
}

QTable q_mu(const TabularMdp& mdp, const RewardTable& rewards, const SolveConfig& cfg) {
    QTable q = value_iteration(mdp, rewards.negated(), cfg);
    for (double& v : q.values) v = -v;
    return q;
}

QTable policy_evaluation(const TabularMdp& mdp, const RewardTable& rewards, const Policy& policy,
                         const SolveConfig& cfg) {
    QTable q = QTable::zeros(mdp.n_states, mdp.n_actions);
    double residual = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        QTable next = q;
        for (int s = 0; s < mdp.n_states; ++s) {
            if (mdp.is_terminal(s)) continue;
            for (int a = 0; a < mdp.n_actions; ++a) {
                const auto& trow = mdp.row(s, a);
                const auto& rrow = rewards.row(s, a);
                assert(trow.size() == rrow.size());
                double acc = 0.0;
                for (std::size_t k = 0; k < trow.size(); ++k) {
                    const int sp = trow[k].next_state;
                    const double boot =
                        mdp.is_terminal(sp)
                            ? 0.0
                            : q(sp, policy.action[static_cast<std::size_t>(sp)]);
                    acc += trow[k].prob * (rrow[k].value + mdp.gamma * boot);
                }
                next(s, a) = acc;
            }
        }
        residual = sup_norm_diff(next, q);
        q = std::move(next);
        if (residual <= cfg.epsilon) return q;
    }
    throw SolverError("policy evaluation did not converge within " +
                          std::to_string(cfg.max_sweeps) + " sweeps (residual " +
                          std::to_string(residual) + ")",
                      residual, cfg.max_sweeps);
}

Policy greedy_policy(const QTable& q, const ActionMask* mask) {
    Policy policy;
    policy.action.resize(static_cast<std::size_t>(q.n_states), 0);
    for (int s = 0; s < q.n_states; ++s) {
        if (mask) {
            const auto& allowed = mask->allowed[static_cast<std::size_t>(s)];
            if (allowed.empty()) throw ValidationError("empty allowed action set at state " +
                                                       std::to_string(s));
            policy.action[static_cast<std::size_t>(s)] = q.row_argmax(s, allowed);
        } else {
            policy.action[static_cast<std::size_t>(s)] = q.row_argmax(s);
        }
    }
    return policy;
}

} // namespace qm
