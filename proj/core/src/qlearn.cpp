#include "qmanip/qlearn.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>

#include "qmanip/errors.hpp"

namespace qm {

double DecaySchedule::value(int episode) const {
    return std::max(floor, initial * std::pow(decay, episode));
}

namespace {

QTable midpoint(const BoundPair& clip) {
    QTable q = clip.ub;
    for (std::size_t i = 0; i < q.values.size(); ++i)
        q.values[i] = 0.5 * (clip.ub.values[i] + clip.lb.values[i]);
    return q;
}

int pick_action(const QTable& q, const std::vector<int>& allowed, int s, double eps, Rng& rng) {
    if (rng.uniform01() < eps)
        return allowed[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(allowed.size()) - 1))];
    return q.row_argmax(s, allowed);
}

} // namespace

QLearnResult q_learning(const TabularMdp& mdp, const RewardTable& rewards, const LearnConfig& cfg,
                        const ActionMask* mask, const QTable* init_q, const BoundPair* clip) {
    if (cfg.episodes < 1 || cfg.t_max < 1)
        throw ValidationError("learning needs positive episode and step budgets");

    const ActionMask full = mask ? ActionMask{} : ActionMask::full(mdp.n_states, mdp.n_actions);
    const ActionMask& active = mask ? *mask : full;
    for (int s = 0; s < mdp.n_states; ++s)
        if (!mdp.is_terminal(s) && active.allowed[static_cast<std::size_t>(s)].empty())
            throw ValidationError("mask leaves no actions at state " + std::to_string(s));

    QTable q = init_q ? *init_q : (clip ? midpoint(*clip) : QTable::zeros(mdp.n_states, mdp.n_actions));
    Rng rng(cfg.seed);

    QLearnResult out;
    out.curve.episodes.reserve(static_cast<std::size_t>(cfg.episodes));
    for (int episode = 0; episode < cfg.episodes; ++episode) {
        const auto t0 = std::chrono::steady_clock::now();
        const double eps = cfg.epsilon_explore.value(episode);
        const double alpha = cfg.alpha.value(episode);

        int s = mdp.initial_state;
        double undiscounted = 0.0;
        double discounted = 0.0;
        double discount = 1.0;
        int steps = 0;
        for (int t = 0; t < cfg.t_max; ++t) {
            const auto& allowed = active.allowed[static_cast<std::size_t>(s)];
            const int a = pick_action(q, allowed, s, eps, rng);
            assert(active.is_allowed(s, a));

            const StepResult step = sample_step(mdp, rewards, s, a, rng);
            double r = step.reward;
            if (cfg.reward_noise)
                r += rng.uniform(cfg.reward_noise->n_min, cfg.reward_noise->n_max);

            double target = r;
            if (!step.done) {
                const auto& next_allowed = active.allowed[static_cast<std::size_t>(step.next_state)];
                target += mdp.gamma * q.row_max(step.next_state, next_allowed);
#ifndef NDEBUG
                // bootstrapping must stay inside the allowed set
                assert(q.row_max(step.next_state, next_allowed) <=
                       q.row_max(step.next_state) + 1e-12);
#endif
            }
            if (clip) target = std::clamp(target, clip->lb(s, a), clip->ub(s, a));
            q(s, a) += alpha * (target - q(s, a));

            undiscounted += r;
            discounted += discount * r;
            discount *= mdp.gamma;
            ++steps;
            if (step.done) break;
            s = step.next_state;
        }

        const auto t1 = std::chrono::steady_clock::now();
        EpisodeRecord rec;
        rec.episode = episode;
        rec.undiscounted_return = undiscounted;
        rec.discounted_return = discounted;
        rec.steps = steps;
        rec.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
        out.curve.episodes.push_back(rec);
    }
    out.q = std::move(q);
    return out;
}

double evaluate_policy_return(const TabularMdp& mdp, const RewardTable& rewards,
                              const Policy& policy, int n_episodes, int t_max, Rng& rng) {
    if (n_episodes < 1 || t_max < 1)
        throw ValidationError("evaluation needs positive episode and step budgets");
    double total = 0.0;
    for (int episode = 0; episode < n_episodes; ++episode) {
        int s = mdp.initial_state;
        double ret = 0.0;
        for (int t = 0; t < t_max; ++t) {
            const StepResult step =
                sample_step(mdp, rewards, s, policy.action[static_cast<std::size_t>(s)], rng);
            ret += step.reward;
            if (step.done) break;
            s = step.next_state;
        }
        total += ret;
    }
    return total / n_episodes;
}

} // namespace qm
