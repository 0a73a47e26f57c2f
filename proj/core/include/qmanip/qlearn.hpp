#pragma once

#include <cstdint>
#include <optional>

#include "qmanip/bounds.hpp"
#include "qmanip/mdp.hpp"

namespace qm {

// Geometric schedule: value(e) = max(floor, initial * decay^e).
struct DecaySchedule {
    double initial = 1.0;
    double decay = 1.0;
    double floor = 0.0;

    double value(int episode) const;
};

struct LearnConfig {
    int episodes = 1000;
    int t_max = 100;
    DecaySchedule alpha{0.1, 1.0, 0.0};
    DecaySchedule epsilon_explore{1.0, 0.995, 0.01};
    std::uint64_t seed = 0;
    // Per-step uniform noise added to the environment reward, for targets
    // whose combination is only known up to a bounded disturbance.
    std::optional<NoiseRange> reward_noise;
};

struct EpisodeRecord {
    int episode = 0;
    double undiscounted_return = 0.0;
    double discounted_return = 0.0;
    int steps = 0;
    double wall_seconds = 0.0;
};

struct LearningCurve {
    std::vector<EpisodeRecord> episodes;
};

struct QLearnResult {
    QTable q;
    LearningCurve curve;
};

// Tabular episodic Q-learning with three injection points: an action mask
// restricting selection and bootstrapping, a warm-start table, and
// TD-target clipping into [lb, ub]. With clipping and no explicit
// warm start, Q starts at the midpoint of the bounds so it stays inside
// them for the whole run. Discount comes from the MDP.
QLearnResult q_learning(const TabularMdp& mdp, const RewardTable& rewards,
                        const LearnConfig& cfg, const ActionMask* mask = nullptr,
                        const QTable* init_q = nullptr, const BoundPair* clip = nullptr);

// Monte-Carlo mean of undiscounted episodic returns under a fixed policy.
double evaluate_policy_return(const TabularMdp& mdp, const RewardTable& rewards,
                              const Policy& policy, int n_episodes, int t_max, Rng& rng);

} // namespace qm
