#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qmanip/mdp.hpp"
#include "qmanip/solve.hpp"

namespace qm {

// Known range of an additive disturbance on the combined reward.
struct NoiseRange {
    double n_min = 0.0;
    double n_max = 0.0;
};

struct LinearCombination {
    std::vector<double> coeffs;
};

// (c1*r1 + ... + cn*rn)^exponent. Monotonically increasing in each input
// when every coefficient is nonnegative.
struct PowerOfSumCombination {
    std::vector<double> coeffs;
    int exponent = 1;
};

// How the target reward is built from the source rewards, plus an optional
// noise range when the relation is only known approximately.
struct CombinationSpec {
    std::variant<LinearCombination, PowerOfSumCombination> form = LinearCombination{};
    std::optional<NoiseRange> noise;

    std::size_t arity() const;
    bool linear() const { return std::holds_alternative<LinearCombination>(form); }
    const std::vector<double>& coeffs() const;
    bool nonnegative_coeffs() const;
    double evaluate(std::span<const double> source_rewards) const;
};

// Pointwise application of the combination to the source reward tables.
// All sources must share one transition support. Noise never enters here;
// it only affects the bound math and the simulated environment.
RewardTable combine_rewards(const std::vector<RewardTable>& sources,
                            const CombinationSpec& spec);

// Upper and lower bound tables on the target Q*, travelling together with
// iteration metadata.
struct BoundPair {
    QTable ub;
    QTable lb;
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;
    // Set by initializations that carry no validity guarantee; pruning with
    // such bounds may discard optimal actions, which callers should report.
    bool approximate = false;
    std::string tag;
};

// Single synchronous sweeps of the four bound operators, exposed so that
// property tests can watch per-sweep behavior. The optimistic/pessimistic
// operators take the best/worst reachable successor instead of the
// expectation; the clamped variants additionally never move a value past
// the previous table (min for upper bounds, max for lower bounds).
// reward_shift adds a constant to every reward read, which is how noise
// endpoints enter the updates. Terminal rows pass through unchanged and
// bootstrap at whatever value the table carries for them.
QTable bound_sweep_upper(const LiteModel& lite, const RewardTable& target, double gamma,
                         const QTable& q, double reward_shift = 0.0);
QTable bound_sweep_lower(const LiteModel& lite, const RewardTable& target, double gamma,
                         const QTable& q, double reward_shift = 0.0);
QTable clamped_sweep_upper(const LiteModel& lite, const RewardTable& target, double gamma,
                           const QTable& q, double reward_shift = 0.0);
QTable clamped_sweep_lower(const LiteModel& lite, const RewardTable& target, double gamma,
                           const QTable& q, double reward_shift = 0.0);

// Fixed points of the optimistic/pessimistic operators, iterated from
// zeros. The operators are gamma-contractions, so the fixed points are
// unique and the start is irrelevant; zeros keep runs reproducible.
BoundPair qm_iterate(const LiteModel& lite, const RewardTable& target, double gamma,
                     const SolveConfig& cfg, const std::optional<NoiseRange>& noise = {});

// (1 - gamma^t_max) / (1 - gamma); unbounded horizon when t_max is absent.
double discounted_horizon(double gamma, std::optional<int> t_max);

// Bound initializations of increasing quality. Terminal rows start at 0,
// the known value of a finished episode.
BoundPair mqm_init_naive(const LiteModel& lite, const RewardTable& target, double gamma,
                         std::optional<int> t_max);

// Valid bounds for a nonnegative linear combination, built from the source
// Q variants: ub = sum_i c_i Qstar_i and
// lb = max_i [c_i Qstar_i + sum_{j != i} c_j Qmu_j].
// With a single source both collapse to c_1 Qstar_1.
BoundPair mqm_init_linear(const std::vector<QTable>& q_stars,
                          const std::vector<QTable>& q_mus,
                          const std::vector<double>& coeffs);

// Approximate bounds for a monotone increasing, positive combination:
// ub = f(Qstar_|R_1|, ..., Qstar_|R_n|) pointwise and lb = -ub. The result
// is flagged approximate; it may prune optimal actions.
BoundPair mqm_init_nonlinear(const std::vector<QTable>& q_star_abs,
                             const CombinationSpec& spec);

// Widens an initialization by the discounted-horizon mass of the noise
// endpoints: ub += n_max * h, lb += n_min * h.
BoundPair apply_noise_to_init(BoundPair bounds, double n_min, double n_max, double gamma,
                              std::optional<int> t_max);

// Monotone tightening from a caller-supplied initialization. Valid results
// require init.lb <= Q* <= init.ub; the iteration itself only guarantees
// convergence to some fixed point, which can depend on the start. Terminal
// rows keep their initialized values.
BoundPair mqm_iterate(const LiteModel& lite, const RewardTable& target, double gamma,
                      const BoundPair& init, const SolveConfig& cfg,
                      const std::optional<NoiseRange>& noise = {});

// Pruning margin that absorbs the solve error of the source Q variants:
// 2 * epsilon * gamma / (1 - gamma).
double default_delta(double epsilon, double gamma);

struct PruneConfig {
    double delta = 0.0;
};

// Removes action b at state s when some other action's lower bound beats
// b's upper bound by at least delta. delta == 0 demands a strictly positive
// margin so exact ties survive. The surviving set is never empty.
ActionMask prune_actions(const BoundPair& bounds, const PruneConfig& cfg);

struct PruningStats {
    int pruned_count = 0;
    double pruned_fraction = 0.0;            // over non-terminal (s, a) pairs
    std::vector<int> per_state_remaining;    // every state, terminal included
};

PruningStats pruning_stats(const ActionMask& mask, const TabularMdp& mdp);

} // namespace qm
