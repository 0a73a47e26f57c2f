#include "qmanip/bounds.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <utility>

#include "qmanip/errors.hpp"

namespace qm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_coverage(const LiteModel& lite, const RewardTable& target) {
    if (lite.n_states != target.n_states || lite.n_actions != target.n_actions)
        throw ValidationError("lite model shape differs from the target reward table");
    for (int s = 0; s < lite.n_states; ++s) {
        for (int a = 0; a < lite.n_actions; ++a) {
            const auto& reach = lite.row(s, a);
            const auto& rrow = target.row(s, a);
            if (reach.size() != rrow.size())
                throw ValidationError("lite model does not cover the reward support at (s=" +
                                      std::to_string(s) + ", a=" + std::to_string(a) + ")");
            for (std::size_t k = 0; k < reach.size(); ++k)
                if (reach[k] != rrow[k].next_state)
                    throw ValidationError("lite model successors differ from the reward support "
                                          "at (s=" + std::to_string(s) + ", a=" +
                                          std::to_string(a) + ")");
        }
    }
}

enum class Extreme { Max, Min };

// Shared kernel of the four bound sweeps. Picks the best or worst reachable
// successor; optionally clamps against the previous table so the sequence
// moves one way only. Terminal rows pass through and bootstrap at the
// values the table carries for them.
QTable bound_sweep(const LiteModel& lite, const RewardTable& target, double gamma,
                   const QTable& q, double reward_shift, Extreme extreme, bool clamp) {
    QTable next = q;
    for (int s = 0; s < lite.n_states; ++s) {
        if (lite.is_terminal(s)) continue;
        for (int a = 0; a < lite.n_actions; ++a) {
            const auto& rrow = target.row(s, a);
            double pick = extreme == Extreme::Max ? -kInf : kInf;
            for (const RewardEntry& e : rrow) {
                const double v = e.value + reward_shift + gamma * q.row_max(e.next_state);
                pick = extreme == Extreme::Max ? std::max(pick, v) : std::min(pick, v);
            }
            if (clamp)
                pick = extreme == Extreme::Max ? std::min(q(s, a), pick) : std::max(q(s, a), pick);
            next(s, a) = pick;
        }
    }
    return next;
}

struct IterationOutcome {
    QTable q;
    int sweeps = 0;
    double residual = 0.0;
};

template <typename SweepFn>
IterationOutcome iterate_to_fixed_point(QTable start, const SolveConfig& cfg, SweepFn sweep_fn,
                                        const char* what) {
    QTable q = std::move(start);
    double residual = kInf;
    for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        QTable next = sweep_fn(q);
        residual = sup_norm_diff(next, q);
        q = std::move(next);
        if (residual <= cfg.epsilon) return {std::move(q), sweep, residual};
    }
    throw SolverError(std::string(what) + " did not converge within " +
                          std::to_string(cfg.max_sweeps) + " sweeps (residual " +
                          std::to_string(residual) + ")",
                      residual, cfg.max_sweeps);
}

void check_congruent(const QTable& a, const QTable& b, const char* what) {
    if (!a.congruent(b)) throw ValidationError(std::string(what) + ": incongruent Q tables");
}

} // namespace

std::size_t CombinationSpec::arity() const {
    return coeffs().size();
}

const std::vector<double>& CombinationSpec::coeffs() const {
    if (const auto* lin = std::get_if<LinearCombination>(&form)) return lin->coeffs;
    return std::get<PowerOfSumCombination>(form).coeffs;
}

bool CombinationSpec::nonnegative_coeffs() const {
    for (double c : coeffs())
        if (c < 0.0) return false;
    return true;
}

double CombinationSpec::evaluate(std::span<const double> source_rewards) const {
    const std::vector<double>& c = coeffs();
    assert(source_rewards.size() == c.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) sum += c[i] * source_rewards[i];
    if (const auto* pos = std::get_if<PowerOfSumCombination>(&form)) {
        double out = 1.0;
        for (int k = 0; k < pos->exponent; ++k) out *= sum;
        return out;
    }
    return sum;
}

RewardTable combine_rewards(const std::vector<RewardTable>& sources, const CombinationSpec& spec) {
    if (sources.empty()) throw ValidationError("combine_rewards: no source reward tables");
    if (spec.arity() != sources.size())
        throw ValidationError("combination arity differs from the number of sources");
    const RewardTable& first = sources.front();
    for (const RewardTable& src : sources) {
        if (src.n_states != first.n_states || src.n_actions != first.n_actions ||
            src.rows.size() != first.rows.size())
            throw ValidationError("source reward tables do not share one support");
        for (std::size_t i = 0; i < src.rows.size(); ++i) {
            if (src.rows[i].size() != first.rows[i].size())
                throw ValidationError("source reward tables do not share one support");
            for (std::size_t k = 0; k < src.rows[i].size(); ++k)
                if (src.rows[i][k].next_state != first.rows[i][k].next_state)
                    throw ValidationError("source reward tables do not share one support");
        }
    }

    RewardTable out = first;
    std::vector<double> values(sources.size());
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        for (std::size_t k = 0; k < out.rows[i].size(); ++k) {
            for (std::size_t src = 0; src < sources.size(); ++src)
                values[src] = sources[src].rows[i][k].value;
            out.rows[i][k].value = spec.evaluate(values);
        }
    }
    return out;
}

QTable bound_sweep_upper(const LiteModel& lite, const RewardTable& target, double gamma,
                         const QTable& q, double reward_shift) {
    return bound_sweep(lite, target, gamma, q, reward_shift, Extreme::Max, false);
}

QTable bound_sweep_lower(const LiteModel& lite, const RewardTable& target, double gamma,
                         const QTable& q, double reward_shift) {
    return bound_sweep(lite, target, gamma, q, reward_shift, Extreme::Min, false);
}

QTable clamped_sweep_upper(const LiteModel& lite, const RewardTable& target, double gamma,
                           const QTable& q, double reward_shift) {
    return bound_sweep(lite, target, gamma, q, reward_shift, Extreme::Max, true);
}

QTable clamped_sweep_lower(const LiteModel& lite, const RewardTable& target, double gamma,
                           const QTable& q, double reward_shift) {
    return bound_sweep(lite, target, gamma, q, reward_shift, Extreme::Min, true);
}

BoundPair qm_iterate(const LiteModel& lite, const RewardTable& target, double gamma,
                     const SolveConfig& cfg, const std::optional<NoiseRange>& noise) {
    check_coverage(lite, target);
    const double up_shift = noise ? noise->n_max : 0.0;
    const double lo_shift = noise ? noise->n_min : 0.0;
    const QTable zeros = QTable::zeros(lite.n_states, lite.n_actions);

    IterationOutcome up = iterate_to_fixed_point(
        zeros, cfg,
        [&](const QTable& q) { return bound_sweep_upper(lite, target, gamma, q, up_shift); },
        "upper bound iteration");
    IterationOutcome lo = iterate_to_fixed_point(
        zeros, cfg,
        [&](const QTable& q) { return bound_sweep_lower(lite, target, gamma, q, lo_shift); },
        "lower bound iteration");

    BoundPair out;
    out.ub = std::move(up.q);
    out.lb = std::move(lo.q);
    out.iterations = std::max(up.sweeps, lo.sweeps);
    out.converged = true;
    out.residual = std::max(up.residual, lo.residual);
    return out;
}

double discounted_horizon(double gamma, std::optional<int> t_max) {
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw ValidationError("discounted horizon requires gamma in [0, 1)");
    if (!t_max) return 1.0 / (1.0 - gamma);
    if (*t_max < 1) throw ValidationError("t_max must be positive");
    return (1.0 - std::pow(gamma, *t_max)) / (1.0 - gamma);
}

BoundPair mqm_init_naive(const LiteModel& lite, const RewardTable& target, double gamma,
                         std::optional<int> t_max) {
    if (target.empty()) throw ValidationError("naive initialization needs a non-empty reward table");
    const double horizon = discounted_horizon(gamma, t_max);
    // Episodes can end early, so the extremes are capped at 0 to keep the
    // constants bracketing the zero-valued terminals.
    const double up = std::max(target.max_value(), 0.0) * horizon;
    const double lo = std::min(target.min_value(), 0.0) * horizon;

    BoundPair out;
    out.ub = QTable::constant(lite.n_states, lite.n_actions, up);
    out.lb = QTable::constant(lite.n_states, lite.n_actions, lo);
    for (int s = 0; s < lite.n_states; ++s) {
        if (!lite.is_terminal(s)) continue;
        for (int a = 0; a < lite.n_actions; ++a) {
            out.ub(s, a) = 0.0;
            out.lb(s, a) = 0.0;
        }
    }
    out.tag = "init:naive";
    return out;
}

BoundPair mqm_init_linear(const std::vector<QTable>& q_stars, const std::vector<QTable>& q_mus,
                          const std::vector<double>& coeffs) {
    if (coeffs.empty() || q_stars.size() != coeffs.size() || q_mus.size() != coeffs.size())
        throw ValidationError("linear initialization needs matching q_star/q_mu/coefficient counts");
    for (double c : coeffs)
        if (c < 0.0)
            throw ValidationError("linear bound initialization requires nonnegative coefficients");
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        check_congruent(q_stars[i], q_stars[0], "linear initialization");
        check_congruent(q_mus[i], q_stars[0], "linear initialization");
    }

    const int n_states = q_stars[0].n_states;
    const int n_actions = q_stars[0].n_actions;
    BoundPair out;
    out.ub = QTable::zeros(n_states, n_actions);
    out.lb = QTable::zeros(n_states, n_actions);
    for (std::size_t idx = 0; idx < out.ub.values.size(); ++idx) {
        double ub = 0.0;
        double mu_total = 0.0;
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            ub += coeffs[i] * q_stars[i].values[idx];
            mu_total += coeffs[i] * q_mus[i].values[idx];
        }
        double lb = -kInf;
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            const double candidate =
                coeffs[i] * q_stars[i].values[idx] + mu_total - coeffs[i] * q_mus[i].values[idx];
            lb = std::max(lb, candidate);
        }
        out.ub.values[idx] = ub;
        out.lb.values[idx] = lb;
    }
    out.tag = "init:linear";
    return out;
}

BoundPair mqm_init_nonlinear(const std::vector<QTable>& q_star_abs, const CombinationSpec& spec) {
    if (spec.linear() || !spec.nonnegative_coeffs())
        throw ValidationError(
            "nonlinear initialization requires a monotone increasing positive combination");
    if (q_star_abs.empty() || q_star_abs.size() != spec.arity())
        throw ValidationError("nonlinear initialization needs one |R| value table per source");
    for (const QTable& q : q_star_abs) check_congruent(q, q_star_abs[0], "nonlinear initialization");

    BoundPair out;
    out.ub = QTable::zeros(q_star_abs[0].n_states, q_star_abs[0].n_actions);
    out.lb = out.ub;
    std::vector<double> values(q_star_abs.size());
    for (std::size_t idx = 0; idx < out.ub.values.size(); ++idx) {
        for (std::size_t i = 0; i < values.size(); ++i) values[i] = q_star_abs[i].values[idx];
        const double v = spec.evaluate(values);
        out.ub.values[idx] = v;
        out.lb.values[idx] = -v;
    }
    out.approximate = true;
    out.tag = "init:nonlinear";
    return out;
}

BoundPair apply_noise_to_init(BoundPair bounds, double n_min, double n_max, double gamma,
                              std::optional<int> t_max) {
    if (n_min > n_max) throw ValidationError("noise range requires n_min <= n_max");
    const double horizon = discounted_horizon(gamma, t_max);
    for (double& v : bounds.ub.values) v += n_max * horizon;
    for (double& v : bounds.lb.values) v += n_min * horizon;
    return bounds;
}

BoundPair mqm_iterate(const LiteModel& lite, const RewardTable& target, double gamma,
                      const BoundPair& init, const SolveConfig& cfg,
                      const std::optional<NoiseRange>& noise) {
    check_coverage(lite, target);
    if (init.ub.n_states != lite.n_states || init.ub.n_actions != lite.n_actions ||
        !init.ub.congruent(init.lb))
        throw ValidationError("bound initialization shape differs from the lite model");

    const double up_shift = noise ? noise->n_max : 0.0;
    const double lo_shift = noise ? noise->n_min : 0.0;

    IterationOutcome up = iterate_to_fixed_point(
        init.ub, cfg,
        [&](const QTable& q) {
            QTable next = clamped_sweep_upper(lite, target, gamma, q, up_shift);
#ifndef NDEBUG
            for (std::size_t i = 0; i < next.values.size(); ++i)
                assert(next.values[i] <= q.values[i]);
#endif
            return next;
        },
        "monotone upper bound iteration");
    IterationOutcome lo = iterate_to_fixed_point(
        init.lb, cfg,
        [&](const QTable& q) {
            QTable next = clamped_sweep_lower(lite, target, gamma, q, lo_shift);
#ifndef NDEBUG
            for (std::size_t i = 0; i < next.values.size(); ++i)
                assert(next.values[i] >= q.values[i]);
#endif
            return next;
        },
        "monotone lower bound iteration");

    BoundPair out;
    out.ub = std::move(up.q);
    out.lb = std::move(lo.q);
    out.iterations = std::max(up.sweeps, lo.sweeps);
    out.converged = true;
    out.residual = std::max(up.residual, lo.residual);
    out.approximate = init.approximate;
    out.tag = init.tag;
    return out;
}

double default_delta(double epsilon, double gamma) {
    if (epsilon <= 0.0) throw ValidationError("default delta requires epsilon > 0");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("default delta requires gamma in [0, 1)");
    return 2.0 * epsilon * gamma / (1.0 - gamma);
}

ActionMask prune_actions(const BoundPair& bounds, const PruneConfig& cfg) {
    if (cfg.delta < 0.0) throw ValidationError("pruning margin must be nonnegative");
    if (!bounds.ub.congruent(bounds.lb)) throw ValidationError("incongruent bound tables");

    const int n_states = bounds.ub.n_states;
    const int n_actions = bounds.ub.n_actions;
    ActionMask mask;
    mask.allowed.resize(static_cast<std::size_t>(n_states));
    for (int s = 0; s < n_states; ++s) {
        // best and runner-up lower bounds, so "some other action" excludes
        // the candidate itself
        int best_action = 0;
        double best_lb = -kInf;
        double second_lb = -kInf;
        for (int a = 0; a < n_actions; ++a) {
            const double lb = bounds.lb(s, a);
            if (lb > best_lb) {
                second_lb = best_lb;
                best_lb = lb;
                best_action = a;
            } else {
                second_lb = std::max(second_lb, lb);
            }
        }

        auto& allowed = mask.allowed[static_cast<std::size_t>(s)];
        for (int a = 0; a < n_actions; ++a) {
            const double rival = a == best_action ? second_lb : best_lb;
            const double margin = rival - bounds.ub(s, a);
            const bool pruned = cfg.delta > 0.0 ? margin >= cfg.delta : margin > 0.0;
            if (!pruned) allowed.push_back(a);
        }
        // Invalid (approximate) bounds can turn the test against every
        // action; keep the strongest one so the mask stays usable.
        if (allowed.empty()) allowed.push_back(best_action);
    }
    return mask;
}

PruningStats pruning_stats(const ActionMask& mask, const TabularMdp& mdp) {
    PruningStats stats;
    stats.per_state_remaining.resize(static_cast<std::size_t>(mdp.n_states), 0);
    long possible = 0;
    long remaining = 0;
    for (int s = 0; s < mdp.n_states; ++s) {
        const int kept = static_cast<int>(mask.allowed[static_cast<std::size_t>(s)].size());
        stats.per_state_remaining[static_cast<std::size_t>(s)] = kept;
        if (mdp.is_terminal(s)) continue;
        possible += mdp.n_actions;
        remaining += kept;
    }
    stats.pruned_count = static_cast<int>(possible - remaining);
    stats.pruned_fraction = possible > 0 ? static_cast<double>(stats.pruned_count) /
                                               static_cast<double>(possible)
                                         : 0.0;
    return stats;
}

} // namespace qm
