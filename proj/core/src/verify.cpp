#include "qmanip/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "qmanip/baselines.hpp"
#include "qmanip/bounds.hpp"
#include "qmanip/errors.hpp"

namespace qm {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// Direct fixed-point iteration of the worst-policy operator; the production
// path computes the same table as -Q*(-R), so this is an independent route.
QTable min_bellman_iterate(const TabularMdp& mdp, const RewardTable& rewards,
                           const SolveConfig& cfg) {
    QTable q = QTable::zeros(mdp.n_states, mdp.n_actions);
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        QTable next = q;
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
                        for (int ap = 1; ap < mdp.n_actions; ++ap)
                            boot = std::min(boot, q(sp, ap));
                    }
                    acc += trow[k].prob * (rrow[k].value + mdp.gamma * boot);
                }
                next(s, a) = acc;
            }
        }
        const double residual = sup_norm_diff(next, q);
        q = std::move(next);
        if (residual <= cfg.epsilon) break;
    }
    return q;
}

QTable random_table(int n_states, int n_actions, Rng& rng, double lo, double hi) {
    QTable q = QTable::zeros(n_states, n_actions);
    for (double& v : q.values) v = rng.uniform(lo, hi);
    return q;
}

std::vector<std::vector<int>> pruned_sets(const ActionMask& mask, int n_actions) {
    std::vector<std::vector<int>> pruned(mask.allowed.size());
    for (std::size_t s = 0; s < mask.allowed.size(); ++s)
        for (int a = 0; a < n_actions; ++a)
            if (!mask.is_allowed(static_cast<int>(s), a)) pruned[s].push_back(a);
    return pruned;
}

} // namespace

std::vector<PropertyResult> verify_bundle(const DomainBundle& bundle, const SolveConfig& cfg,
                                          std::uint64_t seed) {
    std::vector<PropertyResult> out;
    const auto record = [&](const std::string& name, bool passed, const std::string& detail) {
        out.push_back({name, passed, detail});
    };

    const TabularMdp& mdp = bundle.mdp;
    const double gamma = mdp.gamma;
    const RewardTable target = combine_rewards(bundle.source_rewards, bundle.combination);
    const LiteModel lite = extract_lite_model(mdp);
    const double slack = 1e-12;

    {
        const auto report = validate(mdp, target);
        record("bundle-validates", report.empty(), report.empty() ? "" : report.front());
    }

    // worst-policy table equals the sign-flipped optimum of the negated reward
    {
        double worst = 0.0;
        for (const RewardTable& src : bundle.source_rewards) {
            const QTable direct = min_bellman_iterate(mdp, src, cfg);
            const QTable via_negation = q_mu(mdp, src, cfg);
            worst = std::max(worst, sup_norm_diff(direct, via_negation));
        }
        const double tol = 4.0 * cfg.epsilon * gamma / (1.0 - gamma) + 1e-9;
        record("min-value-duality", worst <= tol, "max gap " + num(worst));
    }

    // per-sweep contraction of the optimistic/pessimistic operators
    {
        bool ok = true;
        double worst = 0.0;
        for (const bool upper : {true, false}) {
            QTable q = QTable::zeros(mdp.n_states, mdp.n_actions);
            double prev_delta = -1.0;
            for (int sweep = 0; sweep < 10000; ++sweep) {
                QTable next = upper ? bound_sweep_upper(lite, target, gamma, q)
                                    : bound_sweep_lower(lite, target, gamma, q);
                const double delta = sup_norm_diff(next, q);
                if (prev_delta >= 0.0 && delta > gamma * prev_delta + slack) {
                    ok = false;
                    worst = std::max(worst, delta - gamma * prev_delta);
                }
                q = std::move(next);
                prev_delta = delta;
                if (delta <= cfg.epsilon) break;
            }
        }
        record("sweep-contraction", ok, ok ? "" : "excess " + num(worst));
    }

    // both operators reach one fixed point from different starts
    {
        Rng rng(derive_seed(seed, 1));
        const BoundPair from_zero = qm_iterate(lite, target, gamma, cfg);
        QTable q = random_table(mdp.n_states, mdp.n_actions, rng, -5.0, 5.0);
        for (int s = 0; s < mdp.n_states; ++s)
            if (mdp.is_terminal(s))
                for (int a = 0; a < mdp.n_actions; ++a) q(s, a) = 0.0;
        QTable ub = q;
        QTable lb = q;
        for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
            QTable next = bound_sweep_upper(lite, target, gamma, ub);
            const double delta = sup_norm_diff(next, ub);
            ub = std::move(next);
            if (delta <= cfg.epsilon) break;
        }
        for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
            QTable next = bound_sweep_lower(lite, target, gamma, lb);
            const double delta = sup_norm_diff(next, lb);
            lb = std::move(next);
            if (delta <= cfg.epsilon) break;
        }
        const double gap =
            std::max(sup_norm_diff(ub, from_zero.ub), sup_norm_diff(lb, from_zero.lb));
        const double tol = 4.0 * cfg.epsilon * gamma / (1.0 - gamma) + 1e-9;
        record("fixed-point-uniqueness", gap <= tol, "start gap " + num(gap));
    }

    // lower iterate <= value iterate <= upper iterate from a common start
    {
        QTable vi_q = QTable::zeros(mdp.n_states, mdp.n_actions);
        QTable ub = vi_q;
        QTable lb = vi_q;
        bool ok = true;
        for (int sweep = 0; sweep < 10000; ++sweep) {
            const QTable vi_next = vi_sweep(mdp, target, vi_q);
            const QTable ub_next = bound_sweep_upper(lite, target, gamma, ub);
            const QTable lb_next = bound_sweep_lower(lite, target, gamma, lb);
            for (std::size_t i = 0; i < vi_next.values.size(); ++i)
                if (lb_next.values[i] > vi_next.values[i] + slack ||
                    vi_next.values[i] > ub_next.values[i] + slack)
                    ok = false;
            const double residual = std::max({sup_norm_diff(vi_next, vi_q),
                                              sup_norm_diff(ub_next, ub),
                                              sup_norm_diff(lb_next, lb)});
            vi_q = vi_next;
            ub = ub_next;
            lb = lb_next;
            if (residual <= cfg.epsilon) break;
        }
        record("bound-ordering", ok, "");
    }

    std::vector<SourceBehavior> sources;
    for (const RewardTable& src : bundle.source_rewards)
        sources.push_back(make_source_behavior(mdp, src, cfg));

    const auto initial_bounds = [&]() {
        if (bundle.combination.linear()) {
            std::vector<QTable> q_stars, q_mus;
            for (const SourceBehavior& src : sources) {
                q_stars.push_back(src.q_star);
                q_mus.push_back(src.q_mu);
            }
            return mqm_init_linear(q_stars, q_mus, bundle.combination.coeffs());
        }
        std::vector<QTable> q_abs;
        for (const SourceBehavior& src : sources) q_abs.push_back(src.q_star_abs);
        return mqm_init_nonlinear(q_abs, bundle.combination);
    };

    // clamped sweeps may only tighten, and their deltas contract
    {
        const BoundPair init = initial_bounds();
        bool monotone = true;
        bool contracts = true;
        for (const bool upper : {true, false}) {
            QTable q = upper ? init.ub : init.lb;
            double prev_delta = -1.0;
            for (int sweep = 0; sweep < 10000; ++sweep) {
                QTable next = upper ? clamped_sweep_upper(lite, target, gamma, q)
                                    : clamped_sweep_lower(lite, target, gamma, q);
                for (std::size_t i = 0; i < next.values.size(); ++i) {
                    if (upper && next.values[i] > q.values[i] + slack) monotone = false;
                    if (!upper && next.values[i] < q.values[i] - slack) monotone = false;
                }
                const double delta = sup_norm_diff(next, q);
                if (prev_delta >= 0.0 && delta > gamma * prev_delta + slack) contracts = false;
                q = std::move(next);
                prev_delta = delta;
                if (delta <= cfg.epsilon) break;
            }
        }
        record("clamped-monotonicity", monotone, "");
        record("clamped-trajectory-contraction", contracts, "");
    }

    // the clamped operators never expand distances between arbitrary tables
    {
        Rng rng(derive_seed(seed, 2));
        bool ok = true;
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const QTable a = random_table(mdp.n_states, mdp.n_actions, rng, -5.0, 5.0);
            const QTable b = random_table(mdp.n_states, mdp.n_actions, rng, -5.0, 5.0);
            const double before = sup_norm_diff(a, b);
            const double after_up = sup_norm_diff(clamped_sweep_upper(lite, target, gamma, a),
                                                  clamped_sweep_upper(lite, target, gamma, b));
            const double after_lo = sup_norm_diff(clamped_sweep_lower(lite, target, gamma, a),
                                                  clamped_sweep_lower(lite, target, gamma, b));
            const double after = std::max(after_up, after_lo);
            if (after > before + slack) {
                ok = false;
                worst = std::max(worst, after - before);
            }
        }
        record("non-expansive-operator", ok, ok ? "" : "excess " + num(worst));
    }

    const QTable oracle_q = value_iteration(mdp, target, cfg);
    const double vi_tol = 2.0 * cfg.epsilon / (1.0 - gamma);

    // initialization must bracket the target optimum (guaranteed for linear
    // combinations only)
    {
        const BoundPair init = initial_bounds();
        if (init.approximate) {
            record("init-brackets-oracle", true, "skipped: approximate initialization");
        } else {
            double worst = 0.0;
            for (std::size_t i = 0; i < oracle_q.values.size(); ++i) {
                worst = std::max(worst, init.lb.values[i] - oracle_q.values[i]);
                worst = std::max(worst, oracle_q.values[i] - init.ub.values[i]);
            }
            const double tol = 4.0 * cfg.epsilon * gamma / (1.0 - gamma) + 1e-9;
            record("init-brackets-oracle", worst <= tol, "max overshoot " + num(worst));
        }
    }

    // pruning keeps an optimal action everywhere and leaves values intact
    {
        const BoundPair init = initial_bounds();
        const BoundPair bounds = mqm_iterate(lite, target, gamma, init, cfg);
        const ActionMask mask =
            prune_actions(bounds, PruneConfig{default_delta(cfg.epsilon, gamma)});
        if (bounds.approximate) {
            record("pruning-preserves-optimal", true, "skipped: approximate bounds");
        } else {
            const QTable masked_q = value_iteration(mdp, target, cfg, &mask);
            const double gap = sup_norm_diff(masked_q, oracle_q);
            bool retains = true;
            for (int s = 0; s < mdp.n_states && retains; ++s) {
                if (mdp.is_terminal(s)) continue;
                const double best = oracle_q.row_max(s);
                bool found = false;
                for (int a : mask.allowed[static_cast<std::size_t>(s)])
                    if (oracle_q(s, a) >= best - vi_tol) found = true;
                retains = found;
            }
            record("pruning-preserves-optimal", gap <= vi_tol && retains,
                   "value gap " + num(gap));
        }

        // plain-operator pruning can only be a subset of the clamped result
        const BoundPair plain = qm_iterate(lite, target, gamma, cfg);
        const ActionMask plain_mask =
            prune_actions(plain, PruneConfig{default_delta(cfg.epsilon, gamma)});
        const auto pruned_plain = pruned_sets(plain_mask, mdp.n_actions);
        const auto pruned_clamped = pruned_sets(mask, mdp.n_actions);
        bool subset = true;
        for (std::size_t s = 0; s < pruned_plain.size(); ++s)
            for (int a : pruned_plain[s])
                if (std::find(pruned_clamped[s].begin(), pruned_clamped[s].end(), a) ==
                    pruned_clamped[s].end())
                    subset = false;
        record("plain-pruning-subset-of-clamped", subset, "");
    }

    // wider noise ranges can only widen bounds and shrink the pruned set
    {
        const BoundPair init = initial_bounds();
        const double levels[2] = {0.05, 0.1};
        BoundPair narrow;
        BoundPair wide;
        for (int i = 0; i < 2; ++i) {
            const NoiseRange range{-levels[i], levels[i]};
            BoundPair shifted =
                apply_noise_to_init(init, range.n_min, range.n_max, gamma, std::nullopt);
            BoundPair iterated = mqm_iterate(lite, target, gamma, shifted, cfg, range);
            (i == 0 ? narrow : wide) = std::move(iterated);
        }
        bool widens = true;
        for (std::size_t i = 0; i < narrow.ub.values.size(); ++i)
            if (wide.ub.values[i] < narrow.ub.values[i] - slack ||
                wide.lb.values[i] > narrow.lb.values[i] + slack)
                widens = false;
        const double delta = default_delta(cfg.epsilon, gamma);
        const auto pruned_narrow = pruned_sets(prune_actions(narrow, PruneConfig{delta}),
                                               mdp.n_actions);
        const auto pruned_wide = pruned_sets(prune_actions(wide, PruneConfig{delta}),
                                             mdp.n_actions);
        bool subset = true;
        for (std::size_t s = 0; s < pruned_wide.size(); ++s)
            for (int a : pruned_wide[s])
                if (std::find(pruned_narrow[s].begin(), pruned_narrow[s].end(), a) ==
                    pruned_narrow[s].end())
                    subset = false;
        record("noise-widens-bounds", widens && subset, "");
    }

    return out;
}

} // namespace qm
