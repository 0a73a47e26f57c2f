#include "qmanip/domains.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <map>
#include <utility>

#include "qmanip/errors.hpp"

namespace qm {

namespace {

template <typename Fn>
RewardTable make_rewards(const TabularMdp& mdp, Fn reward_of) {
    RewardTable rt;
    rt.n_states = mdp.n_states;
    rt.n_actions = mdp.n_actions;
    rt.rows.resize(mdp.transitions.size());
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            const auto& trow = mdp.row(s, a);
            auto& rrow = rt.rows[mdp.row_index(s, a)];
            rrow.reserve(trow.size());
            for (const TransitionEntry& e : trow)
                rrow.push_back({e.next_state, reward_of(s, a, e.next_state)});
        }
    }
    return rt;
}

std::vector<TransitionEntry> merge_outcomes(const std::vector<std::pair<int, double>>& outcomes) {
    std::map<int, double> acc;
    for (const auto& [sp, p] : outcomes) acc[sp] += p;
    std::vector<TransitionEntry> row;
    row.reserve(acc.size());
    for (const auto& [sp, p] : acc) row.push_back({sp, p});
    return row;
}

struct Grid {
    int rows = 0;
    int cols = 0;

    int id(int r, int c) const { return r * cols + c; }
    int row_of(int s) const { return s / cols; }
    int col_of(int s) const { return s % cols; }
    bool inside(int r, int c) const { return r >= 0 && r < rows && c >= 0 && c < cols; }

    // Single-cell move; off-grid attempts keep the agent in place.
    int step(int s, int dr, int dc) const {
        const int r = row_of(s) + dr;
        const int c = col_of(s) + dc;
        return inside(r, c) ? id(r, c) : s;
    }
};

constexpr double kIntendedProb = 0.8;
constexpr double kSlipProb = 0.1;

int sign(int v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

// Four-move gridworld with lateral slip: the intended step with probability
// 0.8, one step along each perpendicular direction with 0.1.
TabularMdp build_four_move_grid(const Grid& grid, const std::vector<int>& terminals, int start,
                                double gamma) {
    static constexpr int kMoves[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};  // up down left right

    TabularMdp mdp;
    mdp.n_states = grid.rows * grid.cols;
    mdp.n_actions = 4;
    mdp.gamma = gamma;
    mdp.initial_state = start;
    mdp.terminal.assign(static_cast<std::size_t>(mdp.n_states), 0);
    for (int t : terminals) mdp.terminal[static_cast<std::size_t>(t)] = 1;
    mdp.transitions.resize(static_cast<std::size_t>(mdp.n_states) * 4);

    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.is_terminal(s)) continue;
        for (int a = 0; a < 4; ++a) {
            const int dr = kMoves[a][0];
            const int dc = kMoves[a][1];
            const int intended = grid.step(s, dr, dc);
            const int lat1 = grid.step(s, dc, -dr);
            const int lat2 = grid.step(s, -dc, dr);
            mdp.transitions[mdp.row_index(s, a)] = merge_outcomes(
                {{intended, kIntendedProb}, {lat1, kSlipProb}, {lat2, kSlipProb}});
        }
    }
    return mdp;
}

double exponential_draw(Rng& rng) {
    const double e = -std::log1p(-rng.uniform01());
    return std::max(e, 1e-12);
}

} // namespace

TabularMdp randomize_sbf(const TabularMdp& mdp, int sbf, Rng& rng) {
    if (sbf < 1) throw ValidationError("sbf must be at least 1");
    TabularMdp out = mdp;
    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.is_terminal(s)) continue;
        for (int a = 0; a < mdp.n_actions; ++a) {
            const auto& row = mdp.row(s, a);
            const int support = static_cast<int>(row.size());
            const int k = rng.uniform_int(1, std::min(sbf, support));

            // modal successor: highest probability, lowest state on ties
            int modal = 0;
            for (int i = 1; i < support; ++i)
                if (row[static_cast<std::size_t>(i)].prob > row[static_cast<std::size_t>(modal)].prob)
                    modal = i;

            if (k >= support) continue;  // row kept whole

            std::vector<int> rest;
            rest.reserve(static_cast<std::size_t>(support) - 1);
            for (int i = 0; i < support; ++i)
                if (i != modal) rest.push_back(i);
            std::vector<int> extra = rng.sample_without_replacement(std::move(rest), k - 1);

            std::vector<int> kept;
            kept.reserve(static_cast<std::size_t>(k));
            kept.push_back(modal);
            kept.insert(kept.end(), extra.begin(), extra.end());
            std::sort(kept.begin(), kept.end());

            double mass = 0.0;
            for (int i : kept) mass += row[static_cast<std::size_t>(i)].prob;
            std::vector<TransitionEntry> reduced;
            reduced.reserve(kept.size());
            for (int i : kept)
                reduced.push_back({row[static_cast<std::size_t>(i)].next_state,
                                   row[static_cast<std::size_t>(i)].prob / mass});
            out.transitions[out.row_index(s, a)] = std::move(reduced);
        }
    }
    return out;
}

RewardTable restrict_rewards(const RewardTable& rewards, const TabularMdp& reduced) {
    RewardTable out;
    out.n_states = reduced.n_states;
    out.n_actions = reduced.n_actions;
    out.rows.resize(reduced.transitions.size());
    for (int s = 0; s < reduced.n_states; ++s) {
        for (int a = 0; a < reduced.n_actions; ++a) {
            const auto& trow = reduced.row(s, a);
            auto& rrow = out.rows[reduced.row_index(s, a)];
            rrow.reserve(trow.size());
            for (const TransitionEntry& e : trow)
                rrow.push_back({e.next_state, rewards.at(s, a, e.next_state)});
        }
    }
    return out;
}

DomainBundle dollar_euro(int sbf, Rng& rng) {
    const Grid grid{5, 9};
    const int start = grid.id(4, 2);
    const int dollar = grid.id(0, 0);
    const int euro = grid.id(0, 8);
    const int both = grid.id(0, 3);

    TabularMdp base = build_four_move_grid(grid, {dollar, euro, both}, start, 0.95);
    DomainBundle bundle;
    bundle.name = "dollar_euro";
    bundle.mdp = randomize_sbf(base, sbf, rng);
    bundle.source_rewards.push_back(make_rewards(bundle.mdp, [&](int, int, int sp) {
        return sp == dollar ? 1.0 : (sp == both ? 0.6 : 0.0);
    }));
    bundle.source_rewards.push_back(make_rewards(bundle.mdp, [&](int, int, int sp) {
        return sp == euro ? 1.0 : (sp == both ? 0.6 : 0.0);
    }));
    bundle.combination = CombinationSpec{LinearCombination{{1.0, 1.0}}, {}};
    bundle.layout = GridLayout{grid.rows, grid.cols};
    bundle.labels.resize(static_cast<std::size_t>(bundle.mdp.n_states));
    for (int s = 0; s < bundle.mdp.n_states; ++s) {
        std::string label = "r" + std::to_string(grid.row_of(s)) + "c" + std::to_string(grid.col_of(s));
        if (s == start) label += ":start";
        if (s == dollar) label += ":dollar";
        if (s == euro) label += ":euro";
        if (s == both) label += ":both";
        bundle.labels[static_cast<std::size_t>(s)] = std::move(label);
    }
    return bundle;
}

DomainBundle frozen_lake(int sbf, Rng& rng) {
    const Grid grid{6, 6};
    const int start = grid.id(0, 0);
    const int goal = grid.id(5, 5);
    const std::vector<int> holes_a = {grid.id(1, 3), grid.id(3, 1)};
    const std::vector<int> holes_b = {grid.id(2, 4), grid.id(4, 2)};

    std::vector<int> terminals = {goal};
    terminals.insert(terminals.end(), holes_a.begin(), holes_a.end());
    terminals.insert(terminals.end(), holes_b.begin(), holes_b.end());

    const auto in = [](const std::vector<int>& set, int s) {
        return std::find(set.begin(), set.end(), s) != set.end();
    };

    TabularMdp base = build_four_move_grid(grid, terminals, start, 0.95);
    DomainBundle bundle;
    bundle.name = "frozen_lake";
    bundle.mdp = randomize_sbf(base, sbf, rng);
    bundle.source_rewards.push_back(make_rewards(bundle.mdp, [&](int, int, int sp) {
        if (in(holes_a, sp)) return 1.0;
        if (in(holes_b, sp)) return -1.0;
        return sp == goal ? 0.5 : 0.0;
    }));
    bundle.source_rewards.push_back(make_rewards(bundle.mdp, [&](int, int, int sp) {
        if (in(holes_b, sp)) return 1.0;
        if (in(holes_a, sp)) return -1.0;
        return sp == goal ? 0.5 : 0.0;
    }));
    bundle.combination = CombinationSpec{LinearCombination{{1.0, 1.0}}, {}};
    bundle.layout = GridLayout{grid.rows, grid.cols};
    bundle.labels.resize(static_cast<std::size_t>(bundle.mdp.n_states));
    for (int s = 0; s < bundle.mdp.n_states; ++s) {
        std::string label = "r" + std::to_string(grid.row_of(s)) + "c" + std::to_string(grid.col_of(s));
        if (s == start) label += ":start";
        if (s == goal) label += ":goal";
        if (in(holes_a, s)) label += ":holeA";
        if (in(holes_b, s)) label += ":holeB";
        bundle.labels[static_cast<std::size_t>(s)] = std::move(label);
    }
    return bundle;
}

DomainBundle racetrack(int sbf, Rng& rng) {
    const Grid grid{7, 7};
    const int start = grid.id(3, 0);
    const int goal = grid.id(3, 6);
    // wall on column 3 with gaps at rows 1 and 5
    const std::vector<int> obstacles = {grid.id(0, 3), grid.id(2, 3), grid.id(3, 3),
                                        grid.id(4, 3), grid.id(6, 3)};
    const auto is_obstacle = [&](int s) {
        return std::find(obstacles.begin(), obstacles.end(), s) != obstacles.end();
    };

    // forward x1/x2/x3, turn up/down, and the two forward diagonals
    static constexpr int kActions[7][2] = {{0, 1}, {0, 2}, {0, 3}, {-1, 0},
                                           {-1, 1}, {1, 0}, {1, 1}};

    // Displacements unfold one cell at a time: driving off the track keeps
    // the agent in place, entering an obstacle or the goal stops the move.
    const auto drive = [&](int s, int dr, int dc) {
        int cur = s;
        const bool multi = dr == 0 && dc != 0;
        const int unit_steps = multi ? std::abs(dc) : 1;
        const int step_r = multi ? 0 : dr;
        const int step_c = multi ? sign(dc) : dc;
        for (int i = 0; i < unit_steps; ++i) {
            const int r = grid.row_of(cur) + step_r;
            const int c = grid.col_of(cur) + step_c;
            if (!grid.inside(r, c)) break;
            cur = grid.id(r, c);
            if (is_obstacle(cur) || cur == goal) break;
        }
        return cur;
    };

    TabularMdp mdp;
    mdp.n_states = grid.rows * grid.cols;
    mdp.n_actions = 7;
    mdp.gamma = 0.9;
    mdp.initial_state = start;
    mdp.terminal.assign(static_cast<std::size_t>(mdp.n_states), 0);
    for (int t : obstacles) mdp.terminal[static_cast<std::size_t>(t)] = 1;
    mdp.terminal[static_cast<std::size_t>(goal)] = 1;
    mdp.transitions.resize(static_cast<std::size_t>(mdp.n_states) * 7);

    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.is_terminal(s)) continue;
        for (int a = 0; a < 7; ++a) {
            const int dr = kActions[a][0];
            const int dc = kActions[a][1];
            const int intended = drive(s, dr, dc);
            // slip sideways by one cell: the sign-normalized rotations of
            // the commanded displacement
            const int lat1 = drive(s, sign(dc), sign(-dr));
            const int lat2 = drive(s, sign(-dc), sign(dr));
            mdp.transitions[mdp.row_index(s, a)] = merge_outcomes(
                {{intended, kIntendedProb}, {lat1, kSlipProb}, {lat2, kSlipProb}});
        }
    }

    DomainBundle bundle;
    bundle.name = "racetrack";
    bundle.mdp = randomize_sbf(mdp, sbf, rng);
    // avoid obstacles: collision penalty plus a living bonus on actual moves
    bundle.source_rewards.push_back(make_rewards(bundle.mdp, [&](int s, int, int sp) {
        return (is_obstacle(sp) ? -0.5 : 0.0) + (sp != s ? 0.2 : 0.0);
    }));
    // terminate: goal payout, living cost on moves, stalling at the start
    bundle.source_rewards.push_back(make_rewards(bundle.mdp, [&](int s, int, int sp) {
        double r = sp == goal ? 2.0 : 0.0;
        if (s == start && sp == start)
            r += -4.0;
        else if (sp != s)
            r += -0.3;
        return r;
    }));
    // stay put: reward stalling at the start
    bundle.source_rewards.push_back(make_rewards(bundle.mdp, [&](int s, int, int sp) {
        return s == start && sp == start ? 3.0 : 0.0;
    }));
    bundle.combination = CombinationSpec{LinearCombination{{1.0, 1.0, 1.0}}, {}};
    bundle.layout = GridLayout{grid.rows, grid.cols};
    bundle.labels.resize(static_cast<std::size_t>(bundle.mdp.n_states));
    for (int s = 0; s < bundle.mdp.n_states; ++s) {
        std::string label = "r" + std::to_string(grid.row_of(s)) + "c" + std::to_string(grid.col_of(s));
        if (s == start) label += ":start";
        if (s == goal) label += ":goal";
        if (is_obstacle(s)) label += ":wall";
        bundle.labels[static_cast<std::size_t>(s)] = std::move(label);
    }
    return bundle;
}

DomainBundle autogen(int sbf, Rng& rng, const AutogenParams& params) {
    if (params.n_states < params.n_terminals + 1)
        throw ValidationError("autogen needs more states than terminals");
    if (params.n_actions < 1 || params.n_terminals < 1)
        throw ValidationError("autogen needs positive action and terminal counts");
    if (params.initial_support < 1 || params.initial_support > params.n_states)
        throw ValidationError("autogen initial support out of range");
    if (params.combination.arity() != 2)
        throw ValidationError("autogen defines exactly two source reward functions");

    std::vector<int> all(static_cast<std::size_t>(params.n_states));
    for (int s = 0; s < params.n_states; ++s) all[static_cast<std::size_t>(s)] = s;

    std::vector<int> terminals = rng.sample_without_replacement(all, params.n_terminals);
    std::sort(terminals.begin(), terminals.end());

    std::vector<int> nonterminal;
    for (int s = 0; s < params.n_states; ++s)
        if (std::find(terminals.begin(), terminals.end(), s) == terminals.end())
            nonterminal.push_back(s);
    const int initial =
        nonterminal[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(nonterminal.size()) - 1))];

    TabularMdp mdp;
    mdp.n_states = params.n_states;
    mdp.n_actions = params.n_actions;
    mdp.gamma = params.gamma;
    mdp.initial_state = initial;
    mdp.terminal.assign(static_cast<std::size_t>(params.n_states), 0);
    for (int t : terminals) mdp.terminal[static_cast<std::size_t>(t)] = 1;
    mdp.transitions.resize(static_cast<std::size_t>(params.n_states) * params.n_actions);

    for (int s = 0; s < params.n_states; ++s) {
        if (mdp.is_terminal(s)) continue;
        for (int a = 0; a < params.n_actions; ++a) {
            std::vector<int> support = rng.sample_without_replacement(all, params.initial_support);
            std::sort(support.begin(), support.end());
            std::vector<double> weight(support.size());
            double total = 0.0;
            for (double& w : weight) {
                w = exponential_draw(rng);
                total += w;
            }
            auto& row = mdp.transitions[mdp.row_index(s, a)];
            row.reserve(support.size());
            for (std::size_t i = 0; i < support.size(); ++i)
                row.push_back({support[i], weight[i] / total});
        }
    }

    DomainBundle bundle;
    bundle.name = "autogen";
    bundle.mdp = randomize_sbf(mdp, sbf, rng);

    const int t0 = terminals[0];
    const int t1 = terminals[1 % terminals.size()];
    const int t2 = terminals[2 % terminals.size()];
    bundle.source_rewards.push_back(make_rewards(bundle.mdp, [&](int, int, int sp) {
        if (sp == t0) return 1.0;
        if (sp == t1) return -1.0;
        return sp == t2 ? 0.6 : 0.0;
    }));
    bundle.source_rewards.push_back(make_rewards(bundle.mdp, [&](int, int, int sp) {
        if (sp == t0) return -1.0;
        if (sp == t1) return 1.0;
        return sp == t2 ? 0.6 : 0.0;
    }));
    bundle.combination = params.combination;
    bundle.labels.resize(static_cast<std::size_t>(bundle.mdp.n_states));
    for (int s = 0; s < bundle.mdp.n_states; ++s) {
        std::string label = "s" + std::to_string(s);
        if (s == initial) label += ":start";
        if (s == t0) label += ":terminal(+1,-1)";
        if (s == t1) label += ":terminal(-1,+1)";
        if (s == t2) label += ":terminal(+0.6,+0.6)";
        bundle.labels[static_cast<std::size_t>(s)] = std::move(label);
    }
    return bundle;
}

DomainBundle make_domain(const std::string& name, int sbf, Rng& rng,
                         const std::optional<CombinationSpec>& combination) {
    if (name == "autogen") {
        AutogenParams params;
        if (combination) params.combination = *combination;
        return autogen(sbf, rng, params);
    }
    if (combination)
        throw ValidationError("combination override is only supported for autogen");
    if (name == "dollar_euro") return dollar_euro(sbf, rng);
    if (name == "frozen_lake") return frozen_lake(sbf, rng);
    if (name == "racetrack") return racetrack(sbf, rng);
    throw ValidationError("unknown domain: " + name);
}

std::vector<int> domain_sbf_levels(const std::string& name) {
    // gridworld slip rows hold at most three successors
    if (name == "dollar_euro" || name == "frozen_lake" || name == "racetrack") return {1, 2, 3};
    if (name == "autogen") return {1, 5, 9};
    throw ValidationError("unknown domain: " + name);
}

std::vector<std::string> domain_names() {
    return {"dollar_euro", "frozen_lake", "racetrack", "autogen"};
}

} // namespace qm
