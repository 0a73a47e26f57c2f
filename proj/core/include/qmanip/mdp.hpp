#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qmanip/rng.hpp"

namespace qm {

struct TransitionEntry {
    int next_state = 0;
    double prob = 0.0;
};

// Finite MDP with sparse transition rows, indexed by s * n_actions + a.
// Terminal states own no outgoing rows and contribute zero future value.
// Q tables may still carry nonzero entries for terminal states; every bound
// iteration leaves those rows untouched.
struct TabularMdp {
    int n_states = 0;
    int n_actions = 0;
    double gamma = 0.0;
    int initial_state = 0;
    std::vector<char> terminal;                             // flag per state
    std::vector<std::vector<TransitionEntry>> transitions;  // row per (s, a)

    bool is_terminal(int s) const { return terminal[static_cast<std::size_t>(s)] != 0; }

    std::size_t row_index(int s, int a) const {
        return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions) +
               static_cast<std::size_t>(a);
    }

    const std::vector<TransitionEntry>& row(int s, int a) const {
        return transitions[row_index(s, a)];
    }

    int nonterminal_count() const;
};

struct RewardEntry {
    int next_state = 0;
    double value = 0.0;
};

// R(s, a, s') defined exactly on the transition support of the companion
// TabularMdp, stored in the same row order. Reads off the support are
// errors, not zeros.
struct RewardTable {
    int n_states = 0;
    int n_actions = 0;
    std::vector<std::vector<RewardEntry>> rows;

    std::size_t row_index(int s, int a) const {
        return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions) +
               static_cast<std::size_t>(a);
    }

    const std::vector<RewardEntry>& row(int s, int a) const { return rows[row_index(s, a)]; }

    double at(int s, int a, int next_state) const;  // throws if off support

    bool empty() const;
    double min_value() const;
    double max_value() const;

    RewardTable negated() const;
    RewardTable absolute() const;
};

// Dense |S| x |A| table of action values.
struct QTable {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> values;

    static QTable zeros(int n_states, int n_actions);
    static QTable constant(int n_states, int n_actions, double value);

    double& operator()(int s, int a) {
        return values[static_cast<std::size_t>(s) * n_actions + a];
    }
    double operator()(int s, int a) const {
        return values[static_cast<std::size_t>(s) * n_actions + a];
    }

    double row_max(int s) const;
    double row_max(int s, const std::vector<int>& allowed) const;
    // Ties break toward the lowest action index.
    int row_argmax(int s) const;
    int row_argmax(int s, const std::vector<int>& allowed) const;

    bool all_finite() const;
    bool congruent(const QTable& other) const {
        return n_states == other.n_states && n_actions == other.n_actions;
    }
};

double sup_norm_diff(const QTable& a, const QTable& b);

// 1-step reachable successor sets: the transition support without
// probabilities. Terminal states have empty rows.
struct LiteModel {
    int n_states = 0;
    int n_actions = 0;
    std::vector<std::vector<int>> reachable;  // row per (s, a)

    std::size_t row_index(int s, int a) const {
        return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions) +
               static_cast<std::size_t>(a);
    }

    const std::vector<int>& row(int s, int a) const { return reachable[row_index(s, a)]; }

    // Non-terminal rows are never empty, so the first row decides.
    bool is_terminal(int s) const { return row(s, 0).empty(); }
};

// Allowed action set per state, ascending action ids.
struct ActionMask {
    std::vector<std::vector<int>> allowed;

    static ActionMask full(int n_states, int n_actions);
    bool is_allowed(int s, int a) const;
};

struct Policy {
    std::vector<int> action;  // per state; entries for terminal states are unused
};

// Report-style checks of every TabularMdp / RewardTable invariant.
// An empty report means the inputs are valid.
std::vector<std::string> validate(const TabularMdp& mdp);
std::vector<std::string> validate(const TabularMdp& mdp, const RewardTable& rewards);

LiteModel extract_lite_model(const TabularMdp& mdp);

// Stochastic branching factor: the largest successor-support size over all
// non-terminal (s, a). Throws if every state is terminal.
int sbf(const TabularMdp& mdp);

struct StepResult {
    int next_state = 0;
    double reward = 0.0;
    bool done = false;
};

// Draws s' from T(.|s,a) and returns R(s,a,s'). Throws for terminal s.
StepResult sample_step(const TabularMdp& mdp, const RewardTable& rewards, int s, int a, Rng& rng);

} // namespace qm
