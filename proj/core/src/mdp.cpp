#include "qmanip/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "qmanip/errors.hpp"

namespace qm {

namespace {

std::string pair_str(int s, int a) {
    return "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
}

} // namespace

int TabularMdp::nonterminal_count() const {
    int count = 0;
    for (int s = 0; s < n_states; ++s)
        if (!is_terminal(s)) ++count;
    return count;
}

double RewardTable::at(int s, int a, int next_state) const {
    for (const RewardEntry& e : row(s, a))
        if (e.next_state == next_state) return e.value;
    throw ValidationError("reward read off the transition support at (s=" + std::to_string(s) +
                          ", a=" + std::to_string(a) + ", s'=" + std::to_string(next_state) + ")");
}

bool RewardTable::empty() const {
    for (const auto& row : rows)
        if (!row.empty()) return false;
    return true;
}

double RewardTable::min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& row : rows)
        for (const RewardEntry& e : row) m = std::min(m, e.value);
    if (std::isinf(m)) throw ValidationError("reward table has no entries");
    return m;
}

double RewardTable::max_value() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& row : rows)
        for (const RewardEntry& e : row) m = std::max(m, e.value);
    if (std::isinf(m)) throw ValidationError("reward table has no entries");
    return m;
}

RewardTable RewardTable::negated() const {
    RewardTable out = *this;
    for (auto& row : out.rows)
        for (RewardEntry& e : row) e.value = -e.value;
    return out;
}

RewardTable RewardTable::absolute() const {
    RewardTable out = *this;
    for (auto& row : out.rows)
        for (RewardEntry& e : row) e.value = std::abs(e.value);
    return out;
}

QTable QTable::zeros(int n_states, int n_actions) {
    return constant(n_states, n_actions, 0.0);
}

QTable QTable::constant(int n_states, int n_actions, double value) {
    QTable q;
    q.n_states = n_states;
    q.n_actions = n_actions;
    q.values.assign(static_cast<std::size_t>(n_states) * n_actions, value);
    return q;
}

double QTable::row_max(int s) const {
    const std::size_t base = static_cast<std::size_t>(s) * n_actions;
    double m = values[base];
    for (int a = 1; a < n_actions; ++a) m = std::max(m, values[base + a]);
    return m;
}

double QTable::row_max(int s, const std::vector<int>& allowed) const {
    double m = -std::numeric_limits<double>::infinity();
    for (int a : allowed) m = std::max(m, (*this)(s, a));
    return m;
}

int QTable::row_argmax(int s) const {
    int best = 0;
    for (int a = 1; a < n_actions; ++a)
        if ((*this)(s, a) > (*this)(s, best)) best = a;
    return best;
}

int QTable::row_argmax(int s, const std::vector<int>& allowed) const {
    int best = allowed.front();
    for (int a : allowed)
        if ((*this)(s, a) > (*this)(s, best)) best = a;
    return best;
}

bool QTable::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

double sup_norm_diff(const QTable& a, const QTable& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

ActionMask ActionMask::full(int n_states, int n_actions) {
    ActionMask mask;
    mask.allowed.resize(static_cast<std::size_t>(n_states));
    for (auto& row : mask.allowed) {
        row.resize(static_cast<std::size_t>(n_actions));
        for (int a = 0; a < n_actions; ++a) row[static_cast<std::size_t>(a)] = a;
    }
    return mask;
}

bool ActionMask::is_allowed(int s, int a) const {
    const auto& row = allowed[static_cast<std::size_t>(s)];
    return std::find(row.begin(), row.end(), a) != row.end();
}

std::vector<std::string> validate(const TabularMdp& mdp) {
    std::vector<std::string> report;
    if (mdp.n_states < 1) report.push_back("n_states must be positive");
    if (mdp.n_actions < 1) report.push_back("n_actions must be positive");
    if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0))
        report.push_back("gamma must lie in [0, 1)");
    if (mdp.terminal.size() != static_cast<std::size_t>(mdp.n_states))
        report.push_back("terminal flag vector size differs from n_states");
    const std::size_t expected_rows =
        static_cast<std::size_t>(mdp.n_states) * static_cast<std::size_t>(std::max(mdp.n_actions, 0));
    if (mdp.transitions.size() != expected_rows)
        report.push_back("transition row count differs from n_states * n_actions");
    if (!report.empty()) return report;  // shape is broken, skip row checks

    if (mdp.initial_state < 0 || mdp.initial_state >= mdp.n_states)
        report.push_back("initial_state out of range");
    else if (mdp.is_terminal(mdp.initial_state))
        report.push_back("initial_state is terminal");

    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            const auto& row = mdp.row(s, a);
            if (mdp.is_terminal(s)) {
                if (!row.empty())
                    report.push_back("terminal state has outgoing transitions at " + pair_str(s, a));
                continue;
            }
            if (row.empty()) {
                report.push_back("empty successor list at " + pair_str(s, a));
                continue;
            }
            double sum = 0.0;
            std::unordered_set<int> seen;
            for (const TransitionEntry& e : row) {
                if (e.next_state < 0 || e.next_state >= mdp.n_states)
                    report.push_back("successor out of range at " + pair_str(s, a));
                if (!(e.prob > 0.0))
                    report.push_back("non-positive transition probability at " + pair_str(s, a));
                if (!seen.insert(e.next_state).second)
                    report.push_back("duplicate successor " + std::to_string(e.next_state) + " at " +
                                     pair_str(s, a));
                sum += e.prob;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                report.push_back("transition probabilities sum to " + std::to_string(sum) + " at " +
                                 pair_str(s, a));
        }
    }
    return report;
}

std::vector<std::string> validate(const TabularMdp& mdp, const RewardTable& rewards) {
    std::vector<std::string> report = validate(mdp);
    if (rewards.n_states != mdp.n_states || rewards.n_actions != mdp.n_actions ||
        rewards.rows.size() != mdp.transitions.size()) {
        report.push_back("reward table shape differs from the MDP");
        return report;
    }
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            const auto& trow = mdp.row(s, a);
            const auto& rrow = rewards.row(s, a);
            std::unordered_set<int> support;
            for (const TransitionEntry& e : trow) support.insert(e.next_state);

            std::unordered_set<int> covered;
            for (const RewardEntry& e : rrow) {
                if (!support.count(e.next_state)) {
                    report.push_back("reward entry off the transition support at (s=" +
                                     std::to_string(s) + ", a=" + std::to_string(a) +
                                     ", s'=" + std::to_string(e.next_state) + ")");
                    continue;
                }
                if (!covered.insert(e.next_state).second)
                    report.push_back("duplicate reward entry at " + pair_str(s, a));
                if (std::isnan(e.value))
                    report.push_back("missing reward value at " + pair_str(s, a));
            }
            for (const TransitionEntry& e : trow)
                if (!covered.count(e.next_state))
                    report.push_back("missing reward for transition (s=" + std::to_string(s) +
                                     ", a=" + std::to_string(a) + ", s'=" +
                                     std::to_string(e.next_state) + ")");
            // solvers zip rows by position, so the order must match as well
            if (rrow.size() == trow.size()) {
                for (std::size_t k = 0; k < trow.size(); ++k)
                    if (rrow[k].next_state != trow[k].next_state) {
                        report.push_back("reward row order differs from transitions at " +
                                         pair_str(s, a));
                        break;
                    }
            }
        }
    }
    return report;
}

LiteModel extract_lite_model(const TabularMdp& mdp) {
    LiteModel lite;
    lite.n_states = mdp.n_states;
    lite.n_actions = mdp.n_actions;
    lite.reachable.resize(mdp.transitions.size());
    for (std::size_t i = 0; i < mdp.transitions.size(); ++i) {
        lite.reachable[i].reserve(mdp.transitions[i].size());
        for (const TransitionEntry& e : mdp.transitions[i])
            lite.reachable[i].push_back(e.next_state);
    }
    return lite;
}

int sbf(const TabularMdp& mdp) {
    int best = 0;
    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.is_terminal(s)) continue;
        for (int a = 0; a < mdp.n_actions; ++a)
            best = std::max(best, static_cast<int>(mdp.row(s, a).size()));
    }
    if (best == 0) throw ValidationError("no transitions: every state is terminal");
    return best;
}

StepResult sample_step(const TabularMdp& mdp, const RewardTable& rewards, int s, int a, Rng& rng) {
    if (mdp.is_terminal(s)) throw ValidationError("episode finished: state is terminal");
    const auto& trow = mdp.row(s, a);
    const auto& rrow = rewards.row(s, a);
    const double u = rng.uniform01();
    double acc = 0.0;
    std::size_t pick = trow.size() - 1;  // rounding guard
    for (std::size_t k = 0; k < trow.size(); ++k) {
        acc += trow[k].prob;
        if (u < acc) {
            pick = k;
            break;
        }
    }
    StepResult out;
    out.next_state = trow[pick].next_state;
    out.reward = rrow[pick].value;
    out.done = mdp.is_terminal(out.next_state);
    return out;
}

} // namespace qm
