#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qmanip/bounds.hpp"
#include "qmanip/mdp.hpp"

namespace qm {

struct GridLayout {
    int rows = 0;
    int cols = 0;
};

// A benchmark instance: the shared MDP, the source reward tables, the
// combination producing the target reward, and presentation metadata.
struct DomainBundle {
    std::string name;
    TabularMdp mdp;
    std::vector<RewardTable> source_rewards;
    CombinationSpec combination;
    std::vector<std::string> labels;
    std::optional<GridLayout> layout;
};

// Caps every non-terminal row's support: draws k ~ U{1..min(sbf, |support|)},
// always keeps the modal successor, fills with k-1 draws from the rest of
// the support, and renormalizes over the kept set.
TabularMdp randomize_sbf(const TabularMdp& mdp, int sbf, Rng& rng);

// Projects a support-aligned reward table onto an MDP with reduced support.
RewardTable restrict_rewards(const RewardTable& rewards, const TabularMdp& reduced);

// 9x5 grid, 4 moves, three terminals paying (1.0, 0), (0, 1.0) and
// (0.6, 0.6) under the two source rewards; target combination R1 + R2.
// Canonical layout documented in the README.
DomainBundle dollar_euro(int sbf, Rng& rng);

// 6x6 grid, 4 moves, four terminal holes split into two pairs with opposite
// source rewards (+1/-1), goal paying 0.5 under both; target R1 + R2 nets
// the holes to 0 and the goal to 1.0.
DomainBundle frozen_lake(int sbf, Rng& rng);

// 7x7 track, 7 velocity/turn actions, crash-terminal obstacles. Three
// source rewards (avoid / terminate / stay put); target R1 + R2 + R3.
DomainBundle racetrack(int sbf, Rng& rng);

struct AutogenParams {
    int n_states = 60;
    int n_actions = 9;
    int initial_support = 9;   // successors per (s, a) before SBF capping
    int n_terminals = 3;
    double gamma = 0.9;
    CombinationSpec combination{LinearCombination{{1.0, 1.0}}, {}};
};

// Random dense MDP with three terminal states paying (+1, -1), (-1, +1) and
// (+0.6, +0.6) under the two source rewards.
DomainBundle autogen(int sbf, Rng& rng, const AutogenParams& params = {});

// Constructor registry for the CLI/harness. The combination override is
// honored for autogen only.
DomainBundle make_domain(const std::string& name, int sbf, Rng& rng,
                         const std::optional<CombinationSpec>& combination = {});

// {1, mid, max} branching levels used by the sweep experiments.
std::vector<int> domain_sbf_levels(const std::string& name);

std::vector<std::string> domain_names();

} // namespace qm
