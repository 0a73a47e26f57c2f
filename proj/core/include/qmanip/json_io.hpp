#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include "qmanip/bounds.hpp"
#include "qmanip/domains.hpp"

namespace qm {

// MDP interchange format. Round-trips are bit-exact for every value
// representable in binary floating point.
std::string mdp_to_json(const TabularMdp& mdp, const RewardTable& rewards);
std::pair<TabularMdp, RewardTable> mdp_from_json(const std::string& text);

// Bundle files are the MDP format (rewards = combined target) extended with
// a "bundle" object carrying source rewards, combination, labels, layout.
std::string bundle_to_json(const DomainBundle& bundle);
DomainBundle bundle_from_json(const std::string& text);

// Output of a bound computation: the pair, the pruned mask, and stats.
struct BoundsReport {
    std::string method;          // "qm" | "mqm"
    std::string init;            // "" | "naive" | "linear" | "nonlinear"
    double delta = 0.0;
    double epsilon = 0.0;
    std::optional<NoiseRange> noise;
    BoundPair bounds;
    ActionMask mask;
    PruningStats stats;
    double bound_seconds = 0.0;
};

std::string bounds_report_to_json(const BoundsReport& report);
BoundsReport bounds_report_from_json(const std::string& text);

// state_index,row,col,remaining_actions rows for heatmap plotting;
// row/col are -1 without a grid layout.
std::string per_state_remaining_csv(const PruningStats& stats,
                                    const std::optional<GridLayout>& layout);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace qm
