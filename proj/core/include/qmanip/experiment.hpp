#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qmanip/domains.hpp"
#include "qmanip/qlearn.hpp"

namespace qm {

enum class Method { QL, QM, MQM, SFQL, SQB };

std::string method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

struct DomainConfig {
    std::string name;
    std::vector<int> sbf{1};
    std::vector<double> noise{0.0};  // symmetric magnitudes c -> [-c, +c]
    std::optional<CombinationSpec> combination;  // autogen only
};

struct ExperimentConfig {
    DomainConfig domain;
    std::vector<Method> methods;
    int runs = 30;
    LearnConfig learn;
    SolveConfig solve;
    std::optional<double> delta;     // absent: 2 * eps * gamma / (1 - gamma)
    int smoothing_window = 50;
    double threshold_fraction = 0.95;
    int eval_episodes = 200;
    std::uint64_t master_seed = 0;
    int workers = 0;                 // 0: hardware concurrency
};

// Versioned schema; unknown keys are errors.
ExperimentConfig experiment_config_from_json(const std::string& text);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

struct RunResult {
    Method method = Method::QL;
    int sbf = 1;
    double noise = 0.0;
    int run = 0;
    std::uint64_t seed = 0;  // learning seed, shared by all methods of a run
    LearningCurve curve;
    double pruned_fraction = 0.0;
    std::optional<double> bound_seconds;        // present for QM/MQM only
    std::optional<int> episodes_to_threshold;   // absent: never reached
    double oracle_return = 0.0;
    std::vector<int> per_state_remaining;       // QM/MQM masks, else empty
    std::optional<GridLayout> layout;
    // States whose allowed set lost every optimal action; only reported
    // when the bounds were approximate.
    std::optional<int> optimal_actions_lost;
};

// One full protocol execution: per (sbf, noise, run), build a fresh seeded
// bundle, solve the source Q variants, compute each method's bounds or
// warm start, and learn. All methods of a run share the bundle and the
// learning seed.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg);

// Trailing moving average over the undiscounted returns.
std::vector<double> smooth_returns(const LearningCurve& curve, int window);

struct EpisodeStat {
    Method method;
    int episode = 0;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct MethodStat {
    Method method;
    double pruned_fraction_mean = 0.0;
    double pruned_fraction_std = 0.0;
    std::optional<double> bound_seconds_mean;
    std::optional<double> bound_seconds_std;
    double episodes_to_threshold_mean = 0.0;  // unreached runs count as `episodes`
    double episodes_to_threshold_std = 0.0;
    int runs_reaching_threshold = 0;
};

struct Summary {
    std::vector<EpisodeStat> per_episode;
    std::vector<MethodStat> per_method;
};

// 95% confidence intervals (normal approximation; t quantile below 30
// runs; zero width for a single run). Expects the results of one
// (sbf, noise) setting.
Summary summarize(const std::vector<RunResult>& results, const ExperimentConfig& cfg);

// Writes curves.csv, summary.csv, pruning_heatmap.csv, timings.csv and
// config.json. With several (sbf, noise) settings each gets its own
// subdirectory. Output is byte-deterministic for a fixed config except
// timings.csv, the only file carrying wall-clock values.
void export_results(const std::vector<RunResult>& results, const ExperimentConfig& cfg,
                    const std::filesystem::path& out_dir);

struct RunSeeds {
    std::uint64_t bundle = 0;
    std::uint64_t learn = 0;
    std::uint64_t eval = 0;
};

RunSeeds derive_run_seeds(std::uint64_t master_seed, int setting_index, int run);

} // namespace qm
