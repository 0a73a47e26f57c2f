#include "qmanip/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "qmanip/baselines.hpp"
#include "qmanip/errors.hpp"
#include "qmanip/json_io.hpp"

namespace qm {

namespace {

using nlohmann::json;

constexpr const char* kArtifactVersion = "0.1.0";
constexpr int kConfigVersion = 1;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_seconds(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known)
            throw ValidationError(std::string("unknown key \"") + item.key() + "\" in " + where);
    }
}

DecaySchedule schedule_from_json(const json& in, const char* where) {
    check_keys(in, {"initial", "decay", "floor"}, where);
    DecaySchedule s;
    if (in.contains("initial")) s.initial = in.at("initial").get<double>();
    if (in.contains("decay")) s.decay = in.at("decay").get<double>();
    if (in.contains("floor")) s.floor = in.at("floor").get<double>();
    return s;
}

json schedule_to_json(const DecaySchedule& s) {
    return {{"initial", s.initial}, {"decay", s.decay}, {"floor", s.floor}};
}

// t quantiles for a two-sided 95% interval, df 1..29; the normal quantile
// takes over at 30 runs and beyond.
double ci95_quantile(int n_runs) {
    static constexpr double kT975[] = {
        12.706204736174698, 4.302652729911275, 3.182446305284263, 2.776445105197779,
        2.570581835636197,  2.446911848791681, 2.364624251592785, 2.306004135033371,
        2.262157162798204,  2.228138851964938, 2.200985160082949, 2.178812829663418,
        2.160368656461013,  2.144786687916927, 2.131449545559323, 2.119905299221011,
        2.109815577833181,  2.100922040241039, 2.093024054408263, 2.085963447265837,
        2.079613844727662,  2.073873067904015, 2.068657610419041, 2.063898561628021,
        2.059538552753294,  2.055529438642871, 2.051830516480283, 2.048407141795244,
        2.045229642132703};
    if (n_runs >= 30) return 1.959963984540054;
    const int df = n_runs - 1;
    return kT975[df - 1];
}

struct Setting {
    int sbf = 1;
    double noise = 0.0;
};

std::vector<Setting> settings_of(const ExperimentConfig& cfg) {
    std::vector<Setting> out;
    for (int sbf : cfg.domain.sbf)
        for (double noise : cfg.domain.noise) out.push_back({sbf, noise});
    return out;
}

bool uses_method(const ExperimentConfig& cfg, Method m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
}

double mean_of(const std::vector<double>& xs) {
    double total = 0.0;
    for (double x : xs) total += x;
    return xs.empty() ? 0.0 : total / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    bool constant = true;
    for (double x : xs) constant = constant && x == xs.front();
    if (constant) return 0.0;  // identical inputs deviate by exactly zero
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

int count_optimal_lost(const QTable& oracle_q, const ActionMask& mask, const TabularMdp& mdp,
                       double tol) {
    int lost = 0;
    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.is_terminal(s)) continue;
        const double best = oracle_q.row_max(s);
        bool kept = false;
        for (int a : mask.allowed[static_cast<std::size_t>(s)])
            if (oracle_q(s, a) >= best - tol) {
                kept = true;
                break;
            }
        if (!kept) ++lost;
    }
    return lost;
}

void validate_config(const ExperimentConfig& cfg) {
    const auto names = domain_names();
    if (std::find(names.begin(), names.end(), cfg.domain.name) == names.end())
        throw ValidationError("unknown domain: " + cfg.domain.name);
    if (cfg.methods.empty()) throw ValidationError("method list is empty");
    for (std::size_t i = 0; i < cfg.methods.size(); ++i)
        for (std::size_t j = i + 1; j < cfg.methods.size(); ++j)
            if (cfg.methods[i] == cfg.methods[j])
                throw ValidationError("duplicate method: " + method_name(cfg.methods[i]));
    if (cfg.runs < 1) throw ValidationError("runs must be at least 1");
    if (cfg.domain.sbf.empty()) throw ValidationError("sbf list is empty");
    for (int sbf : cfg.domain.sbf)
        if (sbf < 1) throw ValidationError("sbf values must be at least 1");
    if (cfg.domain.noise.empty()) throw ValidationError("noise list is empty");
    for (double c : cfg.domain.noise)
        if (c < 0.0) throw ValidationError("noise magnitudes must be nonnegative");
    if (cfg.domain.combination && cfg.domain.name != "autogen")
        throw ValidationError("combination override is only supported for autogen");
    if (cfg.learn.episodes < 1 || cfg.learn.t_max < 1)
        throw ValidationError("learn.episodes and learn.t_max must be positive");
    if (!(cfg.learn.alpha.initial > 0.0 && cfg.learn.alpha.initial <= 1.0))
        throw ValidationError("alpha initial must lie in (0, 1]");
    if (cfg.learn.epsilon_explore.initial != 1.0)
        throw ValidationError("exploration must start at 1.0");
    if (!(cfg.learn.epsilon_explore.floor >= 0.0 && cfg.learn.epsilon_explore.floor < 1.0))
        throw ValidationError("exploration floor must lie in [0, 1)");
    if (cfg.solve.epsilon <= 0.0 || cfg.solve.max_sweeps < 1)
        throw ValidationError("solve.epsilon must be positive and solve.max_sweeps at least 1");
    if (cfg.delta && *cfg.delta < 0.0) throw ValidationError("delta must be nonnegative");
    if (cfg.smoothing_window < 1) throw ValidationError("smoothing_window must be at least 1");
    if (!(cfg.threshold_fraction > 0.0 && cfg.threshold_fraction <= 1.0))
        throw ValidationError("threshold_fraction must lie in (0, 1]");
    if (cfg.eval_episodes < 1) throw ValidationError("eval_episodes must be at least 1");
    if (cfg.workers < 0) throw ValidationError("workers must be nonnegative");
}

double threshold_of(double oracle_return, double fraction) {
    // 95% of the oracle return for positive oracles; the symmetric 5% band
    // keeps the rule meaningful for zero or negative optima.
    return oracle_return - (1.0 - fraction) * std::abs(oracle_return);
}

std::optional<int> episodes_to_threshold(const std::vector<double>& smoothed, double threshold) {
    for (std::size_t e = 0; e < smoothed.size(); ++e)
        if (smoothed[e] >= threshold - 1e-12) return static_cast<int>(e);
    return std::nullopt;
}

} // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::QL: return "QL";
        case Method::QM: return "QM";
        case Method::MQM: return "MQM";
        case Method::SFQL: return "SFQL";
        case Method::SQB: return "SQB";
    }
    return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
    if (name == "QL") return Method::QL;
    if (name == "QM") return Method::QM;
    if (name == "MQM") return Method::MQM;
    if (name == "SFQL") return Method::SFQL;
    if (name == "SQB") return Method::SQB;
    return std::nullopt;
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    json in;
    try {
        in = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what());
    }

    try {
        check_keys(in,
                   {"version", "domain", "methods", "runs", "learn", "solve", "prune",
                    "smoothing_window", "threshold_fraction", "eval_episodes", "master_seed",
                    "workers"},
                   "config");
        if (!in.contains("version") || in.at("version").get<int>() != kConfigVersion)
            throw ValidationError("config version must be " + std::to_string(kConfigVersion));

        ExperimentConfig cfg;
        const json& domain = in.at("domain");
        check_keys(domain, {"name", "sbf", "noise", "combination"}, "config.domain");
        cfg.domain.name = domain.at("name").get<std::string>();
        if (domain.contains("sbf")) cfg.domain.sbf = domain.at("sbf").get<std::vector<int>>();
        if (domain.contains("noise"))
            cfg.domain.noise = domain.at("noise").get<std::vector<double>>();
        if (domain.contains("combination") && !domain.at("combination").is_null()) {
            const json& comb = domain.at("combination");
            check_keys(comb, {"form", "coeffs", "exponent"}, "config.domain.combination");
            CombinationSpec spec;
            const std::string form = comb.at("form").get<std::string>();
            const std::vector<double> coeffs = comb.at("coeffs").get<std::vector<double>>();
            if (form == "linear") {
                spec.form = LinearCombination{coeffs};
            } else if (form == "power_of_sum") {
                spec.form = PowerOfSumCombination{coeffs, comb.at("exponent").get<int>()};
            } else {
                throw ValidationError("unknown combination form: " + form);
            }
            cfg.domain.combination = std::move(spec);
        }

        for (const json& name : in.at("methods")) {
            const auto method = method_from_name(name.get<std::string>());
            if (!method) throw ValidationError("unknown method: " + name.get<std::string>());
            cfg.methods.push_back(*method);
        }
        if (in.contains("runs")) cfg.runs = in.at("runs").get<int>();

        if (in.contains("learn")) {
            const json& learn = in.at("learn");
            check_keys(learn, {"episodes", "t_max", "alpha", "epsilon_explore"}, "config.learn");
            if (learn.contains("episodes")) cfg.learn.episodes = learn.at("episodes").get<int>();
            if (learn.contains("t_max")) cfg.learn.t_max = learn.at("t_max").get<int>();
            if (learn.contains("alpha"))
                cfg.learn.alpha = schedule_from_json(learn.at("alpha"), "config.learn.alpha");
            if (learn.contains("epsilon_explore"))
                cfg.learn.epsilon_explore =
                    schedule_from_json(learn.at("epsilon_explore"), "config.learn.epsilon_explore");
        }
        if (in.contains("solve")) {
            const json& solve = in.at("solve");
            check_keys(solve, {"epsilon", "max_sweeps"}, "config.solve");
            if (solve.contains("epsilon")) cfg.solve.epsilon = solve.at("epsilon").get<double>();
            if (solve.contains("max_sweeps")) cfg.solve.max_sweeps = solve.at("max_sweeps").get<int>();
        }
        if (in.contains("prune")) {
            const json& prune = in.at("prune");
            check_keys(prune, {"delta"}, "config.prune");
            if (prune.contains("delta") && !prune.at("delta").is_null())
                cfg.delta = prune.at("delta").get<double>();
        }
        if (in.contains("smoothing_window"))
            cfg.smoothing_window = in.at("smoothing_window").get<int>();
        if (in.contains("threshold_fraction"))
            cfg.threshold_fraction = in.at("threshold_fraction").get<double>();
        if (in.contains("eval_episodes")) cfg.eval_episodes = in.at("eval_episodes").get<int>();
        if (in.contains("master_seed")) cfg.master_seed = in.at("master_seed").get<std::uint64_t>();
        if (in.contains("workers")) cfg.workers = in.at("workers").get<int>();

        validate_config(cfg);
        return cfg;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config schema violation: ") + e.what());
    }
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
    json out;
    out["version"] = kConfigVersion;
    out["domain"]["name"] = cfg.domain.name;
    out["domain"]["sbf"] = cfg.domain.sbf;
    out["domain"]["noise"] = cfg.domain.noise;
    if (cfg.domain.combination) {
        json comb;
        if (cfg.domain.combination->linear()) {
            comb["form"] = "linear";
            comb["coeffs"] = cfg.domain.combination->coeffs();
        } else {
            comb["form"] = "power_of_sum";
            comb["coeffs"] = cfg.domain.combination->coeffs();
            comb["exponent"] = std::get<PowerOfSumCombination>(cfg.domain.combination->form).exponent;
        }
        out["domain"]["combination"] = std::move(comb);
    }
    json methods = json::array();
    for (Method m : cfg.methods) methods.push_back(method_name(m));
    out["methods"] = std::move(methods);
    out["runs"] = cfg.runs;
    out["learn"] = {{"episodes", cfg.learn.episodes},
                    {"t_max", cfg.learn.t_max},
                    {"alpha", schedule_to_json(cfg.learn.alpha)},
                    {"epsilon_explore", schedule_to_json(cfg.learn.epsilon_explore)}};
    out["solve"] = {{"epsilon", cfg.solve.epsilon}, {"max_sweeps", cfg.solve.max_sweeps}};
    if (cfg.delta)
        out["prune"] = {{"delta", *cfg.delta}};
    else
        out["prune"] = {{"delta", nullptr}};
    out["smoothing_window"] = cfg.smoothing_window;
    out["threshold_fraction"] = cfg.threshold_fraction;
    out["eval_episodes"] = cfg.eval_episodes;
    out["master_seed"] = cfg.master_seed;
    out["workers"] = cfg.workers;
    return out.dump(2) + "\n";
}

RunSeeds derive_run_seeds(std::uint64_t master_seed, int setting_index, int run) {
    const std::uint64_t stream =
        (static_cast<std::uint64_t>(setting_index) << 32) | static_cast<std::uint64_t>(run);
    RunSeeds seeds;
    seeds.bundle = derive_seed(master_seed, stream * 4 + 1);
    seeds.learn = derive_seed(master_seed, stream * 4 + 2);
    seeds.eval = derive_seed(master_seed, stream * 4 + 3);
    return seeds;
}

std::vector<double> smooth_returns(const LearningCurve& curve, int window) {
    std::vector<double> out(curve.episodes.size(), 0.0);
    double acc = 0.0;
    for (std::size_t e = 0; e < curve.episodes.size(); ++e) {
        acc += curve.episodes[e].undiscounted_return;
        if (e >= static_cast<std::size_t>(window))
            acc -= curve.episodes[e - static_cast<std::size_t>(window)].undiscounted_return;
        const std::size_t span = std::min(e + 1, static_cast<std::size_t>(window));
        out[e] = acc / static_cast<double>(span);
    }
    return out;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);

    const std::vector<Setting> settings = settings_of(cfg);
    const int n_methods = static_cast<int>(cfg.methods.size());
    const int n_tasks = static_cast<int>(settings.size()) * cfg.runs;
    std::vector<RunResult> results(static_cast<std::size_t>(n_tasks) * n_methods);

    const bool needs_sources =
        uses_method(cfg, Method::MQM) || uses_method(cfg, Method::SFQL) || uses_method(cfg, Method::SQB);

    auto run_task = [&](int task) {
        const int setting_index = task / cfg.runs;
        const int run = task % cfg.runs;
        const Setting& setting = settings[static_cast<std::size_t>(setting_index)];
        const RunSeeds seeds = derive_run_seeds(cfg.master_seed, setting_index, run);

        Rng bundle_rng(seeds.bundle);
        const DomainBundle bundle =
            make_domain(cfg.domain.name, setting.sbf, bundle_rng, cfg.domain.combination);
        const TabularMdp& mdp = bundle.mdp;
        const RewardTable target = combine_rewards(bundle.source_rewards, bundle.combination);
        const LiteModel lite = extract_lite_model(mdp);

        const QTable oracle_q = value_iteration(mdp, target, cfg.solve);
        Rng eval_rng(seeds.eval);
        const double oracle_return = evaluate_policy_return(
            mdp, target, greedy_policy(oracle_q), cfg.eval_episodes, cfg.learn.t_max, eval_rng);
        const double threshold = threshold_of(oracle_return, cfg.threshold_fraction);

        const double delta = cfg.delta ? *cfg.delta : default_delta(cfg.solve.epsilon, mdp.gamma);
        const std::optional<NoiseRange> noise =
            setting.noise > 0.0 ? std::optional<NoiseRange>({-setting.noise, setting.noise})
                                : std::nullopt;

        std::vector<SourceBehavior> sources;
        if (needs_sources)
            for (const RewardTable& src : bundle.source_rewards)
                sources.push_back(make_source_behavior(mdp, src, cfg.solve));

        auto make_mqm_init = [&]() {
            BoundPair init;
            if (bundle.combination.linear()) {
                std::vector<QTable> q_stars, q_mus;
                for (const SourceBehavior& src : sources) {
                    q_stars.push_back(src.q_star);
                    q_mus.push_back(src.q_mu);
                }
                init = mqm_init_linear(q_stars, q_mus, bundle.combination.coeffs());
            } else {
                std::vector<QTable> q_abs;
                for (const SourceBehavior& src : sources) q_abs.push_back(src.q_star_abs);
                init = mqm_init_nonlinear(q_abs, bundle.combination);
            }
            if (noise)
                init = apply_noise_to_init(init, noise->n_min, noise->n_max, mdp.gamma,
                                           cfg.learn.t_max);
            return init;
        };

        for (int mi = 0; mi < n_methods; ++mi) {
            const Method method = cfg.methods[static_cast<std::size_t>(mi)];
            RunResult rr;
            rr.method = method;
            rr.sbf = setting.sbf;
            rr.noise = setting.noise;
            rr.run = run;
            rr.seed = seeds.learn;
            rr.oracle_return = oracle_return;
            rr.layout = bundle.layout;

            ActionMask mask;
            QTable warm_start;
            BoundPair clip;
            const ActionMask* mask_ptr = nullptr;
            const QTable* warm_ptr = nullptr;
            const BoundPair* clip_ptr = nullptr;

            if (method == Method::QM || method == Method::MQM) {
                const auto t0 = std::chrono::steady_clock::now();
                BoundPair bounds;
                if (method == Method::QM) {
                    bounds = qm_iterate(lite, target, mdp.gamma, cfg.solve, noise);
                } else {
                    bounds = mqm_iterate(lite, target, mdp.gamma, make_mqm_init(), cfg.solve, noise);
                }
                const auto t1 = std::chrono::steady_clock::now();
                rr.bound_seconds = std::chrono::duration<double>(t1 - t0).count();

                mask = prune_actions(bounds, PruneConfig{delta});
                mask_ptr = &mask;
                const PruningStats stats = pruning_stats(mask, mdp);
                rr.pruned_fraction = stats.pruned_fraction;
                rr.per_state_remaining = stats.per_state_remaining;
                if (bounds.approximate)
                    rr.optimal_actions_lost = count_optimal_lost(
                        oracle_q, mask, mdp,
                        2.0 * cfg.solve.epsilon / (1.0 - mdp.gamma));
            } else if (method == Method::SFQL) {
                warm_start = sfql_bootstrap(mdp, target, sources, cfg.solve);
                warm_ptr = &warm_start;
            } else if (method == Method::SQB) {
                clip = sqb_bounds_from_mqm(make_mqm_init());
                clip_ptr = &clip;  // the learner starts at the bound midpoint
            }

            LearnConfig learn = cfg.learn;
            learn.seed = seeds.learn;
            learn.reward_noise = noise;
            QLearnResult learned = q_learning(mdp, target, learn, mask_ptr, warm_ptr, clip_ptr);
            rr.episodes_to_threshold =
                episodes_to_threshold(smooth_returns(learned.curve, cfg.smoothing_window), threshold);
            rr.curve = std::move(learned.curve);

            results[static_cast<std::size_t>(task) * n_methods + mi] = std::move(rr);
        }
    };

    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            const int task = next.fetch_add(1);
            if (task >= n_tasks) return;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) return;
            }
            try {
                run_task(task);
            } catch (...) {
                const int setting_index = task / cfg.runs;
                const int run = task % cfg.runs;
                const Setting& setting = settings[static_cast<std::size_t>(setting_index)];
                const std::string context = "run " + std::to_string(run) + " (sbf " +
                                            std::to_string(setting.sbf) + ", noise " +
                                            format_double(setting.noise) + "): ";
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) return;
                try {
                    throw;
                } catch (const SolverError& e) {
                    first_error = std::make_exception_ptr(
                        SolverError(context + e.what(), e.residual, e.sweeps));
                } catch (const ValidationError& e) {
                    first_error = std::make_exception_ptr(ValidationError(context + e.what()));
                } catch (const std::exception& e) {
                    first_error =
                        std::make_exception_ptr(std::runtime_error(context + e.what()));
                }
            }
        }
    };

    int n_workers = cfg.workers > 0 ? cfg.workers
                                    : static_cast<int>(std::thread::hardware_concurrency());
    n_workers = std::clamp(n_workers, 1, std::max(n_tasks, 1));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    return results;
}

Summary summarize(const std::vector<RunResult>& results, const ExperimentConfig& cfg) {
    if (results.empty()) return {};
    for (const RunResult& rr : results)
        if (rr.sbf != results.front().sbf || rr.noise != results.front().noise)
            throw ValidationError("summarize expects the results of a single (sbf, noise) setting");

    Summary summary;
    for (Method method : cfg.methods) {
        std::vector<const RunResult*> runs;
        for (const RunResult& rr : results)
            if (rr.method == method) runs.push_back(&rr);
        if (runs.empty()) continue;
        std::sort(runs.begin(), runs.end(),
                  [](const RunResult* a, const RunResult* b) { return a->run < b->run; });

        const int n = static_cast<int>(runs.size());
        const std::size_t episodes = runs.front()->curve.episodes.size();
        std::vector<std::vector<double>> smoothed;
        smoothed.reserve(runs.size());
        for (const RunResult* rr : runs)
            smoothed.push_back(smooth_returns(rr->curve, cfg.smoothing_window));

        const double quantile = ci95_quantile(n);
        std::vector<double> column(runs.size());
        for (std::size_t e = 0; e < episodes; ++e) {
            for (std::size_t r = 0; r < runs.size(); ++r) column[r] = smoothed[r][e];
            const double mean = mean_of(column);
            const double sd = sample_std(column, mean);
            const double half = n > 1 ? quantile * sd / std::sqrt(static_cast<double>(n)) : 0.0;
            summary.per_episode.push_back(
                {method, static_cast<int>(e), mean, mean - half, mean + half});
        }

        MethodStat stat;
        stat.method = method;
        std::vector<double> pruned, seconds, e2t;
        for (const RunResult* rr : runs) {
            pruned.push_back(rr->pruned_fraction);
            if (rr->bound_seconds) seconds.push_back(*rr->bound_seconds);
            e2t.push_back(rr->episodes_to_threshold
                              ? static_cast<double>(*rr->episodes_to_threshold)
                              : static_cast<double>(rr->curve.episodes.size()));
            if (rr->episodes_to_threshold) ++stat.runs_reaching_threshold;
        }
        stat.pruned_fraction_mean = mean_of(pruned);
        stat.pruned_fraction_std = sample_std(pruned, stat.pruned_fraction_mean);
        if (!seconds.empty()) {
            stat.bound_seconds_mean = mean_of(seconds);
            stat.bound_seconds_std = sample_std(seconds, *stat.bound_seconds_mean);
        }
        stat.episodes_to_threshold_mean = mean_of(e2t);
        stat.episodes_to_threshold_std = sample_std(e2t, stat.episodes_to_threshold_mean);
        summary.per_method.push_back(stat);
    }
    return summary;
}

void export_results(const std::vector<RunResult>& results, const ExperimentConfig& cfg,
                    const std::filesystem::path& out_dir) {
    const std::vector<Setting> settings = settings_of(cfg);

    for (std::size_t si = 0; si < settings.size(); ++si) {
        const Setting& setting = settings[si];
        std::filesystem::path dir = out_dir;
        if (settings.size() > 1)
            dir /= "sbf" + std::to_string(setting.sbf) + "_noise" + format_double(setting.noise);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("cannot create output directory: " + dir.string());

        std::vector<RunResult> subset;
        for (const RunResult& rr : results)
            if (rr.sbf == setting.sbf && rr.noise == setting.noise) subset.push_back(rr);
        std::sort(subset.begin(), subset.end(), [&](const RunResult& a, const RunResult& b) {
            const auto rank = [&](const RunResult& r) {
                return std::find(cfg.methods.begin(), cfg.methods.end(), r.method) -
                       cfg.methods.begin();
            };
            if (rank(a) != rank(b)) return rank(a) < rank(b);
            return a.run < b.run;
        });

        // curves.csv
        {
            std::ostringstream out;
            out << "method,run,episode,return,smoothed\n";
            for (const RunResult& rr : subset) {
                const std::vector<double> smoothed = smooth_returns(rr.curve, cfg.smoothing_window);
                for (const EpisodeRecord& rec : rr.curve.episodes)
                    out << method_name(rr.method) << ',' << rr.run << ',' << rec.episode << ','
                        << format_double(rec.undiscounted_return) << ','
                        << format_double(smoothed[static_cast<std::size_t>(rec.episode)]) << '\n';
            }
            write_text_file(dir / "curves.csv", out.str());
        }

        const Summary summary = summarize(subset, cfg);

        // summary.csv: per-episode interval columns plus the per-method
        // aggregates repeated on each row
        {
            std::ostringstream out;
            out << "method,episode,mean_return,ci_low,ci_high,pruned_fraction_mean,"
                   "pruned_fraction_std,episodes_to_threshold_mean,episodes_to_threshold_std,"
                   "runs_reaching_threshold\n";
            for (const EpisodeStat& es : summary.per_episode) {
                const MethodStat* ms = nullptr;
                for (const MethodStat& candidate : summary.per_method)
                    if (candidate.method == es.method) ms = &candidate;
                out << method_name(es.method) << ',' << es.episode << ','
                    << format_double(es.mean) << ',' << format_double(es.ci_low) << ','
                    << format_double(es.ci_high) << ',' << format_double(ms->pruned_fraction_mean)
                    << ',' << format_double(ms->pruned_fraction_std) << ','
                    << format_double(ms->episodes_to_threshold_mean) << ','
                    << format_double(ms->episodes_to_threshold_std) << ','
                    << ms->runs_reaching_threshold << '\n';
            }
            write_text_file(dir / "summary.csv", out.str());
        }

        // pruning_heatmap.csv
        {
            std::ostringstream out;
            out << "method,run,state_index,row,col,remaining_actions\n";
            for (const RunResult& rr : subset) {
                if (rr.per_state_remaining.empty()) continue;
                for (std::size_t s = 0; s < rr.per_state_remaining.size(); ++s) {
                    int row = -1;
                    int col = -1;
                    if (rr.layout && rr.layout->cols > 0) {
                        row = static_cast<int>(s) / rr.layout->cols;
                        col = static_cast<int>(s) % rr.layout->cols;
                    }
                    out << method_name(rr.method) << ',' << rr.run << ',' << s << ',' << row << ','
                        << col << ',' << rr.per_state_remaining[s] << '\n';
                }
            }
            write_text_file(dir / "pruning_heatmap.csv", out.str());
        }

        // timings.csv: the only file carrying wall-clock values
        {
            std::ostringstream out;
            out << "method,run,bound_seconds,bound_seconds_mean,bound_seconds_std\n";
            for (const RunResult& rr : subset) {
                if (!rr.bound_seconds) continue;
                const MethodStat* ms = nullptr;
                for (const MethodStat& candidate : summary.per_method)
                    if (candidate.method == rr.method) ms = &candidate;
                out << method_name(rr.method) << ',' << rr.run << ','
                    << format_seconds(*rr.bound_seconds) << ','
                    << format_seconds(ms->bound_seconds_mean.value_or(0.0)) << ','
                    << format_seconds(ms->bound_seconds_std.value_or(0.0)) << '\n';
            }
            write_text_file(dir / "timings.csv", out.str());
        }

        // config.json: resolved config, setting, seeds, oracle returns
        {
            json out;
            out["artifact_version"] = kArtifactVersion;
            out["config"] = json::parse(experiment_config_to_json(cfg));
            out["setting"] = {{"sbf", setting.sbf}, {"noise", setting.noise}};
            out["threshold_rule"] =
                "smoothed_return >= oracle_return - (1 - threshold_fraction) * |oracle_return|";
            json runs = json::array();
            for (int run = 0; run < cfg.runs; ++run) {
                const RunSeeds seeds = derive_run_seeds(cfg.master_seed, static_cast<int>(si), run);
                double oracle_return = 0.0;
                for (const RunResult& rr : subset)
                    if (rr.run == run) {
                        oracle_return = rr.oracle_return;
                        break;
                    }
                runs.push_back({{"run", run},
                                {"bundle_seed", seeds.bundle},
                                {"learn_seed", seeds.learn},
                                {"eval_seed", seeds.eval},
                                {"oracle_return", oracle_return}});
            }
            out["runs"] = std::move(runs);
            write_text_file(dir / "config.json", out.dump(2) + "\n");
        }
    }
}

} // namespace qm
