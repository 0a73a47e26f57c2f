#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qmanip/baselines.hpp"
#include "qmanip/errors.hpp"
#include "qmanip/experiment.hpp"
#include "qmanip/json_io.hpp"
#include "qmanip/verify.hpp"

namespace {

struct GenOptions {
    std::string domain;
    int sbf = 1;
    std::uint64_t seed = 0;
    std::string out;
    std::string target = "linear";  // autogen only: linear | power3
};

struct BoundsOptions {
    std::string bundle;
    std::string method;
    std::string init = "linear";
    double noise_min = 0.0;
    double noise_max = 0.0;
    bool has_noise_min = false;
    bool has_noise_max = false;
    double epsilon = 1e-8;
    int max_sweeps = 1000000;
    std::optional<double> delta;
    int t_max = 0;  // 0: unbounded horizon for the naive initialization
    std::string out;
    std::string heatmap_out;
};

void run_gen(const GenOptions& opt) {
    qm::Rng rng(opt.seed);
    std::optional<qm::CombinationSpec> combination;
    if (opt.domain == "autogen" && opt.target == "power3")
        combination = qm::CombinationSpec{qm::PowerOfSumCombination{{1.0, 1.0}, 3}, {}};
    const qm::DomainBundle bundle = qm::make_domain(opt.domain, opt.sbf, rng, combination);
    qm::write_text_file(opt.out, qm::bundle_to_json(bundle));
    std::cout << "wrote " << opt.out << " (" << bundle.mdp.n_states << " states, "
              << bundle.mdp.n_actions << " actions, sbf " << qm::sbf(bundle.mdp) << ")\n";
}

void run_bounds(const BoundsOptions& opt) {
    const qm::DomainBundle bundle = qm::bundle_from_json(qm::read_text_file(opt.bundle));
    const qm::TabularMdp& mdp = bundle.mdp;
    const qm::RewardTable target = qm::combine_rewards(bundle.source_rewards, bundle.combination);
    const auto report = qm::validate(mdp, target);
    if (!report.empty()) throw qm::ValidationError("invalid bundle: " + report.front());

    const qm::LiteModel lite = qm::extract_lite_model(mdp);
    const qm::SolveConfig solve{opt.epsilon, opt.max_sweeps};

    std::optional<qm::NoiseRange> noise;
    if (opt.has_noise_min || opt.has_noise_max) {
        noise = qm::NoiseRange{opt.has_noise_min ? opt.noise_min : 0.0,
                               opt.has_noise_max ? opt.noise_max : 0.0};
        if (noise->n_min > noise->n_max)
            throw qm::ValidationError("--noise-min must not exceed --noise-max");
    }
    const std::optional<int> horizon = opt.t_max > 0 ? std::optional<int>(opt.t_max) : std::nullopt;

    qm::BoundsReport out;
    out.method = opt.method;
    out.epsilon = opt.epsilon;
    out.noise = noise;
    out.delta = opt.delta ? *opt.delta : qm::default_delta(opt.epsilon, mdp.gamma);

    const auto t0 = std::chrono::steady_clock::now();
    if (opt.method == "qm") {
        out.bounds = qm::qm_iterate(lite, target, mdp.gamma, solve, noise);
    } else {
        out.init = opt.init;
        qm::BoundPair init;
        if (opt.init == "naive") {
            init = qm::mqm_init_naive(lite, target, mdp.gamma, horizon);
        } else if (opt.init == "linear") {
            if (!bundle.combination.linear())
                throw qm::ValidationError("the linear initialization needs a linear combination");
            std::vector<qm::QTable> q_stars, q_mus;
            for (const qm::RewardTable& src : bundle.source_rewards) {
                const qm::SourceBehavior behavior = qm::make_source_behavior(mdp, src, solve);
                q_stars.push_back(behavior.q_star);
                q_mus.push_back(behavior.q_mu);
            }
            init = qm::mqm_init_linear(q_stars, q_mus, bundle.combination.coeffs());
        } else {  // nonlinear
            std::vector<qm::QTable> q_abs;
            for (const qm::RewardTable& src : bundle.source_rewards)
                q_abs.push_back(qm::make_source_behavior(mdp, src, solve).q_star_abs);
            init = qm::mqm_init_nonlinear(q_abs, bundle.combination);
        }
        if (noise)
            init = qm::apply_noise_to_init(init, noise->n_min, noise->n_max, mdp.gamma, horizon);
        out.bounds = qm::mqm_iterate(lite, target, mdp.gamma, init, solve, noise);
    }
    const auto t1 = std::chrono::steady_clock::now();
    out.bound_seconds = std::chrono::duration<double>(t1 - t0).count();

    out.mask = qm::prune_actions(out.bounds, qm::PruneConfig{out.delta});
    out.stats = qm::pruning_stats(out.mask, mdp);

    qm::write_text_file(opt.out, qm::bounds_report_to_json(out));
    if (!opt.heatmap_out.empty())
        qm::write_text_file(opt.heatmap_out, qm::per_state_remaining_csv(out.stats, bundle.layout));

    std::cout << "pruned " << out.stats.pruned_count << " actions ("
              << out.stats.pruned_fraction * 100.0 << "%) in " << out.bounds.iterations
              << " sweeps; wrote " << opt.out << "\n";
    if (out.bounds.approximate)
        std::cout << "note: approximate bounds, pruning carries no optimality guarantee\n";
}

int run_verify(const std::string& bundle_path, double epsilon, std::uint64_t seed) {
    const qm::DomainBundle bundle = qm::bundle_from_json(qm::read_text_file(bundle_path));
    const qm::SolveConfig solve{epsilon, 1000000};
    const auto results = qm::verify_bundle(bundle, solve, seed);
    bool all_passed = true;
    for (const qm::PropertyResult& r : results) {
        std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name;
        if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
        std::cout << "\n";
        all_passed = all_passed && r.passed;
    }
    return all_passed ? 0 : 1;
}

void run_experiment_cmd(const std::string& config_path, const std::string& out_dir) {
    const qm::ExperimentConfig cfg =
        qm::experiment_config_from_json(qm::read_text_file(config_path));
    const std::vector<qm::RunResult> results = qm::run_experiment(cfg);
    qm::export_results(results, cfg, out_dir);

    for (int sbf : cfg.domain.sbf) {
        for (double noise : cfg.domain.noise) {
            std::vector<qm::RunResult> subset;
            for (const qm::RunResult& rr : results)
                if (rr.sbf == sbf && rr.noise == noise) subset.push_back(rr);
            const qm::Summary summary = qm::summarize(subset, cfg);
            for (const qm::MethodStat& ms : summary.per_method) {
                std::cout << cfg.domain.name << " sbf=" << sbf << " noise=" << noise << " "
                          << qm::method_name(ms.method)
                          << ": pruned " << ms.pruned_fraction_mean * 100.0 << "%"
                          << ", episodes-to-threshold " << ms.episodes_to_threshold_mean << " ("
                          << ms.runs_reaching_threshold << "/" << cfg.runs << " reached)";
                if (ms.bound_seconds_mean)
                    std::cout << ", bound time " << *ms.bound_seconds_mean << " s";
                std::cout << "\n";
            }
        }
    }
    std::cout << "results written to " << out_dir << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Q-bound computation, action pruning and reward-adaptation experiments "
                 "for tabular MDPs"};
    app.require_subcommand(1);

    GenOptions gen_opt;
    CLI::App* gen = app.add_subcommand("gen", "emit a domain bundle as JSON");
    gen->add_option("--domain", gen_opt.domain, "domain name")
        ->required()
        ->check(CLI::IsMember(qm::domain_names()));
    gen->add_option("--sbf", gen_opt.sbf, "stochastic branching cap")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_opt.seed, "generator seed");
    gen->add_option("--out", gen_opt.out, "output path")->required();
    gen->add_option("--target", gen_opt.target, "autogen target combination")
        ->check(CLI::IsMember({"linear", "power3"}));

    BoundsOptions bounds_opt;
    CLI::App* bounds = app.add_subcommand("bounds", "compute bounds, mask and pruning stats");
    bounds->add_option("--bundle", bounds_opt.bundle, "bundle JSON path")->required();
    bounds->add_option("--method", bounds_opt.method, "bound iteration")
        ->required()
        ->check(CLI::IsMember({"qm", "mqm"}));
    bounds->add_option("--init", bounds_opt.init, "initialization (mqm)")
        ->check(CLI::IsMember({"naive", "linear", "nonlinear"}));
    CLI::Option* nmin = bounds->add_option("--noise-min", bounds_opt.noise_min, "noise lower end");
    CLI::Option* nmax = bounds->add_option("--noise-max", bounds_opt.noise_max, "noise upper end");
    bounds->add_option("--epsilon", bounds_opt.epsilon, "sweep stopping threshold")
        ->check(CLI::PositiveNumber);
    bounds->add_option("--max-sweeps", bounds_opt.max_sweeps)->check(CLI::PositiveNumber);
    double delta_value = 0.0;
    CLI::Option* delta_flag =
        bounds->add_option("--delta", delta_value, "pruning margin (default 2*eps*gamma/(1-gamma))");
    bounds->add_option("--t-max", bounds_opt.t_max, "episode horizon for the naive init (0 = unbounded)");
    bounds->add_option("--out", bounds_opt.out, "bounds JSON output path")->required();
    bounds->add_option("--heatmap-out", bounds_opt.heatmap_out, "per-state remaining-actions CSV");

    std::string run_config;
    std::string run_out;
    CLI::App* run = app.add_subcommand("run", "execute a full experiment config");
    run->add_option("--config", run_config, "experiment config JSON")->required();
    run->add_option("--out", run_out, "output directory")->required();

    std::string verify_bundle_path;
    double verify_epsilon = 1e-8;
    std::uint64_t verify_seed = 0;
    CLI::App* verify = app.add_subcommand("verify", "run the invariant suite against a bundle");
    verify->add_option("--bundle", verify_bundle_path, "bundle JSON path")->required();
    verify->add_option("--epsilon", verify_epsilon, "sweep stopping threshold")
        ->check(CLI::PositiveNumber);
    verify->add_option("--seed", verify_seed, "seed for randomized properties");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) {
            run_gen(gen_opt);
        } else if (bounds->parsed()) {
            bounds_opt.has_noise_min = nmin->count() > 0;
            bounds_opt.has_noise_max = nmax->count() > 0;
            if (delta_flag->count() > 0) bounds_opt.delta = delta_value;
            run_bounds(bounds_opt);
        } else if (run->parsed()) {
            run_experiment_cmd(run_config, run_out);
        } else if (verify->parsed()) {
            return run_verify(verify_bundle_path, verify_epsilon, verify_seed);
        }
        return 0;
    } catch (const qm::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 2;
    } catch (const qm::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const qm::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
