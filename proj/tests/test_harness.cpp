#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qmanip/errors.hpp"
#include "qmanip/experiment.hpp"
#include "qmanip/json_io.hpp"

using namespace qm;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.domain.name = "dollar_euro";
    cfg.domain.sbf = {1};
    cfg.methods = {Method::QL, Method::MQM};
    cfg.runs = 2;
    cfg.learn.episodes = 12;
    cfg.learn.t_max = 60;
    cfg.solve = {1e-8, 1000000};
    cfg.smoothing_window = 4;
    cfg.eval_episodes = 4;
    cfg.master_seed = 7;
    cfg.workers = 2;
    return cfg;
}

RunResult synthetic_run(Method method, int run, std::vector<double> returns) {
    RunResult rr;
    rr.method = method;
    rr.run = run;
    for (std::size_t e = 0; e < returns.size(); ++e)
        rr.curve.episodes.push_back({static_cast<int>(e), returns[e], returns[e],
                                     1, 0.0});
    return rr;
}

std::string first_line(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
}

std::string config_for_parsing() {
    return R"({
      "version": 1,
      "domain": {"name": "autogen", "sbf": [1, 5], "noise": [0.0, 0.1],
                 "combination": {"form": "power_of_sum", "coeffs": [1.0, 1.0], "exponent": 3}},
      "methods": ["QL", "QM", "MQM"],
      "runs": 3,
      "learn": {"episodes": 20, "t_max": 30,
                "alpha": {"initial": 0.2, "decay": 1.0, "floor": 0.0},
                "epsilon_explore": {"initial": 1.0, "decay": 0.9, "floor": 0.05}},
      "solve": {"epsilon": 1e-9, "max_sweeps": 500000},
      "prune": {"delta": 0.001},
      "smoothing_window": 5,
      "threshold_fraction": 0.9,
      "eval_episodes": 10,
      "master_seed": 123,
      "workers": 1
    })";
}

} // namespace

TEST_CASE("config parsing honors every field and rejects unknown keys") {
    const ExperimentConfig cfg = experiment_config_from_json(config_for_parsing());
    CHECK(cfg.domain.name == "autogen");
    CHECK(cfg.domain.sbf == std::vector<int>{1, 5});
    CHECK(cfg.domain.noise == std::vector<double>{0.0, 0.1});
    REQUIRE(cfg.domain.combination);
    CHECK(!cfg.domain.combination->linear());
    CHECK(cfg.methods.size() == 3);
    CHECK(cfg.runs == 3);
    CHECK(cfg.learn.alpha.initial == 0.2);
    CHECK(cfg.learn.epsilon_explore.decay == 0.9);
    CHECK(cfg.solve.epsilon == 1e-9);
    REQUIRE(cfg.delta);
    CHECK(*cfg.delta == 0.001);
    CHECK(cfg.smoothing_window == 5);
    CHECK(cfg.master_seed == 123);

    std::string with_typo = config_for_parsing();
    const auto pos = with_typo.find("\"runs\"");
    with_typo.replace(pos, 6, "\"rnus\"");
    CHECK_THROWS_AS(experiment_config_from_json(with_typo), ValidationError);

    // round trip through the resolved serialization
    const ExperimentConfig back = experiment_config_from_json(experiment_config_to_json(cfg));
    CHECK(back.domain.sbf == cfg.domain.sbf);
    CHECK(back.methods == cfg.methods);
    CHECK(back.learn.epsilon_explore.floor == cfg.learn.epsilon_explore.floor);
}

TEST_CASE("config validation catches bad values") {
    const auto parse_patched = [](const std::string& from, const std::string& to) {
        std::string text = config_for_parsing();
        const auto pos = text.find(from);
        REQUIRE(pos != std::string::npos);
        text.replace(pos, from.size(), to);
        return text;
    };
    CHECK_THROWS_AS(experiment_config_from_json(parse_patched("\"version\": 1", "\"version\": 2")),
                    ValidationError);
    CHECK_THROWS_AS(experiment_config_from_json(parse_patched("\"runs\": 3", "\"runs\": 0")),
                    ValidationError);
    CHECK_THROWS_AS(experiment_config_from_json(
                        parse_patched("\"methods\": [\"QL\", \"QM\", \"MQM\"]",
                                      "\"methods\": [\"QL\", \"QL\"]")),
                    ValidationError);
    CHECK_THROWS_AS(experiment_config_from_json(
                        parse_patched("\"methods\": [\"QL\", \"QM\", \"MQM\"]",
                                      "\"methods\": [\"QLX\"]")),
                    ValidationError);
    CHECK_THROWS_AS(experiment_config_from_json(
                        parse_patched("\"epsilon_explore\": {\"initial\": 1.0",
                                      "\"epsilon_explore\": {\"initial\": 0.5")),
                    ValidationError);
}

TEST_CASE("smoothing is a trailing moving average") {
    LearningCurve curve;
    for (int e = 0; e < 5; ++e)
        curve.episodes.push_back({e, static_cast<double>(e), 0.0, 1, 0.0});
    const std::vector<double> smoothed = smooth_returns(curve, 3);
    CHECK(smoothed[0] == 0.0);
    CHECK(smoothed[1] == doctest::Approx(0.5));
    CHECK(smoothed[2] == doctest::Approx(1.0));
    CHECK(smoothed[3] == doctest::Approx(2.0));
    CHECK(smoothed[4] == doctest::Approx(3.0));
}

TEST_CASE("confidence intervals collapse for single and constant runs") {
    ExperimentConfig cfg = tiny_config();
    cfg.smoothing_window = 1;
    cfg.methods = {Method::QL};

    std::vector<RunResult> single{synthetic_run(Method::QL, 0, {1.0, 2.0})};
    const Summary one = summarize(single, cfg);
    REQUIRE(one.per_episode.size() == 2);
    CHECK(one.per_episode[0].ci_low == one.per_episode[0].mean);
    CHECK(one.per_episode[0].ci_high == one.per_episode[0].mean);

    std::vector<RunResult> constant;
    for (int r = 0; r < 30; ++r) constant.push_back(synthetic_run(Method::QL, r, {0.7, 0.7}));
    const Summary flat = summarize(constant, cfg);
    CHECK(flat.per_episode[0].mean == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(flat.per_episode[0].ci_high - flat.per_episode[0].ci_low == 0.0);
}

TEST_CASE("confidence intervals match the closed form") {
    ExperimentConfig cfg = tiny_config();
    cfg.smoothing_window = 1;
    cfg.methods = {Method::QL};

    // 30 runs: normal-approximation quantile
    std::vector<RunResult> results;
    std::vector<double> values;
    for (int r = 0; r < 30; ++r) {
        const double v = 0.1 * r;
        values.push_back(v);
        results.push_back(synthetic_run(Method::QL, r, {v}));
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= 30.0;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / 29.0);
    const double half = 1.959963984540054 * sd / std::sqrt(30.0);

    const Summary s = summarize(results, cfg);
    CHECK(std::abs(s.per_episode[0].mean - mean) <= 1e-12);
    CHECK(std::abs(s.per_episode[0].ci_low - (mean - half)) <= 1e-12);
    CHECK(std::abs(s.per_episode[0].ci_high - (mean + half)) <= 1e-12);

    // 5 runs: t quantile with 4 degrees of freedom
    std::vector<RunResult> small;
    const double vals[5] = {1.0, 2.0, 4.0, 8.0, 16.0};
    double mean5 = 0.0;
    for (int r = 0; r < 5; ++r) {
        small.push_back(synthetic_run(Method::QL, r, {vals[r]}));
        mean5 += vals[r];
    }
    mean5 /= 5.0;
    double var5 = 0.0;
    for (double v : vals) var5 += (v - mean5) * (v - mean5);
    const double half5 = 2.776445105197779 * std::sqrt(var5 / 4.0) / std::sqrt(5.0);
    const Summary s5 = summarize(small, cfg);
    CHECK(std::abs(s5.per_episode[0].ci_high - (mean5 + half5)) <= 1e-12);
}

TEST_CASE("experiment outputs conform to the schema") {
    const ExperimentConfig cfg = tiny_config();
    const std::vector<RunResult> results = run_experiment(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "qmanip_schema_test";
    std::filesystem::remove_all(dir);
    export_results(results, cfg, dir);

    CHECK(first_line(dir / "curves.csv") == "method,run,episode,return,smoothed");
    CHECK(first_line(dir / "summary.csv") ==
          "method,episode,mean_return,ci_low,ci_high,pruned_fraction_mean,pruned_fraction_std,"
          "episodes_to_threshold_mean,episodes_to_threshold_std,runs_reaching_threshold");
    CHECK(first_line(dir / "pruning_heatmap.csv") ==
          "method,run,state_index,row,col,remaining_actions");
    CHECK(first_line(dir / "timings.csv") ==
          "method,run,bound_seconds,bound_seconds_mean,bound_seconds_std");

    // one curve row per (method, run, episode)
    std::ifstream curves(dir / "curves.csv");
    std::string line;
    int rows = 0;
    int timing_rows = 0;
    std::getline(curves, line);
    while (std::getline(curves, line)) ++rows;
    CHECK(rows == 2 * cfg.runs * cfg.learn.episodes);

    // timings carry bound-iteration methods only
    std::ifstream timings(dir / "timings.csv");
    std::getline(timings, line);
    while (std::getline(timings, line)) {
        ++timing_rows;
        CHECK(line.rfind("MQM,", 0) == 0);
    }
    CHECK(timing_rows == cfg.runs);

    CHECK(std::filesystem::exists(dir / "config.json"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("identical configs produce byte-identical outputs except timings") {
    const ExperimentConfig cfg = tiny_config();
    const auto base = std::filesystem::temp_directory_path() / "qmanip_determinism";
    std::filesystem::remove_all(base);
    export_results(run_experiment(cfg), cfg, base / "a");
    export_results(run_experiment(cfg), cfg, base / "b");
    for (const char* name : {"curves.csv", "summary.csv", "pruning_heatmap.csv", "config.json"})
        CHECK(read_text_file(base / "a" / name) == read_text_file(base / "b" / name));
    std::filesystem::remove_all(base);
}

TEST_CASE("methods share the learning seed within a run") {
    const ExperimentConfig cfg = tiny_config();
    const std::vector<RunResult> results = run_experiment(cfg);
    for (int run = 0; run < cfg.runs; ++run) {
        std::uint64_t seed = 0;
        bool seen = false;
        for (const RunResult& rr : results) {
            if (rr.run != run) continue;
            if (!seen) {
                seed = rr.seed;
                seen = true;
            }
            CHECK(rr.seed == seed);
            CHECK(rr.oracle_return == doctest::Approx(1.2).epsilon(1e-9));
        }
        CHECK(seen);
    }
}

TEST_CASE("a zero-valued combination yields flat zero curves") {
    ExperimentConfig cfg;
    cfg.domain.name = "autogen";
    cfg.domain.combination = CombinationSpec{LinearCombination{{0.0, 0.0}}, {}};
    cfg.methods = {Method::QL};
    cfg.runs = 1;
    cfg.learn.episodes = 10;
    cfg.learn.t_max = 30;
    cfg.master_seed = 5;
    cfg.workers = 1;
    const std::vector<RunResult> results = run_experiment(cfg);
    REQUIRE(results.size() == 1);
    for (const EpisodeRecord& rec : results[0].curve.episodes)
        CHECK(rec.undiscounted_return == 0.0);
    CHECK(results[0].oracle_return == 0.0);
}

TEST_CASE("run results are reproducible across invocations") {
    const ExperimentConfig cfg = tiny_config();
    const std::vector<RunResult> a = run_experiment(cfg);
    const std::vector<RunResult> b = run_experiment(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].method == b[i].method);
        CHECK(a[i].run == b[i].run);
        CHECK(a[i].pruned_fraction == b[i].pruned_fraction);
        CHECK(a[i].episodes_to_threshold == b[i].episodes_to_threshold);
        REQUIRE(a[i].curve.episodes.size() == b[i].curve.episodes.size());
        for (std::size_t e = 0; e < a[i].curve.episodes.size(); ++e)
            CHECK(a[i].curve.episodes[e].undiscounted_return ==
                  b[i].curve.episodes[e].undiscounted_return);
    }
}

TEST_CASE("solver failures carry the run context") {
    ExperimentConfig cfg = tiny_config();
    cfg.solve.max_sweeps = 1;
    try {
        run_experiment(cfg);
        FAIL("expected SolverError");
    } catch (const SolverError& e) {
        CHECK(std::string(e.what()).find("run ") != std::string::npos);
        CHECK(std::string(e.what()).find("sbf 1") != std::string::npos);
    }
}

TEST_CASE("multi-setting exports write one directory per setting") {
    ExperimentConfig cfg = tiny_config();
    cfg.domain.sbf = {1, 2};
    cfg.runs = 1;
    cfg.learn.episodes = 5;
    const std::vector<RunResult> results = run_experiment(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "qmanip_settings";
    std::filesystem::remove_all(dir);
    export_results(results, cfg, dir);
    CHECK(std::filesystem::exists(dir / "sbf1_noise0" / "curves.csv"));
    CHECK(std::filesystem::exists(dir / "sbf2_noise0" / "curves.csv"));
    std::filesystem::remove_all(dir);
}
