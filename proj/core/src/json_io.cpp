#include "qmanip/json_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "qmanip/errors.hpp"

namespace qm {

namespace {

using nlohmann::json;

json rewards_to_json_array(const RewardTable& rewards) {
    json arr = json::array();
    for (int s = 0; s < rewards.n_states; ++s)
        for (int a = 0; a < rewards.n_actions; ++a)
            for (const RewardEntry& e : rewards.row(s, a))
                arr.push_back({{"s", s}, {"a", a}, {"sp", e.next_state}, {"r", e.value}});
    return arr;
}

// Maps triplets onto the MDP support. Off-support entries are appended at
// the row end and unfilled support slots stay NaN, so validate() can report
// them instead of the loader throwing.
RewardTable rewards_from_json_array(const json& arr, const TabularMdp& mdp) {
    RewardTable rt;
    rt.n_states = mdp.n_states;
    rt.n_actions = mdp.n_actions;
    rt.rows.resize(mdp.transitions.size());
    for (std::size_t i = 0; i < mdp.transitions.size(); ++i) {
        rt.rows[i].reserve(mdp.transitions[i].size());
        for (const TransitionEntry& e : mdp.transitions[i])
            rt.rows[i].push_back({e.next_state, std::numeric_limits<double>::quiet_NaN()});
    }
    for (const json& item : arr) {
        const int s = item.at("s").get<int>();
        const int a = item.at("a").get<int>();
        const int sp = item.at("sp").get<int>();
        const double r = item.at("r").get<double>();
        if (s < 0 || s >= mdp.n_states || a < 0 || a >= mdp.n_actions)
            throw ValidationError("reward entry indexes outside the MDP");
        auto& row = rt.rows[mdp.row_index(s, a)];
        const std::size_t support = mdp.row(s, a).size();
        bool placed = false;
        for (std::size_t k = 0; k < support; ++k) {
            if (row[k].next_state == sp && std::isnan(row[k].value)) {
                row[k].value = r;
                placed = true;
                break;
            }
        }
        if (!placed) row.push_back({sp, r});
    }
    return rt;
}

json mdp_to_json_object(const TabularMdp& mdp, const RewardTable& rewards) {
    json out;
    out["n_states"] = mdp.n_states;
    out["n_actions"] = mdp.n_actions;
    out["gamma"] = mdp.gamma;
    out["initial_state"] = mdp.initial_state;
    json terminal = json::array();
    for (int s = 0; s < mdp.n_states; ++s)
        if (mdp.is_terminal(s)) terminal.push_back(s);
    out["terminal"] = std::move(terminal);

    json transitions = json::array();
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            const auto& row = mdp.row(s, a);
            if (row.empty()) continue;
            json next = json::array();
            for (const TransitionEntry& e : row)
                next.push_back({{"sp", e.next_state}, {"p", e.prob}});
            transitions.push_back({{"s", s}, {"a", a}, {"next", std::move(next)}});
        }
    }
    out["transitions"] = std::move(transitions);
    out["rewards"] = rewards_to_json_array(rewards);
    return out;
}

std::pair<TabularMdp, RewardTable> mdp_from_json_object(const json& in) {
    TabularMdp mdp;
    mdp.n_states = in.at("n_states").get<int>();
    mdp.n_actions = in.at("n_actions").get<int>();
    mdp.gamma = in.at("gamma").get<double>();
    mdp.initial_state = in.at("initial_state").get<int>();
    if (mdp.n_states < 1 || mdp.n_actions < 1)
        throw ValidationError("n_states and n_actions must be positive");
    mdp.terminal.assign(static_cast<std::size_t>(mdp.n_states), 0);
    for (const json& t : in.at("terminal")) {
        const int s = t.get<int>();
        if (s < 0 || s >= mdp.n_states) throw ValidationError("terminal state outside the MDP");
        mdp.terminal[static_cast<std::size_t>(s)] = 1;
    }
    mdp.transitions.resize(static_cast<std::size_t>(mdp.n_states) *
                           static_cast<std::size_t>(mdp.n_actions));
    for (const json& row : in.at("transitions")) {
        const int s = row.at("s").get<int>();
        const int a = row.at("a").get<int>();
        if (s < 0 || s >= mdp.n_states || a < 0 || a >= mdp.n_actions)
            throw ValidationError("transition row indexes outside the MDP");
        auto& entries = mdp.transitions[mdp.row_index(s, a)];
        if (!entries.empty()) throw ValidationError("duplicate transition row for (s=" +
                                                    std::to_string(s) + ", a=" + std::to_string(a) + ")");
        for (const json& e : row.at("next")) {
            const int sp = e.at("sp").get<int>();
            if (sp < 0 || sp >= mdp.n_states)
                throw ValidationError("transition successor outside the MDP");
            entries.push_back({sp, e.at("p").get<double>()});
        }
    }
    RewardTable rewards = rewards_from_json_array(in.at("rewards"), mdp);
    return {std::move(mdp), std::move(rewards)};
}

json combination_to_json(const CombinationSpec& spec) {
    json out;
    if (spec.linear()) {
        out["form"] = "linear";
        out["coeffs"] = std::get<LinearCombination>(spec.form).coeffs;
    } else {
        const auto& pos = std::get<PowerOfSumCombination>(spec.form);
        out["form"] = "power_of_sum";
        out["coeffs"] = pos.coeffs;
        out["exponent"] = pos.exponent;
    }
    if (spec.noise)
        out["noise"] = {{"n_min", spec.noise->n_min}, {"n_max", spec.noise->n_max}};
    return out;
}

CombinationSpec combination_from_json(const json& in) {
    CombinationSpec spec;
    const std::string form = in.at("form").get<std::string>();
    const std::vector<double> coeffs = in.at("coeffs").get<std::vector<double>>();
    if (form == "linear") {
        spec.form = LinearCombination{coeffs};
    } else if (form == "power_of_sum") {
        PowerOfSumCombination pos;
        pos.coeffs = coeffs;
        pos.exponent = in.at("exponent").get<int>();
        if (pos.exponent < 1) throw ValidationError("combination exponent must be positive");
        spec.form = std::move(pos);
    } else {
        throw ValidationError("unknown combination form: " + form);
    }
    if (in.contains("noise") && !in.at("noise").is_null()) {
        NoiseRange noise;
        noise.n_min = in.at("noise").at("n_min").get<double>();
        noise.n_max = in.at("noise").at("n_max").get<double>();
        if (!(noise.n_min <= 0.0 && 0.0 <= noise.n_max))
            throw ValidationError("noise range must straddle zero");
        spec.noise = noise;
    }
    return spec;
}

json qtable_to_json(const QTable& q) {
    json rows = json::array();
    for (int s = 0; s < q.n_states; ++s) {
        json row = json::array();
        for (int a = 0; a < q.n_actions; ++a) row.push_back(q(s, a));
        rows.push_back(std::move(row));
    }
    return rows;
}

QTable qtable_from_json(const json& rows) {
    const int n_states = static_cast<int>(rows.size());
    if (n_states == 0) throw ValidationError("empty Q table");
    const int n_actions = static_cast<int>(rows.at(0).size());
    QTable q = QTable::zeros(n_states, n_actions);
    for (int s = 0; s < n_states; ++s) {
        const json& row = rows.at(static_cast<std::size_t>(s));
        if (static_cast<int>(row.size()) != n_actions)
            throw ValidationError("ragged Q table rows");
        for (int a = 0; a < n_actions; ++a) q(s, a) = row.at(static_cast<std::size_t>(a)).get<double>();
    }
    return q;
}

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what());
    }
}

template <typename Fn>
auto guarded(Fn fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("JSON schema violation: ") + e.what());
    }
}

} // namespace

std::string mdp_to_json(const TabularMdp& mdp, const RewardTable& rewards) {
    return mdp_to_json_object(mdp, rewards).dump(2) + "\n";
}

std::pair<TabularMdp, RewardTable> mdp_from_json(const std::string& text) {
    const json in = parse(text);
    return guarded([&] { return mdp_from_json_object(in); });
}

std::string bundle_to_json(const DomainBundle& bundle) {
    const RewardTable target = combine_rewards(bundle.source_rewards, bundle.combination);
    json out = mdp_to_json_object(bundle.mdp, target);
    json extras;
    extras["name"] = bundle.name;
    json sources = json::array();
    for (const RewardTable& src : bundle.source_rewards)
        sources.push_back(rewards_to_json_array(src));
    extras["source_rewards"] = std::move(sources);
    extras["combination"] = combination_to_json(bundle.combination);
    extras["labels"] = bundle.labels;
    if (bundle.layout)
        extras["layout"] = {{"rows", bundle.layout->rows}, {"cols", bundle.layout->cols}};
    else
        extras["layout"] = nullptr;
    out["bundle"] = std::move(extras);
    return out.dump(2) + "\n";
}

DomainBundle bundle_from_json(const std::string& text) {
    const json in = parse(text);
    return guarded([&] {
        auto [mdp, target] = mdp_from_json_object(in);
        (void)target;  // derivable from the sources; kept for plain-MDP consumers
        const json& extras = in.at("bundle");
        DomainBundle bundle;
        bundle.mdp = std::move(mdp);
        bundle.name = extras.at("name").get<std::string>();
        for (const json& src : extras.at("source_rewards"))
            bundle.source_rewards.push_back(rewards_from_json_array(src, bundle.mdp));
        bundle.combination = combination_from_json(extras.at("combination"));
        bundle.labels = extras.at("labels").get<std::vector<std::string>>();
        if (extras.contains("layout") && !extras.at("layout").is_null())
            bundle.layout = GridLayout{extras.at("layout").at("rows").get<int>(),
                                       extras.at("layout").at("cols").get<int>()};
        return bundle;
    });
}

std::string bounds_report_to_json(const BoundsReport& report) {
    json out;
    out["method"] = report.method;
    out["init"] = report.init;
    out["delta"] = report.delta;
    out["epsilon"] = report.epsilon;
    if (report.noise)
        out["noise"] = {{"n_min", report.noise->n_min}, {"n_max", report.noise->n_max}};
    else
        out["noise"] = nullptr;
    out["iterations"] = report.bounds.iterations;
    out["converged"] = report.bounds.converged;
    out["residual"] = report.bounds.residual;
    out["approximate"] = report.bounds.approximate;
    out["tag"] = report.bounds.tag;
    out["ub"] = qtable_to_json(report.bounds.ub);
    out["lb"] = qtable_to_json(report.bounds.lb);
    out["mask"] = report.mask.allowed;
    out["stats"] = {{"pruned_count", report.stats.pruned_count},
                    {"pruned_fraction", report.stats.pruned_fraction},
                    {"per_state_remaining", report.stats.per_state_remaining}};
    out["bound_seconds"] = report.bound_seconds;
    return out.dump(2) + "\n";
}

BoundsReport bounds_report_from_json(const std::string& text) {
    const json in = parse(text);
    return guarded([&] {
        BoundsReport report;
        report.method = in.at("method").get<std::string>();
        report.init = in.at("init").get<std::string>();
        report.delta = in.at("delta").get<double>();
        report.epsilon = in.at("epsilon").get<double>();
        if (in.contains("noise") && !in.at("noise").is_null())
            report.noise = NoiseRange{in.at("noise").at("n_min").get<double>(),
                                      in.at("noise").at("n_max").get<double>()};
        report.bounds.iterations = in.at("iterations").get<int>();
        report.bounds.converged = in.at("converged").get<bool>();
        report.bounds.residual = in.at("residual").get<double>();
        report.bounds.approximate = in.at("approximate").get<bool>();
        report.bounds.tag = in.at("tag").get<std::string>();
        report.bounds.ub = qtable_from_json(in.at("ub"));
        report.bounds.lb = qtable_from_json(in.at("lb"));
        report.mask.allowed = in.at("mask").get<std::vector<std::vector<int>>>();
        report.stats.pruned_count = in.at("stats").at("pruned_count").get<int>();
        report.stats.pruned_fraction = in.at("stats").at("pruned_fraction").get<double>();
        report.stats.per_state_remaining =
            in.at("stats").at("per_state_remaining").get<std::vector<int>>();
        report.bound_seconds = in.at("bound_seconds").get<double>();
        return report;
    });
}

std::string per_state_remaining_csv(const PruningStats& stats,
                                    const std::optional<GridLayout>& layout) {
    std::ostringstream out;
    out << "state_index,row,col,remaining_actions\n";
    for (std::size_t s = 0; s < stats.per_state_remaining.size(); ++s) {
        int row = -1;
        int col = -1;
        if (layout && layout->cols > 0) {
            row = static_cast<int>(s) / layout->cols;
            col = static_cast<int>(s) % layout->cols;
        }
        out << s << ',' << row << ',' << col << ',' << stats.per_state_remaining[s] << '\n';
    }
    return out.str();
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path.string());
    return buffer.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace qm
