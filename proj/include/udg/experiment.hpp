#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "buffer_io.hpp"
#include "config.hpp"
#include "pipeline.hpp"

namespace udg {

using json = nlohmann::ordered_json;

struct BufferCheck {
    std::string buffer_id;
    double offline_return = 0.0;
    double behavior_return = 0.0;
};

struct TaskComparison {
    TaskSpec task;
    TaskResult udg;
    double baseline_offline = 0.0;   // trained on the supervised baseline's buffer
    double baseline_behavior = 0.0;  // the baseline policy itself
    double random_return = 0.0;      // a freshly initialized policy
    std::vector<std::size_t> top2;
    double top2_mixed = 0.0;
    double all_mixed = 0.0;
    std::vector<BufferCheck> per_buffer;  // pi_hat vs behavior on every generated buffer
};

struct ExperimentResult {
    UdgRun run;
    std::vector<double> min_pairwise;  // exact, held-out occupancies; entry r = after round r
    PolicyParams baseline;
    Buffer baseline_buffer;
    std::vector<TaskComparison> tasks;
    GapReport gap;
    RegretReport regret_diverse;
    RegretReport regret_baseline;
};

inline OccupancyOptions experiment_occupancy(const ExperimentConfig& cfg)
{
    return diversity_occupancy(cfg.udg.spec, cfg.udg.diversity);
}

/// Held-out occupancies of an ensemble, one fixed seed per member.
inline std::vector<EmpiricalMeasure> heldout_occupancies(const std::vector<PolicyParams>& ensemble,
                                                         const ExperimentConfig& cfg)
{
    return ensemble_occupancies(ensemble, cfg.udg.spec, experiment_occupancy(cfg), cfg.occupancy_episodes,
                                derive_seed(cfg.udg.seed, 0x4E1D));
}

using ProgressHook = std::function<void(const std::string&)>;

/// The full experiment: ensemble training, generate, select and train offline on every task, the
/// supervised baseline, buffer mixing, the gap report and the regret report.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressHook& progress = {})
{
    const auto say = [&](const std::string& msg) {
        if (progress) progress(msg);
    };
    const UdgConfig u = cfg.udg.seeded();
    const EnvSpec& spec = u.spec;
    ExperimentResult res;

    auto ensemble = train_diverse(spec, u.diversity, u.diversity_cem, [&](int round, const auto& ens) {
        res.min_pairwise.push_back(min_offdiagonal(pairwise_w1(heldout_occupancies(ens, cfg))));
        say("round " + std::to_string(round) + " min pairwise W1 " + format_double(res.min_pairwise.back()));
    });
    auto buffers = generate_buffers(ensemble, spec, u.buffer_episodes, derive_seed(u.seed, 4));
    res.run = run_udg_on(std::move(ensemble), std::move(buffers), cfg.udg);
    say("algorithm run complete");

    res.baseline = train_supervised(spec, cfg.baseline_task, u.diversity_cem, u.diversity, cfg.baseline_rounds);
    res.baseline.id = static_cast<int>(res.run.ensemble.size());
    res.baseline_buffer = rollout(res.baseline, spec, nullptr, u.buffer_episodes, derive_seed(u.seed, 5));
    say("baseline trained");

    std::vector<std::size_t> all(res.run.buffers.size());
    std::iota(all.begin(), all.end(), 0);
    const Buffer all_mixed = mix_buffers(res.run.buffers, all);
    PolicyParams random_policy = initial_ensemble(spec, u.diversity).front();
    for (const auto& tr : res.run.results) {
        TaskComparison cmp;
        cmp.task = tr.task;
        cmp.udg = tr;
        const auto eval_seed = task_eval_seed(u.seed, tr.task);
        const auto eval = [&](const PolicyParams& p) {
            return evaluate_policy(p, spec, tr.task, u.eval_episodes, eval_seed).mean;
        };
        cmp.baseline_offline = eval(offline_on_buffer(res.baseline_buffer, tr.task, spec, u.offline));
        cmp.baseline_behavior = eval(res.baseline);
        cmp.random_return = eval(random_policy);
        cmp.top2 = top_indices(tr.scores, 2);
        cmp.top2_mixed = eval(offline_on_buffer(mix_buffers(res.run.buffers, cmp.top2), tr.task, spec, u.offline));
        cmp.all_mixed = eval(offline_on_buffer(all_mixed, tr.task, spec, u.offline));
        for (std::size_t i = 0; i < res.run.buffers.size(); ++i) {
            const double off = i == tr.selected ? tr.offline.mean
                                                : eval(offline_on_buffer(res.run.buffers[i], tr.task, spec, u.offline));
            cmp.per_buffer.push_back({"udg" + std::to_string(i), off, eval(res.run.ensemble[i])});
        }
        cmp.per_buffer.push_back({"baseline", cmp.baseline_offline, cmp.baseline_behavior});
        say("task " + tr.task.to_string() + " compared");
        res.tasks.push_back(std::move(cmp));
    }

    OracleOptions oracle = cfg.oracle;
    oracle.seed = derive_seed(u.seed, 6);
    std::vector<LabeledBuffer> labeled;
    for (std::size_t i = 0; i < res.run.buffers.size(); ++i)
        labeled.push_back({"udg" + std::to_string(i), res.run.buffers[i], res.run.ensemble[i]});
    labeled.push_back({"baseline", res.baseline_buffer, res.baseline});
    {
        const auto plan = std::make_shared<const GridPlan>(grid_value_iteration(spec, cfg.gap_task, oracle.planner));
        labeled.push_back({"oracle", rollout(GreedyActor{plan, 0.0}, spec, nullptr, u.buffer_episodes,
                                             derive_seed(u.seed, 7)),
                           std::nullopt});
    }
    res.gap = verify_gap_bound(labeled, cfg.gap_task, spec, oracle, u.offline, experiment_occupancy(cfg));
    say("gap report complete");

    const auto occ = experiment_occupancy(cfg);
    res.regret_diverse = regret_report(heldout_occupancies(res.run.ensemble, cfg), u.tasks, spec, oracle, occ);
    res.regret_baseline = regret_report(heldout_occupancies({res.baseline}, cfg), u.tasks, spec, oracle, occ);
    say("regret report complete");
    return res;
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const ReturnStats& r) { return {{"mean", r.mean}, {"std", r.std}}; }

inline json to_json(const GapReport& rep)
{
    json rows = json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"buffer_id", r.buffer_id},
                        {"w1_to_optimal", r.w1_to_optimal},
                        {"w1_model_vs_true", r.w1_model},
                        {"offline_return", r.offline_return},
                        {"offline_std", r.offline_std},
                        {"behavior_return", r.behavior_return},
                        {"optimal_return", r.optimal_return},
                        {"gap", r.gap},
                        {"epsilon_u", r.epsilon_u},
                        {"support_diameter", r.support_diameter},
                        {"model_return", r.model_return}});
    return {{"task", rep.task.to_string()},
            {"rows", rows},
            {"c", rep.c},
            {"C_analytic", rep.C},
            {"C_fitted", rep.fitted_C},
            {"spearman_w1_vs_return", rep.spearman_d2_return},
            {"oracle_noise_floor", rep.oracle_noise_floor}};
}

inline json to_json(const RegretReport& rep)
{
    json rows = json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"task", r.task.to_string()},
                        {"best_member", r.best_member},
                        {"regret", r.regret},
                        {"noise_floor", r.noise_floor}});
    json out = {{"rows", rows}, {"worst_case_regret_lower_bound", rep.worst_case_regret}};
    out["surrogate_min_pairwise"] = std::isfinite(rep.surrogate) ? json(rep.surrogate) : json(nullptr);
    return out;
}

inline json to_json(const ExperimentResult& res)
{
    json tasks = json::array();
    for (const auto& t : res.tasks) {
        json checks = json::array();
        for (const auto& c : t.per_buffer)
            checks.push_back(
                {{"buffer_id", c.buffer_id}, {"offline_return", c.offline_return}, {"behavior_return", c.behavior_return}});
        tasks.push_back({{"task", t.task.to_string()},
                         {"selected", t.udg.selected},
                         {"scores", t.udg.scores},
                         {"udg_offline", to_json(t.udg.offline)},
                         {"udg_behavior", to_json(t.udg.behavior)},
                         {"baseline_offline", t.baseline_offline},
                         {"baseline_behavior", t.baseline_behavior},
                         {"random_policy", t.random_return},
                         {"top2", t.top2},
                         {"top2_mixed", t.top2_mixed},
                         {"all_mixed", t.all_mixed},
                         {"per_buffer", checks}});
    }
    return {{"min_pairwise_w1_by_round", res.min_pairwise},
            {"tasks", tasks},
            {"gap", to_json(res.gap)},
            {"regret_diverse", to_json(res.regret_diverse)},
            {"regret_baseline", to_json(res.regret_baseline)}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

/// Writes policies, buffers and report.json under `dir`.
inline void save_experiment(const ExperimentResult& res, const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir / "policies");
    fs::create_directories(dir / "buffers");
    for (std::size_t i = 0; i < res.run.ensemble.size(); ++i) {
        save_policy((dir / "policies" / ("policy_" + std::to_string(i) + ".txt")).string(), res.run.ensemble[i]);
        save_buffer((dir / "buffers" / ("buffer_" + std::to_string(i) + ".txt")).string(), res.run.buffers[i]);
    }
    save_policy((dir / "policies" / "baseline.txt").string(), res.baseline);
    save_buffer((dir / "buffers" / "baseline.txt").string(), res.baseline_buffer);
    for (const auto& t : res.tasks) {
        std::string name = t.task.to_string();
        std::replace(name.begin(), name.end(), ':', '_');
        save_policy((dir / "policies" / ("offline_" + name + ".txt")).string(), t.udg.policy);
    }
    write_text(dir / "report.json", to_json(res).dump(2) + "\n");
}

} // namespace udg
