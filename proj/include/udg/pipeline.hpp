#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "diversity.hpp"
#include "offline.hpp"
#include "planner.hpp"
#include "transport.hpp"

namespace udg {

struct Selection {
    std::size_t index = 0;
    std::vector<double> scores;
};

/// Relabels every buffer with `task` and picks the highest average
/// discounted return; ties go to the lowest index.
inline Selection select_buffer(const std::vector<Buffer>& buffers, const TaskSpec& task, double gamma, double dt)
{
    require(!buffers.empty(), "select_buffer: no buffers");
    Selection sel;
    for (const auto& b : buffers) {
        require(b.episode_count() >= 1, "select_buffer: buffer without episodes");
        sel.scores.push_back(average_return(relabel_buffer(b, task, dt), gamma));
    }
    for (std::size_t i = 1; i < sel.scores.size(); ++i)
        if (sel.scores[i] > sel.scores[sel.index]) sel.index = i;
    return sel;
}

/// Concatenation of the chosen buffers, keeping episode boundaries and the
/// policy_id of every transition.
inline Buffer mix_buffers(const std::vector<Buffer>& buffers, const std::vector<std::size_t>& ids)
{
    require(!ids.empty(), "mix_buffers: no ids");
    Buffer out;
    out.env_id = buffers.at(ids.front()).env_id;
    out.meta.seed = buffers[ids.front()].meta.seed;
    out.meta.reward_desc = buffers[ids.front()].meta.reward_desc;
    for (std::size_t id : ids) {
        const Buffer& b = buffers.at(id);
        require(b.env_id == out.env_id, "mix_buffers: environment mismatch");
        if (b.meta.reward_desc != out.meta.reward_desc) out.meta.reward_desc = "mixed";
        const std::size_t offset = out.transitions.size();
        for (std::size_t e : b.episode_starts) out.episode_starts.push_back(offset + e);
        out.transitions.insert(out.transitions.end(), b.transitions.begin(), b.transitions.end());
        for (int p : b.meta.policy_ids)
            if (std::find(out.meta.policy_ids.begin(), out.meta.policy_ids.end(), p) == out.meta.policy_ids.end())
                out.meta.policy_ids.push_back(p);
    }
    return out;
}

/// Indices of the `n` best scores, best first (ties by lower index).
inline std::vector<std::size_t> top_indices(const std::vector<double>& scores, std::size_t n)
{
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    idx.resize(std::min(n, idx.size()));
    return idx;
}

/// Average ranks (1-based) with ties sharing the mean rank.
inline std::vector<double> average_ranks(const std::vector<double>& x)
{
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> rank(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
        i = j + 1;
    }
    return rank;
}

/// Spearman rank correlation (Pearson on average ranks). NaN if either
/// input is constant.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y)
{
    require(x.size() == y.size() && x.size() >= 2, "spearman: need two equal-length samples of size >= 2");
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Algorithm orchestration

struct UdgConfig {
    EnvSpec spec = point_mass_env();
    DiversityConfig diversity;
    CemConfig diversity_cem{32, 0.25, 10, 1.0, 3, 0};
    OfflineConfig offline;
    std::vector<TaskSpec> tasks;
    int buffer_episodes = 10;
    int eval_episodes = 20;
    std::uint64_t seed = 0;

    /// Propagates the master seed into every sub-configuration.
    UdgConfig seeded() const
    {
        UdgConfig c = *this;
        c.diversity.seed = derive_seed(seed, 1);
        c.diversity_cem.seed = derive_seed(seed, 2);
        c.offline.seed = derive_seed(seed, 3);
        return c;
    }
};

struct TaskResult {
    TaskSpec task;
    std::size_t selected = 0;
    std::vector<double> scores;
    PolicyParams policy;
    ReturnStats offline;   // pi_hat in the true environment
    ReturnStats behavior;  // the selected buffer's generating policy
};

struct UdgRun {
    std::vector<PolicyParams> ensemble;
    std::vector<Buffer> buffers;
    std::vector<TaskResult> results;
};

/// One buffer per ensemble member, collected without task reward.
inline std::vector<Buffer> generate_buffers(const std::vector<PolicyParams>& ensemble, const EnvSpec& spec,
                                            int episodes, std::uint64_t seed)
{
    std::vector<Buffer> out;
    for (std::size_t i = 0; i < ensemble.size(); ++i)
        out.push_back(rollout(ensemble[i], spec, nullptr, episodes, derive_seed(seed, 0x6E4, i)));
    return out;
}

/// Seed used to evaluate every policy on a task, shared so comparisons on
/// one task use common random numbers.
inline std::uint64_t task_eval_seed(std::uint64_t seed, const TaskSpec& task)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : task.to_string()) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
    return derive_seed(seed, 0xE7A1, h);
}

/// Offline training of a policy on `buf` relabeled with `task`.
inline PolicyParams offline_on_buffer(const Buffer& buf, const TaskSpec& task, const EnvSpec& spec,
                                      const OfflineConfig& cfg)
{
    return offline_train(relabel_buffer(buf, task, spec.dt), task, spec, cfg);
}

/// Train the ensemble once, then per task: relabel, select, train offline
/// on the selected buffer and evaluate in the true environment.
inline UdgRun run_udg_on(std::vector<PolicyParams> ensemble, std::vector<Buffer> buffers, const UdgConfig& config)
{
    const UdgConfig cfg = config.seeded();
    UdgRun run{std::move(ensemble), std::move(buffers), {}};
    for (const auto& task : cfg.tasks) {
        TaskResult res;
        res.task = task;
        auto sel = select_buffer(run.buffers, task, cfg.spec.gamma, cfg.spec.dt);
        res.selected = sel.index;
        res.scores = std::move(sel.scores);
        res.policy = offline_on_buffer(run.buffers[res.selected], task, cfg.spec, cfg.offline);
        res.policy.id = run.ensemble[res.selected].id;
        const auto eval_seed = task_eval_seed(cfg.seed, task);
        res.offline = evaluate_policy(res.policy, cfg.spec, task, cfg.eval_episodes, eval_seed);
        res.behavior = evaluate_policy(run.ensemble[res.selected], cfg.spec, task, cfg.eval_episodes, eval_seed);
        run.results.push_back(std::move(res));
    }
    return run;
}

inline UdgRun run_udg(const UdgConfig& config, const RoundCallback& on_round = {})
{
    const UdgConfig cfg = config.seeded();
    auto ensemble = train_diverse(cfg.spec, cfg.diversity, cfg.diversity_cem, on_round);
    auto buffers = generate_buffers(ensemble, cfg.spec, cfg.buffer_episodes, derive_seed(cfg.seed, 4));
    return run_udg_on(std::move(ensemble), std::move(buffers), config);
}

// ---------------------------------------------------------------------------
// Oracle-based verification

struct OracleOptions {
    GridPlanner planner;
    int rollouts = 50;
    int eval_episodes = 20;
    std::uint64_t seed = 0;
};

/// Planner solution plus its occupancy estimate and sampling noise floor.
struct Oracle {
    std::shared_ptr<const GridPlan> plan;
    Buffer rollouts;
    EmpiricalMeasure occupancy;
    double noise_floor = 0.0;  // W1 between two independent occupancy estimates
    ReturnStats value;
};

inline Oracle make_oracle(const EnvSpec& spec, const TaskSpec& task, const OracleOptions& opt,
                          const OccupancyOptions& occ)
{
    Oracle o;
    o.plan = std::make_shared<const GridPlan>(grid_value_iteration(spec, task, opt.planner));
    const GreedyActor actor{o.plan, 0.0};
    o.rollouts = rollout(actor, spec, task_hook(task, spec.dt), opt.rollouts, derive_seed(opt.seed, 0x0AC1));
    o.occupancy = occupancy_from_buffer(o.rollouts, occ);
    const Buffer again = rollout(actor, spec, nullptr, opt.rollouts, derive_seed(opt.seed, 0x0AC2));
    o.noise_floor = w1_exact(o.occupancy, occupancy_from_buffer(again, occ)).distance;
    o.value = evaluate_actor(actor, spec, task, opt.eval_episodes, task_eval_seed(opt.seed, task));
    return o;
}

/// Occupancy of an actor rolled out inside the episodic model from the
/// environment's start distribution.
template <ActionSource Policy>
EmpiricalMeasure model_occupancy(const EpisodicModel& model, const Policy& actor, const EnvSpec& spec,
                                 const TaskSpec& task, int n_episodes, std::uint64_t seed,
                                 const OccupancyOptions& occ)
{
    Buffer buf;
    buf.env_id = spec.env_id;
    for (int e = 0; e < n_episodes; ++e) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
        buf.episode_starts.push_back(buf.transitions.size());
        Vec s = env_reset(spec, rng);
        for (int t = 0; t < spec.horizon; ++t) {
            Vec a = clip_to(actor(s, rng), spec.action_bounds);
            auto q = model_query(model, s, a, task);
            buf.transitions.push_back({s, std::move(a), q.r_pen, q.s_next, t, t + 1 == spec.horizon, 0});
            s = std::move(q.s_next);
        }
    }
    return occupancy_from_buffer(buf, occ);
}

struct GapRow {
    std::string buffer_id;
    double w1_to_optimal = 0.0;  // D2
    double w1_model = 0.0;       // D1, logged only
    double offline_return = 0.0;
    double offline_std = 0.0;
    double behavior_return = 0.0;
    double optimal_return = 0.0;
    double gap = 0.0;
    double epsilon_u = 0.0;
    double support_diameter = 0.0;
    double model_return = 0.0;  // mean penalized k-step model return of pi_hat
};

struct GapReport {
    TaskSpec task;
    std::vector<GapRow> rows;
    double c = 0.0;           // 1 / (1 - gamma)
    double C = 0.0;           // 2 c gamma L_r L_T
    double fitted_C = 0.0;    // least squares of gap on D2 through the origin
    double spearman_d2_return = 0.0;
    double oracle_noise_floor = 0.0;
};

struct LabeledBuffer {
    std::string id;
    Buffer buffer;
    /// Policy that generated the buffer, when available, for the behavior
    /// return column.
    std::optional<PolicyParams> behavior;
};

/// Per buffer: distance of its occupancy to the oracle's, offline return of
/// the policy trained on it, and the resulting gap to the optimum.
inline GapReport verify_gap_bound(const std::vector<LabeledBuffer>& buffers, const TaskSpec& task, const EnvSpec& spec,
                                  const OracleOptions& oracle_opt, const OfflineConfig& offline,
                                  const OccupancyOptions& occ = {})
{
    require(!buffers.empty(), "verify_gap_bound: no buffers");
    const Oracle oracle = make_oracle(spec, task, oracle_opt, occ);
    const GreedyActor oracle_actor{oracle.plan, 0.0};
    GapReport rep;
    rep.task = task;
    rep.c = 1.0 / (1.0 - spec.gamma);
    rep.C = 2.0 * rep.c * spec.gamma * spec.lipschitz_r * spec.lipschitz_T;
    rep.oracle_noise_floor = oracle.noise_floor;
    const auto eval_seed = task_eval_seed(oracle_opt.seed, task);
    for (const auto& lb : buffers) {
        GapRow row;
        row.buffer_id = lb.id;
        const Buffer relabeled = relabel_buffer(lb.buffer, task, spec.dt);
        const auto rho = occupancy_from_buffer(relabeled, occ);
        row.w1_to_optimal = w1_exact(rho, oracle.occupancy).distance;
        row.support_diameter = support_diameter(rho);

        const auto model = model_build(relabeled, offline.resolved_kappa(spec), spec.gamma, spec.dt);
        const PolicyParams pi_hat = mopo_lite_train(model, relabeled, task, spec, offline);
        const auto starts = sample_start_states(relabeled, offline.n_start_states, offline.seed);
        const auto stats = model_rollouts(model, pi_hat, task, starts, offline.rollout_k, spec.action_bounds);
        row.epsilon_u = rep.c * stats.mean_u;
        row.model_return = stats.penalized_return;
        row.w1_model = w1_exact(model_occupancy(model, oracle_actor, spec, task, oracle_opt.rollouts,
                                                derive_seed(oracle_opt.seed, 0x0AC1), occ),
                                oracle.occupancy)
                           .distance;

        const auto ev = evaluate_policy(pi_hat, spec, task, oracle_opt.eval_episodes, eval_seed);
        row.offline_return = ev.mean;
        row.offline_std = ev.std;
        row.behavior_return = lb.behavior
                                  ? evaluate_policy(*lb.behavior, spec, task, oracle_opt.eval_episodes, eval_seed).mean
                                  : average_return(relabeled, spec.gamma);
        row.optimal_return = oracle.value.mean;
        row.gap = row.optimal_return - row.offline_return;
        rep.rows.push_back(std::move(row));
    }
    double num = 0.0, den = 0.0;
    std::vector<double> d2, ret;
    for (const auto& r : rep.rows) {
        num += r.gap * r.w1_to_optimal;
        den += r.w1_to_optimal * r.w1_to_optimal;
        d2.push_back(r.w1_to_optimal);
        ret.push_back(r.offline_return);
    }
    rep.fitted_C = den > 0.0 ? num / den : 0.0;
    rep.spearman_d2_return = rep.rows.size() >= 2 ? spearman(d2, ret) : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

struct RegretRow {
    TaskSpec task;
    std::size_t best_member = 0;
    double regret = 0.0;       // min_i W1(rho_i, rho*)
    double noise_floor = 0.0;  // sampling noise of the rho* estimate
};

struct RegretReport {
    std::vector<RegretRow> rows;
    /// Max over the task list; a lower bound on the regret over all optima.
    double worst_case_regret = 0.0;
    /// min_{i != j} W1(rho_i, rho_j); infinity for a single member.
    double surrogate = 0.0;
};

inline RegretReport regret_report(const std::vector<EmpiricalMeasure>& ensemble, const std::vector<TaskSpec>& tasks,
                                  const EnvSpec& spec, const OracleOptions& oracle_opt,
                                  const OccupancyOptions& occ = {})
{
    require(!ensemble.empty(), "regret_report: empty ensemble");
    RegretReport rep;
    for (const auto& task : tasks) {
        const Oracle oracle = make_oracle(spec, task, oracle_opt, occ);
        RegretRow row;
        row.task = task;
        row.noise_floor = oracle.noise_floor;
        row.regret = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < ensemble.size(); ++i) {
            const double d = w1_exact(ensemble[i], oracle.occupancy).distance;
            if (d < row.regret) {
                row.regret = d;
                row.best_member = i;
            }
        }
        rep.worst_case_regret = std::max(rep.worst_case_regret, row.regret);
        rep.rows.push_back(row);
    }
    rep.surrogate = ensemble.size() >= 2 ? min_offdiagonal(pairwise_w1(ensemble, {DistanceMode::exact}))
                                         : std::numeric_limits<double>::infinity();
    return rep;
}

/// The six-direction sweep 0, 60, ..., 300 degrees.
inline std::vector<TaskSpec> angle_sweep(int n = 6)
{
    std::vector<TaskSpec> out;
    for (int k = 0; k < n; ++k) out.push_back(TaskSpec::angle(360.0 * k / n));
    return out;
}

} // namespace udg
