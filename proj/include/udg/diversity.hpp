#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "cem.hpp"
#include "policy.hpp"
#include "transport.hpp"

namespace udg {

struct DiversityConfig {
    int n_policies = 8;
    int rounds = 3;
    /// Weight on the partial task return. +inf drops the diversity term.
    double lambda = 0.0;
    std::optional<TaskSpec> partial_task;
    DistanceMode distance_mode = DistanceMode::sliced;
    int n_projections = 32;
    std::vector<int> projection{0, 1};
    int rbf_per_axis = 3;
    double rbf_bandwidth = 2.5;
    double init_weight_std = 0.1;
    double action_std = 0.1;
    std::uint64_t seed = 0;

    void validate() const
    {
        require(n_policies >= 2, "DiversityConfig: need at least two policies");
        require(rounds >= 0, "DiversityConfig: rounds must be >= 0");
        require(lambda >= 0.0 && !std::isnan(lambda), "DiversityConfig: lambda must be >= 0");
        require(!std::isinf(lambda) || partial_task.has_value(), "DiversityConfig: lambda=inf needs a task");
        require(!projection.empty(), "DiversityConfig: projection must be nonempty");
        require(action_std > 0.0, "DiversityConfig: action_std must be positive");
    }
};

/// min_{j != i} d(i, j) over a precomputed distance matrix.
inline double pseudo_reward(std::size_t i, const Matrix& dist)
{
    require(dist.size() >= 2, "pseudo_reward: needs K >= 2");
    require(i < dist.size(), "pseudo_reward: policy index out of range");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < dist.size(); ++j)
        if (j != i) best = std::min(best, dist[j][i]);
    return best;
}

/// min_{j != i} W1(rho_j, rho_i).
inline double pseudo_reward(std::size_t i, const std::vector<EmpiricalMeasure>& measures,
                            const DistanceOptions& opt = {})
{
    require(measures.size() >= 2, "pseudo_reward: needs K >= 2");
    require(i < measures.size(), "pseudo_reward: policy index out of range");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < measures.size(); ++j)
        if (j != i) best = std::min(best, w1(measures[j], measures[i], opt));
    return best;
}

/// Occupancy options matching a diversity configuration.
inline OccupancyOptions diversity_occupancy(const EnvSpec& spec, const DiversityConfig& cfg)
{
    OccupancyOptions occ;
    occ.gamma = spec.gamma;
    occ.projection = cfg.projection;
    occ.space = Space::projected;
    return occ;
}

inline EmpiricalMeasure policy_occupancy(const PolicyParams& p, const EnvSpec& spec, const OccupancyOptions& occ,
                                         int episodes, std::uint64_t seed)
{
    return occupancy_from_buffer(rollout(p, spec, nullptr, episodes, seed), occ);
}

/// Occupancies of every ensemble member from `episodes` rollouts each.
inline std::vector<EmpiricalMeasure> ensemble_occupancies(const std::vector<PolicyParams>& ensemble,
                                                          const EnvSpec& spec, const OccupancyOptions& occ,
                                                          int episodes, std::uint64_t seed)
{
    std::vector<EmpiricalMeasure> out;
    out.reserve(ensemble.size());
    for (std::size_t i = 0; i < ensemble.size(); ++i)
        out.push_back(policy_occupancy(ensemble[i], spec, occ, episodes, derive_seed(seed, i)));
    return out;
}

inline std::vector<PolicyParams> initial_ensemble(const EnvSpec& spec, const DiversityConfig& cfg)
{
    std::vector<PolicyParams> out;
    for (int i = 0; i < cfg.n_policies; ++i) {
        auto p = make_rbf_policy(spec, cfg.rbf_per_axis, cfg.rbf_bandwidth, i);
        p.log_std.assign(spec.action_dim, std::log(cfg.action_std));
        randomize_weights(p, cfg.init_weight_std, derive_seed(cfg.seed, 0x1417, static_cast<std::uint64_t>(i)));
        out.push_back(std::move(p));
    }
    return out;
}

using RoundCallback = std::function<void(int round, const std::vector<PolicyParams>&)>;

/// Round-robin ensemble training. In each round every policy in turn is
/// optimized by CEM against its frozen peers; its score is
///   pseudo_reward(i) + lambda * partial_task_return   (lambda finite)
///   partial_task_return                               (lambda = inf).
/// A policy's peer occupancy is refreshed as soon as it is updated and
/// all peers are re-estimated at each round boundary. `on_round` sees the
/// initial ensemble as round 0 and the ensemble after round r as r + 1.
inline std::vector<PolicyParams> train_diverse(const EnvSpec& spec, const DiversityConfig& cfg, const CemConfig& cem,
                                               const RoundCallback& on_round = {})
{
    spec.validate();
    cfg.validate();
    cem.validate();
    auto ensemble = initial_ensemble(spec, cfg);
    if (on_round) on_round(0, ensemble);
    const auto occ = diversity_occupancy(spec, cfg);
    const bool use_diversity = !std::isinf(cfg.lambda);
    const double task_weight = std::isinf(cfg.lambda) ? 1.0 : cfg.lambda;
    const std::size_t k_pol = ensemble.size();

    for (int round = 0; round < cfg.rounds; ++round) {
        const auto r = static_cast<std::uint64_t>(round);
        std::vector<EmpiricalMeasure> peers;
        if (use_diversity)
            peers = ensemble_occupancies(ensemble, spec, occ, cem.eval_episodes, derive_seed(cem.seed, 0xBEE5, r));
        for (std::size_t i = 0; i < k_pol; ++i) {
            const std::uint64_t eval_seed = derive_seed(cem.seed, 0xE7A1 + r, i);
            const DistanceOptions dopt{cfg.distance_mode, cfg.n_projections, derive_seed(cem.seed, 0xD157, r)};
            PolicyParams candidate = ensemble[i];
            auto objective = [&](const Vec& theta) {
                candidate.weights = theta;
                const Buffer buf = rollout(candidate, spec, nullptr, cem.eval_episodes, eval_seed);
                double score = 0.0;
                if (use_diversity) {
                    const auto rho = occupancy_from_buffer(buf, occ);
                    double best = std::numeric_limits<double>::infinity();
                    for (std::size_t j = 0; j < k_pol; ++j)
                        if (j != i) best = std::min(best, w1(peers[j], rho, dopt));
                    score += best;
                }
                if (cfg.partial_task)
                    score += task_weight * average_return(relabel_buffer(buf, *cfg.partial_task, spec.dt), spec.gamma);
                return score;
            };
            CemConfig local = cem;
            local.seed = derive_seed(cem.seed, r, i);
            const auto res = cem_optimize(objective, ensemble[i].weights, local);
            ensemble[i].weights = res.best;
            if (use_diversity)
                peers[i] = occupancy_from_buffer(rollout(ensemble[i], spec, nullptr, cem.eval_episodes, eval_seed), occ);
        }
        if (on_round) on_round(round + 1, ensemble);
    }
    return ensemble;
}

/// Single policy trained on a task reward only (the supervised baseline).
/// Uses member 0 of the initial ensemble as its starting point.
inline PolicyParams train_supervised(const EnvSpec& spec, const TaskSpec& task, const CemConfig& cem,
                                     const DiversityConfig& shape, int rounds = 1)
{
    spec.validate();
    cem.validate();
    PolicyParams p = initial_ensemble(spec, shape).front();
    for (int round = 0; round < rounds; ++round) {
        const auto r = static_cast<std::uint64_t>(round);
        const std::uint64_t eval_seed = derive_seed(cem.seed, 0x5E7A + r);
        PolicyParams candidate = p;
        auto objective = [&](const Vec& theta) {
            candidate.weights = theta;
            return average_return(rollout(candidate, spec, task_hook(task, spec.dt), cem.eval_episodes, eval_seed),
                                  spec.gamma);
        };
        CemConfig local = cem;
        local.seed = derive_seed(cem.seed, 0x5C, r);
        p.weights = cem_optimize(objective, p.weights, local).best;
    }
    return p;
}

} // namespace udg
