#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "common.hpp"

namespace udg {

struct CemConfig {
    int population = 32;
    double elite_frac = 0.25;
    int iterations = 10;
    double init_std = 1.0;
    int eval_episodes = 3;
    std::uint64_t seed = 0;

    int elite_count() const { return static_cast<int>(std::ceil(elite_frac * population - 1e-12)); }

    void validate() const
    {
        require(population >= 2, "CemConfig: population must be >= 2");
        require(elite_frac > 0.0 && elite_frac <= 1.0, "CemConfig: elite_frac must lie in (0,1]");
        require(elite_count() >= 1, "CemConfig: need at least one elite");
        require(iterations >= 0, "CemConfig: iterations must be >= 0");
        require(init_std > 0.0, "CemConfig: init_std must be positive");
        require(eval_episodes >= 1, "CemConfig: eval_episodes must be >= 1");
    }
};

inline constexpr double cem_std_floor = 1e-3;

struct Gaussian {
    Vec mean;
    Vec std;
};

/// Indices of the `n_elite` highest scores; ties keep the lower index first.
inline std::vector<std::size_t> elite_indices(const std::vector<double>& scores, int n_elite)
{
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(n_elite)));
    return order;
}

/// Refits mean and std to the elite candidates.
inline Gaussian cem_update(const std::vector<Vec>& population, const std::vector<double>& scores, double elite_frac)
{
    require(!population.empty() && population.size() == scores.size(), "cem_update: population/scores mismatch");
    for (double s : scores) require(std::isfinite(s), "cem_update: scores must be finite");
    const int n_elite = std::max(1, static_cast<int>(std::ceil(elite_frac * population.size() - 1e-12)));
    const auto elites = elite_indices(scores, n_elite);
    const std::size_t dim = population.front().size();
    Gaussian g{Vec(dim, 0.0), Vec(dim, 0.0)};
    for (auto e : elites)
        for (std::size_t k = 0; k < dim; ++k) g.mean[k] += population[e][k];
    for (auto& x : g.mean) x /= static_cast<double>(elites.size());
    for (auto e : elites)
        for (std::size_t k = 0; k < dim; ++k) {
            const double d = population[e][k] - g.mean[k];
            g.std[k] += d * d;
        }
    for (auto& x : g.std) x = std::max(cem_std_floor, std::sqrt(x / static_cast<double>(elites.size())));
    return g;
}

struct CemResult {
    Vec best;
    double best_score = -std::numeric_limits<double>::infinity();
    Gaussian final;
    std::vector<double> best_per_iteration;
};

/// Maximizes `objective` starting from `init_mean`. The incoming mean is
/// always scored first, so the result never scores below the start.
template <class Objective>
CemResult cem_optimize(Objective&& objective, const Vec& init_mean, const CemConfig& cfg)
{
    cfg.validate();
    Rng rng(derive_seed(cfg.seed, 0xCE3));
    CemResult res;
    res.final = {init_mean, Vec(init_mean.size(), cfg.init_std)};
    res.best = init_mean;
    res.best_score = objective(init_mean);
    std::vector<Vec> pop(cfg.population);
    std::vector<double> scores(cfg.population);
    for (int it = 0; it < cfg.iterations; ++it) {
        for (int c = 0; c < cfg.population; ++c) {
            pop[c].resize(init_mean.size());
            for (std::size_t k = 0; k < init_mean.size(); ++k)
                pop[c][k] = res.final.mean[k] + res.final.std[k] * (c == 0 ? 0.0 : standard_normal(rng));
        }
        for (int c = 0; c < cfg.population; ++c) {
            scores[c] = objective(pop[c]);
            if (scores[c] > res.best_score) {
                res.best_score = scores[c];
                res.best = pop[c];
            }
        }
        res.final = cem_update(pop, scores, cfg.elite_frac);
        res.best_per_iteration.push_back(res.best_score);
    }
    return res;
}

} // namespace udg
