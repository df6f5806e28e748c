#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mdp.hpp"
#include "network_simplex.hpp"

namespace udg {

enum class Space { state, state_action, projected };

inline std::string to_string(Space s)
{
    switch (s) {
    case Space::state: return "state";
    case Space::state_action: return "state-action";
    case Space::projected: return "projected";
    }
    return "?";
}

/// Weighted point cloud in R^d. Points are stored row-major.
struct EmpiricalMeasure {
    std::size_t dim = 0;
    std::vector<double> points;
    std::vector<double> weights;
    Space space = Space::projected;

    std::size_t size() const { return weights.size(); }
    const double* point(std::size_t i) const { return points.data() + i * dim; }

    static EmpiricalMeasure uniform(std::size_t dim, std::vector<double> points, Space space = Space::projected)
    {
        require(dim >= 1 && !points.empty() && points.size() % dim == 0, "EmpiricalMeasure: bad point array");
        const std::size_t n = points.size() / dim;
        return {dim, std::move(points), std::vector<double>(n, 1.0 / static_cast<double>(n)), space};
    }

    static EmpiricalMeasure dirac(const Vec& x, Space space = Space::projected)
    {
        return {x.size(), x, {1.0}, space};
    }

    void validate() const
    {
        require(dim >= 1, "EmpiricalMeasure: dim must be >= 1");
        require(!weights.empty(), "EmpiricalMeasure: needs at least one point");
        require(points.size() == weights.size() * dim, "EmpiricalMeasure: points/weights size mismatch");
        double total = 0.0;
        for (double w : weights) {
            require(std::isfinite(w) && w >= 0.0, "EmpiricalMeasure: weights must be finite and nonnegative");
            total += w;
        }
        for (double x : points) require(std::isfinite(x), "EmpiricalMeasure: non-finite coordinate");
        require(std::abs(total - 1.0) <= 1e-9, "EmpiricalMeasure: weights must sum to 1");
    }
};

struct OccupancyOptions {
    double gamma = 0.99;
    /// Coordinates of the concatenated (s, a) vector to keep. Empty means
    /// the full state (space == state) or full pair (space == state_action).
    std::vector<int> projection{0, 1};
    Space space = Space::projected;
    /// Supports larger than this are reduced by systematic resampling.
    std::size_t max_points = 2000;
    std::uint64_t seed = 0;
};

/// Reduces a measure to at most `max_points` atoms by weight-proportional
/// systematic resampling; repeated draws of one atom are merged.
inline EmpiricalMeasure cap_support(const EmpiricalMeasure& mu, std::size_t max_points, std::uint64_t seed)
{
    if (mu.size() <= max_points) return mu;
    require(max_points >= 1, "cap_support: max_points must be >= 1");
    Rng rng(derive_seed(seed, 0xCA9));
    const double step = 1.0 / static_cast<double>(max_points);
    double target = uniform01(rng) * step;
    double cumulative = 0.0;
    std::vector<std::size_t> counts(mu.size(), 0);
    std::size_t drawn = 0;
    for (std::size_t i = 0; i < mu.size() && drawn < max_points; ++i) {
        cumulative += mu.weights[i];
        while (drawn < max_points && target < cumulative) {
            ++counts[i];
            ++drawn;
            target += step;
        }
    }
    // Rounding can leave the last draw unassigned; give it to the last atom with mass.
    for (std::size_t i = mu.size(); drawn < max_points && i-- > 0;)
        if (mu.weights[i] > 0.0) {
            counts[i] += max_points - drawn;
            drawn = max_points;
        }
    EmpiricalMeasure out{mu.dim, {}, {}, mu.space};
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!counts[i]) continue;
        out.points.insert(out.points.end(), mu.point(i), mu.point(i) + mu.dim);
        out.weights.push_back(static_cast<double>(counts[i]) * step);
    }
    return out;
}

/// Discounted occupancy estimate: the step-t sample of each episode gets
/// weight proportional to gamma^t; all samples are normalized jointly.
inline EmpiricalMeasure occupancy_from_buffer(const Buffer& buf, const OccupancyOptions& opt = {})
{
    require(!buf.empty(), "occupancy_from_buffer: empty buffer");
    require(opt.gamma >= 0.0 && opt.gamma < 1.0, "occupancy_from_buffer: gamma must lie in [0,1)");
    const auto& first = buf.transitions.front();
    const std::size_t ds = first.s.size(), da = first.a.size();
    std::vector<int> coords;
    switch (opt.space) {
    case Space::state:
        coords.resize(ds);
        std::iota(coords.begin(), coords.end(), 0);
        break;
    case Space::state_action:
        coords.resize(ds + da);
        std::iota(coords.begin(), coords.end(), 0);
        break;
    case Space::projected:
        require(!opt.projection.empty(), "occupancy_from_buffer: projection needs coordinates");
        coords = opt.projection;
        break;
    }
    for (int c : coords)
        require(c >= 0 && static_cast<std::size_t>(c) < ds + da, "occupancy_from_buffer: projection index out of range");

    EmpiricalMeasure mu{coords.size(), {}, {}, opt.space};
    mu.points.reserve(buf.size() * coords.size());
    mu.weights.reserve(buf.size());
    for (std::size_t e = 0; e < buf.episode_count(); ++e) {
        auto [lo, hi] = buf.episode_range(e);
        double disc = 1.0;
        for (std::size_t k = lo; k < hi; ++k) {
            const auto& tr = buf.transitions[k];
            for (int c : coords)
                mu.points.push_back(static_cast<std::size_t>(c) < ds ? tr.s[c] : tr.a[c - ds]);
            mu.weights.push_back(disc);
            disc *= opt.gamma;
        }
    }
    const double total = std::accumulate(mu.weights.begin(), mu.weights.end(), 0.0);
    for (auto& w : mu.weights) w /= total;
    return cap_support(mu, opt.max_points, opt.seed);
}

struct TransportPlan {
    std::vector<FlowEntry> coupling;
    double cost = 0.0;
};

struct W1Result {
    double distance = 0.0;
    TransportPlan plan;
};

namespace detail {

inline void check_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu)
{
    mu.validate();
    nu.validate();
    require(mu.dim == nu.dim, "w1: dimension mismatch");
}

inline std::vector<std::size_t> positive_atoms(const EmpiricalMeasure& mu)
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (mu.weights[i] > 0.0) idx.push_back(i);
    return idx;
}

// Order atoms along the coordinate sum so the staircase start is already
// close to the monotone (1-D optimal) coupling along that axis.
inline void sort_by_projection(const EmpiricalMeasure& mu, std::vector<std::size_t>& idx)
{
    auto key = [&](std::size_t i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < mu.dim; ++k) acc += mu.point(i)[k];
        return acc;
    };
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return key(x) < key(y); });
}

inline bool uniform_weights(const EmpiricalMeasure& mu, const std::vector<std::size_t>& idx)
{
    const double w = mu.weights[idx.front()];
    for (auto i : idx)
        if (mu.weights[i] != w) return false;
    return true;
}

} // namespace detail

/// Largest square uniform problem routed to the Hungarian solver.
inline constexpr std::size_t hungarian_limit = 256;

/// Exact W1 under the Euclidean ground metric.
inline W1Result w1_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu)
{
    detail::check_pair(mu, nu);
    auto src = detail::positive_atoms(mu);
    auto dst = detail::positive_atoms(nu);
    detail::sort_by_projection(mu, src);
    detail::sort_by_projection(nu, dst);
    const std::size_t n = src.size(), m = dst.size();
    std::vector<double> cost(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            cost[i * m + j] = std::sqrt(squared_distance(mu.point(src[i]), nu.point(dst[j]), mu.dim));

    W1Result out;
    if (n == m && n <= hungarian_limit && detail::uniform_weights(mu, src) && detail::uniform_weights(nu, dst)) {
        const auto assignment = solve_assignment(cost, static_cast<int>(n));
        const double w = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = static_cast<std::size_t>(assignment[i]);
            out.plan.coupling.push_back({static_cast<int>(src[i]), static_cast<int>(dst[j]), w});
            out.plan.cost += w * cost[i * m + j];
        }
    } else {
        std::vector<double> a(n), b(m);
        for (std::size_t i = 0; i < n; ++i) a[i] = mu.weights[src[i]];
        for (std::size_t j = 0; j < m; ++j) b[j] = nu.weights[dst[j]];
        const auto sol = solve_transport(a, b, cost);
        for (const auto& f : sol.flows)
            out.plan.coupling.push_back({static_cast<int>(src[f.i]), static_cast<int>(dst[f.j]), f.mass});
        out.plan.cost = sol.cost;
    }
    std::sort(out.plan.coupling.begin(), out.plan.coupling.end(),
              [](const FlowEntry& x, const FlowEntry& y) { return x.i != y.i ? x.i < y.i : x.j < y.j; });
    out.distance = out.plan.cost;
    return out;
}

/// Exact 1-D W1 between weighted samples: integral of |F - G|.
inline double w1_1d(std::vector<std::pair<double, double>> signed_mass)
{
    // Entries are (position, +w for the first measure / -w for the second).
    std::sort(signed_mass.begin(), signed_mass.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    double diff = 0.0, total = 0.0;
    for (std::size_t k = 0; k + 1 < signed_mass.size(); ++k) {
        diff += signed_mass[k].second;
        total += std::abs(diff) * (signed_mass[k + 1].first - signed_mass[k].first);
    }
    return total;
}

/// Mean over random unit directions of the 1-D W1 between projections.
inline double w1_sliced(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int n_projections, std::uint64_t seed)
{
    detail::check_pair(mu, nu);
    require(n_projections >= 1, "w1_sliced: n_projections must be >= 1");
    Rng rng(derive_seed(seed, 0x511CE));
    std::vector<std::pair<double, double>> mass(mu.size() + nu.size());
    Vec dir(mu.dim);
    double acc = 0.0;
    for (int p = 0; p < n_projections; ++p) {
        double norm = 0.0;
        while (norm < 1e-12) {
            norm = 0.0;
            for (auto& x : dir) {
                x = standard_normal(rng);
                norm += x * x;
            }
            norm = std::sqrt(norm);
        }
        for (auto& x : dir) x /= norm;
        auto project = [&](const double* x) {
            double dot = 0.0;
            for (std::size_t k = 0; k < dir.size(); ++k) dot += dir[k] * x[k];
            return dot;
        };
        for (std::size_t i = 0; i < mu.size(); ++i) mass[i] = {project(mu.point(i)), mu.weights[i]};
        for (std::size_t j = 0; j < nu.size(); ++j) mass[mu.size() + j] = {project(nu.point(j)), -nu.weights[j]};
        acc += w1_1d(mass);
    }
    return acc / n_projections;
}

enum class DistanceMode { exact, sliced };

struct DistanceOptions {
    DistanceMode mode = DistanceMode::exact;
    int n_projections = 64;
    std::uint64_t seed = 0;
};

inline double w1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const DistanceOptions& opt = {})
{
    if (opt.mode == DistanceMode::sliced) return w1_sliced(mu, nu, opt.n_projections, opt.seed);
    return w1_exact(mu, nu).distance;
}

using Matrix = std::vector<std::vector<double>>;

inline Matrix pairwise_w1(const std::vector<EmpiricalMeasure>& measures, const DistanceOptions& opt = {})
{
    require(measures.size() >= 2, "pairwise_w1: needs at least two measures");
    const std::size_t k = measures.size();
    Matrix d(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) d[i][j] = d[j][i] = w1(measures[i], measures[j], opt);
    return d;
}

/// Smallest off-diagonal entry.
inline double min_offdiagonal(const Matrix& d)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.size(); ++j)
            if (i != j) best = std::min(best, d[i][j]);
    return best;
}

/// Largest pairwise distance between support points.
inline double support_diameter(const EmpiricalMeasure& mu)
{
    double best = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = i + 1; j < mu.size(); ++j)
            best = std::max(best, squared_distance(mu.point(i), mu.point(j), mu.dim));
    return std::sqrt(best);
}

inline void write_measure(std::ostream& os, const EmpiricalMeasure& mu)
{
    os << "# udg-measure v1 dim=" << mu.dim << " space=" << to_string(mu.space) << " count=" << mu.size() << '\n';
    for (std::size_t i = 0; i < mu.size(); ++i) {
        os << "x=";
        for (std::size_t k = 0; k < mu.dim; ++k) os << (k ? "," : "") << format_double(mu.point(i)[k]);
        os << " w=" << format_double(mu.weights[i]) << '\n';
    }
}

} // namespace udg
