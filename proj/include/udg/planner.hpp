#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "mdp.hpp"

namespace udg {

/// Value iteration on a regular grid over the state box with multilinear
/// interpolation of the value table between nodes.
struct GridPlanner {
    std::vector<int> resolution{51, 51};
    /// Empty means the default set: every nonzero vertex of {-1,0,1}^d
    /// scaled to the action box, axis moves first.
    std::vector<Vec> action_set;
    double tolerance = 1e-9;
    int max_sweeps = 20000;
    /// Actions whose Q-value is within this of the best count as tied; the
    /// first tied action in `action_set` order wins.
    double tie_tolerance = 1e-7;
};

inline std::vector<Vec> default_action_set(const EnvSpec& spec)
{
    const int d = spec.action_dim;
    int total = 1;
    for (int k = 0; k < d; ++k) total *= 3;
    std::vector<std::vector<int>> verts;
    for (int idx = 0; idx < total; ++idx) {
        std::vector<int> v(d);
        int rest = idx;
        for (int k = 0; k < d; ++k) {
            v[k] = rest % 3 - 1;
            rest /= 3;
        }
        if (std::any_of(v.begin(), v.end(), [](int x) { return x != 0; })) verts.push_back(v);
    }
    std::stable_sort(verts.begin(), verts.end(), [](const auto& x, const auto& y) {
        const auto nx = std::count_if(x.begin(), x.end(), [](int v) { return v != 0; });
        const auto ny = std::count_if(y.begin(), y.end(), [](int v) { return v != 0; });
        return nx < ny;
    });
    std::vector<Vec> out;
    for (const auto& v : verts) {
        Vec a(d);
        for (int k = 0; k < d; ++k) {
            const auto& b = spec.action_bounds[k];
            a[k] = v[k] < 0 ? b.lo : (v[k] > 0 ? b.hi : std::clamp(0.0, b.lo, b.hi));
        }
        out.push_back(std::move(a));
    }
    return out;
}

namespace detail {

/// Interpolation corners and weights of `s` on the grid, plus a reward slot.
struct Stencil {
    std::size_t idx[8];
    double w[8];
    int count = 0;
    double reward = 0.0;
};

inline Stencil interpolation_stencil(const EnvSpec& spec, const std::vector<int>& resolution, const Vec& s)
{
    Stencil st;
    const std::size_t dims = resolution.size();
    std::size_t base = 0, stride = 1, strides[3] = {0, 0, 0};
    double frac[3] = {0, 0, 0};
    for (std::size_t d = 0; d < dims; ++d) {
        const auto& b = spec.state_bounds[d];
        const double pos = std::clamp((s[d] - b.lo) / b.width(), 0.0, 1.0) * (resolution[d] - 1);
        auto cell = static_cast<std::size_t>(std::floor(pos));
        if (cell >= static_cast<std::size_t>(resolution[d] - 1)) cell = resolution[d] - 2;
        frac[d] = pos - static_cast<double>(cell);
        base += cell * stride;
        strides[d] = stride;
        stride *= static_cast<std::size_t>(resolution[d]);
    }
    for (std::size_t corner = 0; corner < (1u << dims); ++corner) {
        double w = 1.0;
        std::size_t idx = base;
        for (std::size_t d = 0; d < dims; ++d) {
            if (corner & (1u << d)) {
                w *= frac[d];
                idx += strides[d];
            } else {
                w *= 1.0 - frac[d];
            }
        }
        if (w != 0.0) {
            st.idx[st.count] = idx;
            st.w[st.count] = w;
            ++st.count;
        }
    }
    return st;
}

} // namespace detail

struct GridPlan {
    EnvSpec spec;
    TaskSpec task;
    std::vector<int> resolution;
    std::vector<Vec> actions;
    std::vector<double> values;   // one per grid node, first axis fastest
    std::vector<int> greedy;      // action index per node
    double residual = 0.0;        // max |TV - V| at termination
    int sweeps = 0;
    double tie_tolerance = 1e-7;

    std::size_t node_count() const { return values.size(); }

    Vec node_state(std::size_t node) const
    {
        Vec s(resolution.size());
        std::size_t rest = node;
        for (std::size_t d = 0; d < resolution.size(); ++d) {
            const auto k = rest % static_cast<std::size_t>(resolution[d]);
            rest /= static_cast<std::size_t>(resolution[d]);
            const auto& b = spec.state_bounds[d];
            s[d] = b.lo + b.width() * static_cast<double>(k) / (resolution[d] - 1);
        }
        return s;
    }

    /// Multilinear interpolation of `table` at `s` (clamped to the box).
    double interpolate(const std::vector<double>& table, const Vec& s) const
    {
        const auto st = detail::interpolation_stencil(spec, resolution, s);
        double acc = 0.0;
        for (int c = 0; c < st.count; ++c) acc += st.w[c] * table[st.idx[c]];
        return acc;
    }

    double value(const Vec& s) const { return interpolate(values, s); }

    double q_value(const Vec& s, std::size_t action) const
    {
        const Vec s2 = env_step(s, actions[action], spec);
        return task_reward(s, s2, spec.dt, task) + spec.gamma * interpolate(values, s2);
    }

    /// Greedy action index at an arbitrary state (first within tie tolerance).
    std::size_t greedy_index(const Vec& s) const
    {
        std::vector<double> q(actions.size());
        for (std::size_t a = 0; a < actions.size(); ++a) q[a] = q_value(s, a);
        const double best = *std::max_element(q.begin(), q.end());
        for (std::size_t a = 0; a < q.size(); ++a)
            if (q[a] >= best - tie_tolerance) return a;
        return 0;
    }

    Vec greedy_action(const Vec& s) const { return actions[greedy_index(s)]; }
};

namespace detail {

inline double stencil_q(const Stencil& st, const std::vector<double>& values, double gamma)
{
    double v = 0.0;
    for (int c = 0; c < st.count; ++c) v += st.w[c] * values[st.idx[c]];
    return st.reward + gamma * v;
}

inline Stencil make_stencil(const GridPlan& plan, const Vec& s, const Vec& a)
{
    const Vec s2 = env_step(s, a, plan.spec);
    Stencil st = interpolation_stencil(plan.spec, plan.resolution, s2);
    st.reward = task_reward(s, s2, plan.spec.dt, plan.task);
    return st;
}

} // namespace detail

/// Greedy action indices at every node for a given value table.
inline std::vector<int> greedy_actions(const GridPlan& plan, const std::vector<double>& values,
                                       const std::vector<detail::Stencil>& stencils)
{
    const std::size_t na = plan.actions.size();
    std::vector<int> greedy(plan.node_count());
    std::vector<double> q(na);
    for (std::size_t node = 0; node < plan.node_count(); ++node) {
        for (std::size_t a = 0; a < na; ++a) q[a] = detail::stencil_q(stencils[node * na + a], values, plan.spec.gamma);
        const double best = *std::max_element(q.begin(), q.end());
        for (std::size_t a = 0; a < na; ++a)
            if (q[a] >= best - plan.tie_tolerance) {
                greedy[node] = static_cast<int>(a);
                break;
            }
    }
    return greedy;
}

inline std::vector<detail::Stencil> build_stencils(const GridPlan& plan)
{
    std::vector<detail::Stencil> stencils;
    stencils.reserve(plan.node_count() * plan.actions.size());
    for (std::size_t node = 0; node < plan.node_count(); ++node) {
        const Vec s = plan.node_state(node);
        for (const auto& a : plan.actions) stencils.push_back(detail::make_stencil(plan, s, a));
    }
    return stencils;
}

/// One Bellman backup of `values`; returns max |TV - V|.
inline double bellman_sweep(const GridPlan& plan, const std::vector<detail::Stencil>& stencils,
                            const std::vector<double>& values, std::vector<double>& out)
{
    const std::size_t na = plan.actions.size();
    out.resize(values.size());
    double residual = 0.0;
    for (std::size_t node = 0; node < values.size(); ++node) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < na; ++a)
            best = std::max(best, detail::stencil_q(stencils[node * na + a], values, plan.spec.gamma));
        out[node] = best;
        residual = std::max(residual, std::abs(best - values[node]));
    }
    return residual;
}

/// Jacobi value iteration until the Bellman residual drops below the
/// planner tolerance; the greedy table is extracted from the final values.
inline GridPlan grid_value_iteration(const EnvSpec& spec, const TaskSpec& task, const GridPlanner& planner = {})
{
    spec.validate();
    require(spec.state_dim <= 3, "grid_value_iteration: state_dim must be <= 3");
    require(static_cast<int>(planner.resolution.size()) == spec.state_dim, "grid_value_iteration: resolution size");
    for (int r : planner.resolution) require(r >= 2, "grid_value_iteration: resolution must be >= 2");
    require(planner.tolerance > 0.0, "grid_value_iteration: tolerance must be positive");

    GridPlan plan;
    plan.spec = spec;
    plan.task = task;
    plan.resolution = planner.resolution;
    plan.actions = planner.action_set.empty() ? default_action_set(spec) : planner.action_set;
    plan.tie_tolerance = planner.tie_tolerance;
    std::size_t nodes = 1;
    for (int r : planner.resolution) nodes *= static_cast<std::size_t>(r);
    plan.values.assign(nodes, 0.0);

    const auto stencils = build_stencils(plan);
    std::vector<double> next;
    plan.residual = std::numeric_limits<double>::infinity();
    while (plan.sweeps < planner.max_sweeps) {
        plan.residual = bellman_sweep(plan, stencils, plan.values, next);
        plan.values.swap(next);
        ++plan.sweeps;
        if (plan.residual < planner.tolerance) break;
    }
    // Report the residual of the returned table itself.
    plan.residual = bellman_sweep(plan, stencils, plan.values, next);
    plan.greedy = greedy_actions(plan, plan.values, stencils);
    return plan;
}

/// Max |TV - V| over all nodes for the plan's value table.
inline double bellman_residual(const GridPlan& plan)
{
    std::vector<double> next;
    return bellman_sweep(plan, build_stencils(plan), plan.values, next);
}

/// True if one more backup leaves every greedy action unchanged.
inline bool greedy_is_stable(const GridPlan& plan)
{
    const auto stencils = build_stencils(plan);
    std::vector<double> next;
    bellman_sweep(plan, stencils, plan.values, next);
    return greedy_actions(plan, next, stencils) == plan.greedy;
}

/// ActionSource wrapper over a plan's greedy policy with optional Gaussian
/// action noise.
struct GreedyActor {
    std::shared_ptr<const GridPlan> plan;
    double noise_std = 0.0;
    Vec operator()(const Vec& s, Rng& rng) const
    {
        Vec a = plan->greedy_action(s);
        if (noise_std > 0.0)
            for (auto& x : a) x += noise_std * standard_normal(rng);
        return clip_to(a, plan->spec.action_bounds);
    }
};

} // namespace udg
