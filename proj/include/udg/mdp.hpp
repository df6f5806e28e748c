#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace udg {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

/// Continuous deterministic environment description. The reset rule is a
/// uniform box of half-width `start_spread` around `start_state`.
struct EnvSpec {
    std::string env_id = "point2d";
    int state_dim = 2;
    int action_dim = 2;
    std::vector<Interval> state_bounds{{-5.0, 5.0}, {-5.0, 5.0}};
    std::vector<Interval> action_bounds{{-1.0, 1.0}, {-1.0, 1.0}};
    double dt = 0.1;
    int horizon = 100;
    double gamma = 0.99;
    double lipschitz_T = std::sqrt(1.0 + 0.1 * 0.1);
    double lipschitz_r = 10.0;
    Vec start_state{0.0, 0.0};
    double start_spread = 0.1;

    /// Euclidean diameter of the state box.
    double state_diameter() const
    {
        double acc = 0.0;
        for (const auto& b : state_bounds) acc += b.width() * b.width();
        return std::sqrt(acc);
    }
    double action_diameter() const
    {
        double acc = 0.0;
        for (const auto& b : action_bounds) acc += b.width() * b.width();
        return std::sqrt(acc);
    }

    void validate() const
    {
        require(state_dim >= 1 && action_dim >= 1, "EnvSpec: dimensions must be positive");
        require(static_cast<int>(state_bounds.size()) == state_dim, "EnvSpec: state_bounds size");
        require(static_cast<int>(action_bounds.size()) == action_dim, "EnvSpec: action_bounds size");
        for (const auto& b : state_bounds)
            require(std::isfinite(b.lo) && std::isfinite(b.hi) && b.lo < b.hi, "EnvSpec: bad state bound");
        for (const auto& b : action_bounds)
            require(std::isfinite(b.lo) && std::isfinite(b.hi) && b.lo < b.hi, "EnvSpec: bad action bound");
        require(gamma >= 0.0 && gamma < 1.0, "EnvSpec: gamma must lie in [0,1)");
        require(horizon >= 1, "EnvSpec: horizon must be >= 1");
        require(dt > 0.0, "EnvSpec: dt must be positive");
        require(lipschitz_T > 0.0 && lipschitz_r > 0.0, "EnvSpec: Lipschitz constants must be positive");
        require(static_cast<int>(start_state.size()) == state_dim, "EnvSpec: start_state size");
        require(start_spread >= 0.0, "EnvSpec: start_spread must be >= 0");
    }
};

/// Default single-integrator environment. Its transition constant is the
/// operator norm of [I | dt*I], i.e. sqrt(1 + dt^2).
inline EnvSpec point_mass_env()
{
    EnvSpec spec;
    spec.lipschitz_T = std::sqrt(1.0 + spec.dt * spec.dt);
    return spec;
}

struct Transition {
    Vec s;
    Vec a;
    double r = 0.0;
    Vec s2;
    int t = 0;
    bool done = false;
    int policy_id = 0;

    bool operator==(const Transition&) const = default;
};

struct BufferMeta {
    std::uint64_t seed = 0;
    std::vector<int> policy_ids;
    std::string reward_desc = "none";

    bool operator==(const BufferMeta&) const = default;
};

struct Buffer {
    std::string env_id;
    std::vector<Transition> transitions;
    std::vector<std::size_t> episode_starts;
    BufferMeta meta;

    bool operator==(const Buffer&) const = default;

    std::size_t size() const { return transitions.size(); }
    bool empty() const { return transitions.empty(); }
    std::size_t episode_count() const { return episode_starts.size(); }

    /// Half-open transition range [first, last) of episode `e`.
    std::pair<std::size_t, std::size_t> episode_range(std::size_t e) const
    {
        const std::size_t first = episode_starts.at(e);
        const std::size_t last = e + 1 < episode_starts.size() ? episode_starts[e + 1] : transitions.size();
        return {first, last};
    }

    void validate(int horizon) const
    {
        if (transitions.empty()) {
            require(episode_starts.empty(), "Buffer: episode_starts on empty buffer");
            return;
        }
        require(!episode_starts.empty() && episode_starts.front() == 0, "Buffer: first episode must start at 0");
        for (std::size_t e = 1; e < episode_starts.size(); ++e)
            require(episode_starts[e] > episode_starts[e - 1], "Buffer: episode_starts must increase");
        require(episode_starts.back() < transitions.size(), "Buffer: episode start out of range");
        for (std::size_t e = 0; e < episode_starts.size(); ++e) {
            auto [first, last] = episode_range(e);
            require(static_cast<int>(last - first) <= horizon, "Buffer: episode longer than horizon");
        }
    }
};

enum class TaskKind { angle, jump };

struct TaskSpec {
    TaskKind kind = TaskKind::angle;
    double angle_deg = 0.0;
    double c_z = 0.0;
    double z0 = 0.0;

    static TaskSpec angle(double deg)
    {
        require(deg >= 0.0 && deg < 360.0, "TaskSpec: angle must lie in [0, 360)");
        return {TaskKind::angle, deg, 0.0, 0.0};
    }
    static TaskSpec jump(double c_z, double z0 = 0.0)
    {
        require(std::isfinite(c_z), "TaskSpec: c_z must be finite");
        return {TaskKind::jump, 0.0, c_z, z0};
    }

    /// Compact text form: "angle:60" or "jump:15:0".
    std::string to_string() const
    {
        if (kind == TaskKind::angle) return "angle:" + format_double(angle_deg);
        return "jump:" + format_double(c_z) + ":" + format_double(z0);
    }

    static TaskSpec parse(std::string_view text)
    {
        const auto c1 = text.find(':');
        require(c1 != text.npos, "TaskSpec: expected kind:value, got '" + std::string(text) + "'");
        const auto kind = text.substr(0, c1);
        const auto rest = text.substr(c1 + 1);
        if (kind == "angle") return angle(parse_double(rest));
        if (kind == "jump") {
            const auto c2 = rest.find(':');
            if (c2 == rest.npos) return jump(parse_double(rest));
            return jump(parse_double(rest.substr(0, c2)), parse_double(rest.substr(c2 + 1)));
        }
        throw contract_error("TaskSpec: unknown task kind '" + std::string(kind) + "'");
    }

    bool operator==(const TaskSpec&) const = default;
};

/// Unit direction for an angle task; 0 degrees is +y, counterclockwise.
inline Vec task_direction(double angle_deg)
{
    const double rad = angle_deg * std::numbers::pi / 180.0;
    return {-std::sin(rad), std::cos(rad)};
}

inline Vec clip_to(const Vec& x, const std::vector<Interval>& bounds)
{
    Vec out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = std::clamp(x[k], bounds[k].lo, bounds[k].hi);
    return out;
}

/// s' = clip(s + dt * clip(a)).
inline Vec env_step(const Vec& s, const Vec& a, const EnvSpec& spec)
{
    require(static_cast<int>(s.size()) == spec.state_dim, "env_step: state dimension mismatch");
    require(static_cast<int>(a.size()) == spec.action_dim, "env_step: action dimension mismatch");
    require(spec.state_dim == spec.action_dim, "env_step: point mass needs action_dim == state_dim");
    Vec next(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double ak = std::clamp(a[k], spec.action_bounds[k].lo, spec.action_bounds[k].hi);
        next[k] = std::clamp(s[k] + spec.dt * ak, spec.state_bounds[k].lo, spec.state_bounds[k].hi);
    }
    return next;
}

inline Vec env_reset(const EnvSpec& spec, Rng& rng)
{
    Vec s(spec.start_state);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] += spec.start_spread * (2.0 * uniform01(rng) - 1.0);
    return clip_to(s, spec.state_bounds);
}

/// Reward of a transition (s, s2) for `task`. Only the displacement matters
/// for angle tasks; jump tasks add c_z * (s2_y - z0) to forward x velocity.
inline double task_reward(const Vec& s, const Vec& s2, double dt, const TaskSpec& task)
{
    require(s.size() == s2.size(), "task_reward: dimension mismatch");
    require(s.size() >= 2, "task_reward: tasks are defined on the x-y plane");
    switch (task.kind) {
    case TaskKind::angle: {
        const Vec u = task_direction(task.angle_deg);
        return (u[0] * (s2[0] - s[0]) + u[1] * (s2[1] - s[1])) / dt;
    }
    case TaskKind::jump:
        return (s2[0] - s[0]) / dt + task.c_z * (s2[1] - task.z0);
    }
    throw contract_error("task_reward: unknown task kind");
}

inline double task_reward(const Transition& tr, double dt, const TaskSpec& task)
{
    return task_reward(tr.s, tr.s2, dt, task);
}

inline Buffer relabel_buffer(const Buffer& buf, const TaskSpec& task, double dt)
{
    Buffer out = buf;
    for (auto& tr : out.transitions) tr.r = task_reward(tr, dt, task);
    out.meta.reward_desc = task.to_string();
    return out;
}

/// Mean over episodes of the discounted episode return.
inline double average_return(const Buffer& buf, double gamma)
{
    require(!buf.empty() && buf.episode_count() >= 1, "average_return: empty buffer");
    double total = 0.0;
    for (std::size_t e = 0; e < buf.episode_count(); ++e) {
        auto [first, last] = buf.episode_range(e);
        double disc = 1.0, ret = 0.0;
        for (std::size_t i = first; i < last; ++i) {
            ret += disc * buf.transitions[i].r;
            disc *= gamma;
        }
        total += ret;
    }
    return total / static_cast<double>(buf.episode_count());
}

using RewardHook = std::function<double(const Transition&)>;

inline RewardHook task_hook(const TaskSpec& task, double dt)
{
    return [task, dt](const Transition& tr) { return task_reward(tr, dt, task); };
}

/// Anything that maps (state, rng) to an action.
template <class P>
concept ActionSource = requires(const P& p, const Vec& s, Rng& rng) {
    { p(s, rng) } -> std::convertible_to<Vec>;
};

/// Collects `n_episodes` full-horizon episodes. Episode e draws from its own
/// stream derive_seed(seed, e), so the buffer is a pure function of the seed.
template <ActionSource Policy>
Buffer rollout(const Policy& policy, const EnvSpec& spec, const RewardHook& reward, int n_episodes,
               std::uint64_t seed, int policy_id = 0)
{
    require(n_episodes >= 1, "rollout: n_episodes must be >= 1");
    Buffer buf;
    buf.env_id = spec.env_id;
    buf.meta.seed = seed;
    buf.meta.policy_ids = {policy_id};
    buf.meta.reward_desc = reward ? "hook" : "none";
    buf.transitions.reserve(static_cast<std::size_t>(n_episodes) * spec.horizon);
    for (int e = 0; e < n_episodes; ++e) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
        buf.episode_starts.push_back(buf.transitions.size());
        Vec s = env_reset(spec, rng);
        for (int t = 0; t < spec.horizon; ++t) {
            Vec a = clip_to(policy(s, rng), spec.action_bounds);
            Vec s2 = env_step(s, a, spec);
            Transition tr{s, std::move(a), 0.0, s2, t, t + 1 == spec.horizon, policy_id};
            if (reward) tr.r = reward(tr);
            buf.transitions.push_back(std::move(tr));
            s = std::move(s2);
        }
    }
    return buf;
}

} // namespace udg
