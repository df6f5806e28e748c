#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "pipeline.hpp"

namespace udg {

/// Flat `key = value` settings; '#' starts a comment, blank lines are ignored.
using Settings = std::map<std::string, std::string>;

inline std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == s.npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

inline Settings parse_settings(std::istream& is)
{
    Settings out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != line.npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == body.npos) throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        if (key.empty()) throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
        if (out.count(key)) throw std::runtime_error("config line " + std::to_string(lineno) + ": duplicate key " + key);
        out[key] = trim(std::string_view(body).substr(eq + 1));
    }
    return out;
}

inline Settings load_settings(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    return parse_settings(in);
}

struct ExperimentConfig {
    UdgConfig udg;
    OracleOptions oracle;
    /// Buffers of a policy trained on this task alone, used as the
    /// supervised baseline.
    TaskSpec baseline_task = TaskSpec::angle(0.0);
    int baseline_rounds = 3;
    /// Task on which the gap report is computed.
    TaskSpec gap_task = TaskSpec::angle(60.0);
    int occupancy_episodes = 10;

    ExperimentConfig() { udg.tasks = angle_sweep(); }
};

namespace detail {

// Comma-separated numbers; whitespace around items is allowed.
inline Vec parse_list(std::string_view s)
{
    Vec out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = s.find(',', pos);
        out.push_back(parse_double(trim(s.substr(pos, comma == s.npos ? s.npos : comma - pos))));
        if (comma == s.npos) break;
        pos = comma + 1;
    }
    return out;
}

inline std::vector<int> parse_ints(std::string_view s)
{
    std::vector<int> out;
    for (double x : parse_list(s)) {
        require(x == std::floor(x), "config: expected integers, got " + std::string(s));
        out.push_back(static_cast<int>(x));
    }
    return out;
}

inline std::vector<TaskSpec> parse_tasks(std::string_view s)
{
    std::vector<TaskSpec> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const std::string item = trim(s.substr(pos, comma == s.npos ? s.npos : comma - pos));
        if (!item.empty()) out.push_back(TaskSpec::parse(item));
        if (comma == s.npos) break;
        pos = comma + 1;
    }
    return out;
}

inline std::vector<Interval> parse_box(std::string_view s, int dims)
{
    const Vec v = parse_list(s);
    require(v.size() == 2, "config: a box is given as lo,hi");
    return std::vector<Interval>(dims, Interval{v[0], v[1]});
}

} // namespace detail

/// Applies `settings` on top of `cfg`. Unknown keys are rejected.
inline void apply_settings(ExperimentConfig& cfg, const Settings& settings)
{
    auto& u = cfg.udg;
    bool lipschitz_given = false;
    for (const auto& [key, value] : settings) {
        const auto num = [&] { return parse_double(value); };
        const auto integer = [&] { return static_cast<int>(parse_int(value)); };
        if (key == "seed") u.seed = static_cast<std::uint64_t>(parse_int(value));
        else if (key == "env.dt") u.spec.dt = num();
        else if (key == "env.horizon") u.spec.horizon = integer();
        else if (key == "env.gamma") u.spec.gamma = num();
        else if (key == "env.state_box") u.spec.state_bounds = detail::parse_box(value, u.spec.state_dim);
        else if (key == "env.action_box") u.spec.action_bounds = detail::parse_box(value, u.spec.action_dim);
        else if (key == "env.start_spread") u.spec.start_spread = num();
        else if (key == "env.lipschitz_r") u.spec.lipschitz_r = num();
        else if (key == "env.lipschitz_T") {
            u.spec.lipschitz_T = num();
            lipschitz_given = true;
        }
        else if (key == "diversity.n_policies") u.diversity.n_policies = integer();
        else if (key == "diversity.rounds") u.diversity.rounds = integer();
        else if (key == "diversity.lambda") u.diversity.lambda = num();
        else if (key == "diversity.partial_task") {
            if (value.empty() || value == "none") u.diversity.partial_task.reset();
            else u.diversity.partial_task = TaskSpec::parse(value);
        }
        else if (key == "diversity.distance_mode") {
            require(value == "exact" || value == "sliced", "config: distance_mode is exact or sliced");
            u.diversity.distance_mode = value == "exact" ? DistanceMode::exact : DistanceMode::sliced;
        }
        else if (key == "diversity.n_projections") u.diversity.n_projections = integer();
        else if (key == "diversity.projection") u.diversity.projection = detail::parse_ints(value);
        else if (key == "diversity.rbf_per_axis") u.diversity.rbf_per_axis = integer();
        else if (key == "diversity.rbf_bandwidth") u.diversity.rbf_bandwidth = num();
        else if (key == "diversity.init_weight_std") u.diversity.init_weight_std = num();
        else if (key == "diversity.action_std") u.diversity.action_std = num();
        else if (key == "cem.population") u.diversity_cem.population = integer();
        else if (key == "cem.elite_frac") u.diversity_cem.elite_frac = num();
        else if (key == "cem.iterations") u.diversity_cem.iterations = integer();
        else if (key == "cem.init_std") u.diversity_cem.init_std = num();
        else if (key == "cem.eval_episodes") u.diversity_cem.eval_episodes = integer();
        else if (key == "offline.rollout_k") u.offline.rollout_k = integer();
        else if (key == "offline.n_start_states") u.offline.n_start_states = integer();
        else if (key == "offline.kappa") {
            if (value == "auto") u.offline.kappa.reset();
            else u.offline.kappa = num();
        }
        else if (key == "offline.population") u.offline.cem.population = integer();
        else if (key == "offline.elite_frac") u.offline.cem.elite_frac = num();
        else if (key == "offline.iterations") u.offline.cem.iterations = integer();
        else if (key == "offline.init_std") u.offline.cem.init_std = num();
        else if (key == "offline.policy_std") u.offline.policy_std = num();
        else if (key == "offline.bc_ridge") u.offline.bc_ridge = num();
        else if (key == "pipeline.tasks") u.tasks = detail::parse_tasks(value);
        else if (key == "pipeline.buffer_episodes") u.buffer_episodes = integer();
        else if (key == "pipeline.eval_episodes") {
            u.eval_episodes = integer();
            cfg.oracle.eval_episodes = u.eval_episodes;
        }
        else if (key == "pipeline.baseline_task") cfg.baseline_task = TaskSpec::parse(value);
        else if (key == "pipeline.baseline_rounds") cfg.baseline_rounds = integer();
        else if (key == "pipeline.gap_task") cfg.gap_task = TaskSpec::parse(value);
        else if (key == "pipeline.occupancy_episodes") cfg.occupancy_episodes = integer();
        else if (key == "oracle.resolution") cfg.oracle.planner.resolution = detail::parse_ints(value);
        else if (key == "oracle.tolerance") cfg.oracle.planner.tolerance = num();
        else if (key == "oracle.rollouts") cfg.oracle.rollouts = integer();
        else throw std::runtime_error("config: unknown key '" + key + "'");
    }
    if (!lipschitz_given) u.spec.lipschitz_T = std::sqrt(1.0 + u.spec.dt * u.spec.dt);
    u.spec.validate();
    u.diversity.validate();
    u.diversity_cem.validate();
    u.offline.validate();
    require(u.buffer_episodes >= 1 && u.eval_episodes >= 1, "config: episode counts must be >= 1");
    require(cfg.oracle.rollouts >= 1, "config: oracle.rollouts must be >= 1");
}

} // namespace udg
