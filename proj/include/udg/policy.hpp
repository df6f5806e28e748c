#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mdp.hpp"

namespace udg {

/// Gaussian policy with a linear head on Gaussian RBF features:
///   a = clip(W^T phi(s) + exp(log_std) * eps),
///   phi_k(s) = exp(-|s - c_k|^2 / (2 h^2)).
struct PolicyParams {
    int state_dim = 2;
    int action_dim = 2;
    std::vector<double> centers;  // m x state_dim
    double bandwidth = 2.5;
    std::vector<double> weights;  // m x action_dim
    Vec log_std{std::log(0.1), std::log(0.1)};
    int id = 0;

    bool operator==(const PolicyParams&) const = default;

    int n_centers() const { return static_cast<int>(centers.size()) / state_dim; }

    void validate() const
    {
        require(state_dim >= 1 && action_dim >= 1, "PolicyParams: bad dimensions");
        require(!centers.empty() && centers.size() % state_dim == 0, "PolicyParams: centers shape");
        require(weights.size() == static_cast<std::size_t>(n_centers()) * action_dim, "PolicyParams: weights shape");
        require(static_cast<int>(log_std.size()) == action_dim, "PolicyParams: log_std size");
        require(bandwidth > 0.0 && std::isfinite(bandwidth), "PolicyParams: bandwidth must be positive");
        for (double x : centers) require(std::isfinite(x), "PolicyParams: non-finite center");
        for (double x : weights) require(std::isfinite(x), "PolicyParams: non-finite weight");
        for (double x : log_std) require(std::isfinite(x), "PolicyParams: non-finite log_std");
    }

    Vec features(const Vec& s) const
    {
        require(static_cast<int>(s.size()) == state_dim, "PolicyParams: state dimension mismatch");
        const int m = n_centers();
        Vec phi(m);
        const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
        for (int k = 0; k < m; ++k)
            phi[k] = std::exp(-squared_distance(s.data(), centers.data() + k * state_dim, state_dim) * inv);
        return phi;
    }

    Vec mean_action(const Vec& s) const
    {
        const Vec phi = features(s);
        Vec a(action_dim, 0.0);
        for (int k = 0; k < n_centers(); ++k)
            for (int j = 0; j < action_dim; ++j) a[j] += weights[k * action_dim + j] * phi[k];
        return a;
    }
};

/// Centers on a regular `per_axis`^d grid spanning the state box.
inline PolicyParams make_rbf_policy(const EnvSpec& spec, int per_axis, double bandwidth, int id = 0)
{
    require(per_axis >= 1, "make_rbf_policy: per_axis must be >= 1");
    PolicyParams p;
    p.state_dim = spec.state_dim;
    p.action_dim = spec.action_dim;
    p.bandwidth = bandwidth;
    p.id = id;
    int total = 1;
    for (int d = 0; d < spec.state_dim; ++d) total *= per_axis;
    for (int idx = 0; idx < total; ++idx) {
        int rest = idx;
        for (int d = 0; d < spec.state_dim; ++d) {
            const int k = rest % per_axis;
            rest /= per_axis;
            const auto& b = spec.state_bounds[d];
            p.centers.push_back(per_axis == 1 ? 0.5 * (b.lo + b.hi) : b.lo + b.width() * k / (per_axis - 1));
        }
    }
    p.weights.assign(static_cast<std::size_t>(total) * spec.action_dim, 0.0);
    p.log_std.assign(spec.action_dim, std::log(0.1));
    return p;
}

/// Draws i.i.d. N(0, weight_std^2) head weights.
inline void randomize_weights(PolicyParams& p, double weight_std, std::uint64_t seed)
{
    Rng rng(derive_seed(seed, 0x9017));
    for (auto& w : p.weights) w = weight_std * standard_normal(rng);
}

/// Samples an action with noise drawn from `rng`; `deterministic` zeroes it.
inline Vec policy_act(const PolicyParams& p, const Vec& s, const std::vector<Interval>& action_bounds, Rng& rng,
                      bool deterministic = false)
{
    Vec a = p.mean_action(s);
    for (int j = 0; j < p.action_dim; ++j) {
        const double eps = deterministic ? 0.0 : standard_normal(rng);
        a[j] += std::exp(p.log_std[j]) * eps;
    }
    return clip_to(a, action_bounds);
}

/// Adapts a policy to the ActionSource interface for `rollout`.
struct PolicyActor {
    const PolicyParams& params;
    const std::vector<Interval>& bounds;
    bool deterministic = false;
    Vec operator()(const Vec& s, Rng& rng) const { return policy_act(params, s, bounds, rng, deterministic); }
};

inline Buffer rollout(const PolicyParams& p, const EnvSpec& spec, const RewardHook& reward, int n_episodes,
                      std::uint64_t seed)
{
    return rollout(PolicyActor{p, spec.action_bounds}, spec, reward, n_episodes, seed, p.id);
}

// Versioned text format:
//   # udg-policy v1
//   id=<int> state_dim=<int> action_dim=<int> bandwidth=<x> centers=<...> weights=<...> log_std=<...>
inline void write_policy(std::ostream& os, const PolicyParams& p)
{
    os << "# udg-policy v1\n"
       << "id=" << p.id << " state_dim=" << p.state_dim << " action_dim=" << p.action_dim
       << " bandwidth=" << format_double(p.bandwidth) << " centers=" << format_vec(p.centers)
       << " weights=" << format_vec(p.weights) << " log_std=" << format_vec(p.log_std) << '\n';
}

inline PolicyParams read_policy(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != "# udg-policy v1")
        throw std::runtime_error("read_policy: missing 'udg-policy v1' header");
    if (!std::getline(is, line)) throw std::runtime_error("read_policy: missing body");
    PolicyParams p;
    std::istringstream ss(line);
    std::string tok;
    int seen = 0;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == tok.npos) continue;
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        ++seen;
        if (key == "id") p.id = static_cast<int>(parse_int(val));
        else if (key == "state_dim") p.state_dim = static_cast<int>(parse_int(val));
        else if (key == "action_dim") p.action_dim = static_cast<int>(parse_int(val));
        else if (key == "bandwidth") p.bandwidth = parse_double(val);
        else if (key == "centers") p.centers = parse_vec(val);
        else if (key == "weights") p.weights = parse_vec(val);
        else if (key == "log_std") p.log_std = parse_vec(val);
        else --seen;
    }
    if (seen != 7) throw std::runtime_error("read_policy: incomplete record");
    p.validate();
    return p;
}

inline void save_policy(const std::string& path, const PolicyParams& p)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_policy(os, p);
}

inline PolicyParams load_policy(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    return read_policy(is);
}

} // namespace udg
