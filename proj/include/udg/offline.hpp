#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cem.hpp"
#include "episodic_model.hpp"
#include "policy.hpp"

namespace udg {

struct OfflineConfig {
    int rollout_k = 10;
    int n_start_states = 64;
    /// Uncertainty coefficient; unset means lipschitz_r * lipschitz_T.
    std::optional<double> kappa;
    CemConfig cem{32, 0.25, 12, 0.5, 1, 0};
    int rbf_per_axis = 3;
    double rbf_bandwidth = 2.5;
    /// Action noise of the returned policy.
    double policy_std = 0.1;
    double bc_ridge = 1e-3;
    std::uint64_t seed = 0;

    double resolved_kappa(const EnvSpec& spec) const { return kappa ? *kappa : spec.lipschitz_r * spec.lipschitz_T; }

    void validate() const
    {
        require(rollout_k >= 1, "OfflineConfig: rollout_k must be >= 1");
        require(n_start_states >= 1, "OfflineConfig: n_start_states must be >= 1");
        require(!kappa || *kappa > 0.0, "OfflineConfig: kappa must be positive");
        require(policy_std > 0.0, "OfflineConfig: policy_std must be positive");
        cem.validate();
    }
};

struct ReturnStats {
    double mean = 0.0;
    double std = 0.0;
};

/// Monte-Carlo discounted return in the true environment.
template <ActionSource Policy>
ReturnStats evaluate_actor(const Policy& actor, const EnvSpec& spec, const TaskSpec& task, int n_episodes,
                           std::uint64_t seed)
{
    const Buffer buf = rollout(actor, spec, task_hook(task, spec.dt), n_episodes, seed);
    std::vector<double> returns;
    for (std::size_t e = 0; e < buf.episode_count(); ++e) {
        auto [lo, hi] = buf.episode_range(e);
        double disc = 1.0, ret = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            ret += disc * buf.transitions[i].r;
            disc *= spec.gamma;
        }
        returns.push_back(ret);
    }
    ReturnStats out;
    for (double r : returns) out.mean += r;
    out.mean /= static_cast<double>(returns.size());
    for (double r : returns) out.std += (r - out.mean) * (r - out.mean);
    out.std = std::sqrt(out.std / static_cast<double>(returns.size()));
    return out;
}

inline ReturnStats evaluate_policy(const PolicyParams& p, const EnvSpec& spec, const TaskSpec& task, int n_episodes,
                                   std::uint64_t seed)
{
    require(n_episodes >= 1, "evaluate_policy: n_episodes must be >= 1");
    return evaluate_actor(PolicyActor{p, spec.action_bounds}, spec, task, n_episodes, seed);
}

/// Ridge least-squares fit of the RBF head to the buffer's actions.
inline Vec behavior_clone(const PolicyParams& shape, const Buffer& buf, double ridge)
{
    const int m = shape.n_centers();
    const int da = shape.action_dim;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, da);
    for (const auto& tr : buf.transitions) {
        const Vec phi = shape.features(tr.s);
        const Eigen::Map<const Eigen::VectorXd> f(phi.data(), m);
        gram.noalias() += f * f.transpose();
        for (int j = 0; j < da; ++j) rhs.col(j) += f * tr.a[j];
    }
    gram.diagonal().array() += ridge * static_cast<double>(buf.size());
    const Eigen::MatrixXd w = gram.ldlt().solve(rhs);
    Vec out(static_cast<std::size_t>(m) * da);
    for (int k = 0; k < m; ++k)
        for (int j = 0; j < da; ++j) out[k * da + j] = w(k, j);
    return out;
}

struct ModelRolloutStats {
    double penalized_return = 0.0;  // mean over starts of sum_t gamma^t r_pen
    double raw_return = 0.0;        // same with r_raw
    double mean_u = 0.0;            // mean u over every model step
    double discounted_u = 0.0;      // mean over starts of sum_t gamma^t u
};

/// Deterministic k-step rollouts of the policy mean inside the penalized
/// model; the value after step k is taken as 0.
inline ModelRolloutStats model_rollouts(const EpisodicModel& model, const PolicyParams& p, const TaskSpec& task,
                                        const std::vector<Vec>& starts, int k,
                                        const std::vector<Interval>& action_bounds,
                                        std::vector<Vec>* visited = nullptr)
{
    ModelRolloutStats st;
    for (const auto& s0 : starts) {
        Vec s = s0;
        double disc = 1.0;
        for (int t = 0; t < k; ++t) {
            const Vec a = clip_to(p.mean_action(s), action_bounds);
            const auto q = model_query(model, s, a, task);
            st.penalized_return += disc * q.r_pen;
            st.raw_return += disc * q.r_raw;
            st.discounted_u += disc * q.u;
            st.mean_u += q.u;
            disc *= model.gamma();
            if (visited) visited->push_back(q.s_next);
            s = q.s_next;
        }
    }
    const auto n = static_cast<double>(starts.size());
    st.penalized_return /= n;
    st.raw_return /= n;
    st.discounted_u /= n;
    st.mean_u /= n * k;
    return st;
}

/// Start states drawn uniformly (with replacement) from the buffer.
inline std::vector<Vec> sample_start_states(const Buffer& buf, int n, std::uint64_t seed)
{
    require(!buf.empty(), "sample_start_states: empty buffer");
    Rng rng(derive_seed(seed, 0x57A7));
    std::vector<Vec> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(buf.transitions[rng() % buf.size()].s);
    return out;
}

/// Policy shape used by the offline learner.
inline PolicyParams offline_policy_shape(const EnvSpec& spec, const OfflineConfig& cfg)
{
    auto p = make_rbf_policy(spec, cfg.rbf_per_axis, cfg.rbf_bandwidth, 0);
    p.log_std.assign(spec.action_dim, std::log(cfg.policy_std));
    return p;
}

/// CEM maximization of the mean penalized k-step model return over start
/// states drawn from the buffer, starting from a behavior-cloned head.
inline PolicyParams mopo_lite_train(const EpisodicModel& model, const Buffer& buf, const TaskSpec& task,
                                    const EnvSpec& spec, const OfflineConfig& cfg)
{
    require(!buf.empty(), "mopo_lite_train: empty buffer");
    require(!model.empty(), "mopo_lite_train: empty model");
    cfg.validate();
    const auto starts = sample_start_states(buf, cfg.n_start_states, cfg.seed);
    PolicyParams policy = offline_policy_shape(spec, cfg);
    PolicyParams candidate = policy;
    auto objective = [&](const Vec& theta) {
        candidate.weights = theta;
        return model_rollouts(model, candidate, task, starts, cfg.rollout_k, spec.action_bounds).penalized_return;
    };
    CemConfig cem = cfg.cem;
    cem.seed = derive_seed(cfg.seed, 0x0FF1);
    policy.weights = cem_optimize(objective, behavior_clone(policy, buf, cfg.bc_ridge), cem).best;
    return policy;
}

/// Builds the model from `buf` with the configured kappa and trains on it.
inline PolicyParams offline_train(const Buffer& buf, const TaskSpec& task, const EnvSpec& spec,
                                  const OfflineConfig& cfg)
{
    require(!buf.empty(), "offline_train: empty buffer");
    const auto model = model_build(buf, cfg.resolved_kappa(spec), spec.gamma, spec.dt);
    return mopo_lite_train(model, buf, task, spec, cfg);
}

} // namespace udg
