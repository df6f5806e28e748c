#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "kdtree.hpp"
#include "mdp.hpp"

namespace udg {

/// Result of one model step in the uncertainty-penalized MDP.
struct PenalizedQuery {
    Vec s_next;
    double r_raw = 0.0;
    double u = 0.0;
    double r_pen = 0.0;
    std::size_t entry = 0;
};

/// Non-parametric dynamics: answers (s, a) with the stored next state of the
/// nearest memory key and charges u = kappa * key distance. Immutable once
/// built; copies share the memory and index.
class EpisodicModel {
public:
    EpisodicModel() = default;

    std::size_t size() const { return impl_ ? impl_->memory.size() : 0; }
    bool empty() const { return size() == 0; }
    double kappa() const { return impl_->kappa; }
    double gamma() const { return impl_->gamma; }
    double dt() const { return impl_->dt; }
    const std::vector<Transition>& memory() const { return impl_->memory; }
    const std::vector<double>& keys() const { return impl_->keys; }
    std::size_t key_dim() const { return impl_->key_dim; }

    friend EpisodicModel model_build(const Buffer& buf, double kappa, double gamma, double dt, Vec key_scale);
    friend PenalizedQuery model_query(const EpisodicModel& m, const Vec& s, const Vec& a, const TaskSpec& task);

    /// Scaled (s, a) key used for the nearest-entry search.
    Vec make_key(const Vec& s, const Vec& a) const
    {
        require(s.size() + a.size() == impl_->key_dim, "EpisodicModel: query dimension mismatch");
        Vec key(impl_->key_dim);
        for (std::size_t k = 0; k < s.size(); ++k) key[k] = s[k] * impl_->key_scale[k];
        for (std::size_t k = 0; k < a.size(); ++k) key[s.size() + k] = a[k] * impl_->key_scale[s.size() + k];
        return key;
    }

private:
    struct Impl {
        std::vector<Transition> memory;
        std::vector<double> keys;
        std::size_t key_dim = 0;
        Vec key_scale;
        KdTree index;
        double kappa = 1.0;
        double gamma = 0.99;
        double dt = 0.1;
    };
    std::shared_ptr<const Impl> impl_;
};

/// Builds the memory from every transition of `buf`. `key_scale` multiplies
/// each (s, a) coordinate before distances are taken; empty means identity.
inline EpisodicModel model_build(const Buffer& buf, double kappa, double gamma, double dt, Vec key_scale = {})
{
    require(!buf.empty(), "model_build: empty buffer");
    require(kappa > 0.0 && std::isfinite(kappa), "model_build: kappa must be positive");
    require(gamma >= 0.0 && gamma < 1.0, "model_build: gamma must lie in [0,1)");
    require(dt > 0.0, "model_build: dt must be positive");
    auto impl = std::make_shared<EpisodicModel::Impl>();
    impl->memory = buf.transitions;
    impl->kappa = kappa;
    impl->gamma = gamma;
    impl->dt = dt;
    const std::size_t ds = buf.transitions.front().s.size(), da = buf.transitions.front().a.size();
    impl->key_dim = ds + da;
    impl->key_scale = key_scale.empty() ? Vec(ds + da, 1.0) : std::move(key_scale);
    require(impl->key_scale.size() == ds + da, "model_build: key_scale size mismatch");
    impl->keys.reserve(buf.size() * impl->key_dim);
    for (const auto& tr : buf.transitions) {
        require(tr.s.size() == ds && tr.a.size() == da, "model_build: inconsistent transition dimensions");
        for (std::size_t k = 0; k < ds; ++k) impl->keys.push_back(tr.s[k] * impl->key_scale[k]);
        for (std::size_t k = 0; k < da; ++k) impl->keys.push_back(tr.a[k] * impl->key_scale[ds + k]);
    }
    impl->index = KdTree(impl->keys, impl->key_dim);
    EpisodicModel m;
    m.impl_ = std::move(impl);
    return m;
}

/// One step of the penalized model: r_pen = r(s, a, s_next) - gamma * u.
inline PenalizedQuery model_query(const EpisodicModel& m, const Vec& s, const Vec& a, const TaskSpec& task)
{
    require(!m.empty(), "model_query: empty model");
    const Vec key = m.make_key(s, a);
    const auto hit = m.impl_->index.nearest(key);
    PenalizedQuery q;
    q.entry = hit.index;
    q.s_next = m.impl_->memory[hit.index].s2;
    q.u = m.impl_->kappa * std::sqrt(hit.squared_distance);
    q.r_raw = task_reward(s, q.s_next, m.impl_->dt, task);
    q.r_pen = q.r_raw - m.impl_->gamma * q.u;
    return q;
}

} // namespace udg
