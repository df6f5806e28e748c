#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"

namespace udg {

/// Tabular MDP with dense transition tensor T[s][a] (a distribution over
/// next states), reward r(s, a) and start distribution p0.
struct FiniteMdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<Eigen::MatrixXd> T;  // one n_states x n_states matrix per action, rows sum to 1
    Eigen::MatrixXd r;               // n_states x n_actions
    Eigen::VectorXd p0;
    double gamma = 0.9;

    void validate() const
    {
        require(n_states >= 1 && n_actions >= 1, "FiniteMdp: empty state or action set");
        require(gamma >= 0.0 && gamma < 1.0, "FiniteMdp: gamma must lie in [0,1)");
        require(static_cast<int>(T.size()) == n_actions, "FiniteMdp: one transition matrix per action");
        require(r.rows() == n_states && r.cols() == n_actions, "FiniteMdp: reward shape");
        require(p0.size() == n_states, "FiniteMdp: start distribution size");
        require(r.allFinite() && p0.allFinite(), "FiniteMdp: non-finite entries");
        require(std::abs(p0.sum() - 1.0) < 1e-12 && p0.minCoeff() >= 0.0, "FiniteMdp: p0 not a distribution");
        for (const auto& m : T) {
            require(m.rows() == n_states && m.cols() == n_states, "FiniteMdp: transition shape");
            require(m.allFinite() && m.minCoeff() >= 0.0, "FiniteMdp: bad transition entries");
            require(((m.rowwise().sum().array() - 1.0).abs() < 1e-12).all(), "FiniteMdp: rows must sum to 1");
        }
    }
};

/// pi(a | s) as an n_states x n_actions row-stochastic matrix.
using TabularPolicy = Eigen::MatrixXd;

namespace detail {

inline Eigen::VectorXd random_simplex(int n, Rng& rng)
{
    Eigen::VectorXd v(n);
    for (int k = 0; k < n; ++k) v[k] = -std::log(1.0 - uniform01(rng));  // Exp(1) -> Dirichlet(1)
    return v / v.sum();
}

inline Eigen::MatrixXd policy_transition(const FiniteMdp& m, const TabularPolicy& pi, const std::vector<Eigen::MatrixXd>& T)
{
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m.n_states, m.n_states);
    for (int a = 0; a < m.n_actions; ++a) P += pi.col(a).asDiagonal() * T[a];
    return P;
}

} // namespace detail

/// Random MDP with Dirichlet(1) rows, rewards in [-1, 1].
inline FiniteMdp random_finite_mdp(int n_states, int n_actions, double gamma, std::uint64_t seed)
{
    Rng rng(seed);
    FiniteMdp m;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.gamma = gamma;
    for (int a = 0; a < n_actions; ++a) {
        Eigen::MatrixXd t(n_states, n_states);
        for (int s = 0; s < n_states; ++s) t.row(s) = detail::random_simplex(n_states, rng).transpose();
        m.T.push_back(std::move(t));
    }
    m.r.resize(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) m.r(s, a) = 2.0 * uniform01(rng) - 1.0;
    m.p0 = detail::random_simplex(n_states, rng);
    m.validate();
    return m;
}

/// Same reward and start distribution, freshly drawn dynamics.
inline FiniteMdp perturbed_dynamics(const FiniteMdp& m, std::uint64_t seed)
{
    FiniteMdp out = random_finite_mdp(m.n_states, m.n_actions, m.gamma, seed);
    out.r = m.r;
    out.p0 = m.p0;
    return out;
}

inline TabularPolicy random_tabular_policy(int n_states, int n_actions, std::uint64_t seed)
{
    Rng rng(seed);
    TabularPolicy pi(n_states, n_actions);
    for (int s = 0; s < n_states; ++s) pi.row(s) = detail::random_simplex(n_actions, rng).transpose();
    return pi;
}

/// V^pi = (I - gamma P_pi)^{-1} r_pi.
inline Eigen::VectorXd policy_values(const FiniteMdp& m, const TabularPolicy& pi)
{
    const Eigen::MatrixXd P = detail::policy_transition(m, pi, m.T);
    const Eigen::VectorXd r_pi = (pi.array() * m.r.array()).rowwise().sum();
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m.n_states, m.n_states) - m.gamma * P;
    return A.partialPivLu().solve(r_pi);
}

inline double policy_return(const FiniteMdp& m, const TabularPolicy& pi) { return m.p0.dot(policy_values(m, pi)); }

/// Normalized discounted state-action occupancy (1 - gamma) sum_t gamma^t P(s_t, a_t).
inline Eigen::MatrixXd state_action_occupancy(const FiniteMdp& m, const TabularPolicy& pi)
{
    const Eigen::MatrixXd P = detail::policy_transition(m, pi, m.T);
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m.n_states, m.n_states) - m.gamma * P.transpose();
    const Eigen::VectorXd d = (1.0 - m.gamma) * A.partialPivLu().solve(m.p0);
    return d.asDiagonal() * pi;
}

struct TelescopingResult {
    double lhs = 0.0;  // eta_hat - eta
    double rhs = 0.0;  // c * gamma * E_{rho_hat}[G]
    double residual = 0.0;
};

/// Both sides of the telescoping identity for MDPs `m` (true) and `m_hat`
/// (model) sharing reward and start distribution, evaluated exactly.
inline TelescopingResult verify_telescoping(const FiniteMdp& m, const FiniteMdp& m_hat, const TabularPolicy& pi)
{
    m.validate();
    m_hat.validate();
    require(m.n_states == m_hat.n_states && m.n_actions == m_hat.n_actions, "verify_telescoping: shape mismatch");
    require(m.gamma == m_hat.gamma, "verify_telescoping: gamma mismatch");
    require(m.r == m_hat.r && m.p0 == m_hat.p0, "verify_telescoping: reward or start distribution differ");
    require(pi.rows() == m.n_states && pi.cols() == m.n_actions && pi.allFinite(), "verify_telescoping: bad policy");

    const Eigen::VectorXd v = policy_values(m, pi);
    const Eigen::MatrixXd rho_hat = state_action_occupancy(m_hat, pi);
    double expected_gap = 0.0;
    for (int a = 0; a < m.n_actions; ++a) {
        const Eigen::VectorXd g = (m_hat.T[a] - m.T[a]) * v;
        expected_gap += rho_hat.col(a).dot(g);
    }
    TelescopingResult out;
    out.lhs = policy_return(m_hat, pi) - policy_return(m, pi);
    out.rhs = m.gamma / (1.0 - m.gamma) * expected_gap;
    out.residual = std::abs(out.lhs - out.rhs);
    return out;
}

} // namespace udg
