#pragma once

// Exact solvers for the discrete transportation problem
//
//   min sum_ij C_ij f_ij   s.t.  sum_j f_ij = a_i,  sum_i f_ij = b_j,  f >= 0
//
// on the complete bipartite graph. `solve_transport` is a primal network
// simplex over spanning-tree bases; `solve_assignment` is the O(n^3)
// shortest-augmenting-path Hungarian method for square uniform problems.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "common.hpp"

namespace udg {

struct FlowEntry {
    int i = 0;
    int j = 0;
    double mass = 0.0;
};

struct TransportSolution {
    std::vector<FlowEntry> flows;  // basic cells with positive mass
    double cost = 0.0;
    long iterations = 0;
};

class TransportSimplex {
public:
    /// `cost` is row-major n x m. Supplies and demands must have equal totals.
    TransportSimplex(std::span<const double> supply, std::span<const double> demand, std::span<const double> cost)
        : n_(static_cast<int>(supply.size())), m_(static_cast<int>(demand.size())), cost_(cost)
    {
        require(n_ >= 1 && m_ >= 1, "TransportSimplex: empty problem");
        require(cost.size() == static_cast<std::size_t>(n_) * m_, "TransportSimplex: cost size mismatch");
        double cmax = 0.0;
        for (double c : cost) cmax = std::max(cmax, std::abs(c));
        eps_ = 1e-13 * std::max(1.0, cmax);
        northwest_corner(supply, demand);
    }

    TransportSolution solve(long max_iterations = -1)
    {
        const int nodes = n_ + m_;
        if (max_iterations < 0) max_iterations = 200L * nodes * std::max(1, static_cast<int>(std::log2(nodes + 1)));
        const long total = static_cast<long>(n_) * m_;
        const long block = std::max<long>(16, static_cast<long>(std::sqrt(static_cast<double>(total))));
        long cursor = 0;
        long iterations = 0;
        build_tree();
        while (true) {
            // Block pricing: scan blocks of cells until one holds a violated
            // reduced cost, then enter its most negative cell.
            long best = -1;
            double best_rc = -eps_;
            long scanned = 0;
            while (scanned < total) {
                const long stop = std::min(total, scanned + block);
                for (; scanned < stop; ++scanned) {
                    const long k = cursor;
                    if (++cursor == total) cursor = 0;
                    const int i = static_cast<int>(k / m_);
                    const int j = static_cast<int>(k % m_);
                    const double rc = cost_[k] - pot_[i] - pot_[n_ + j];
                    if (rc < best_rc) {
                        best_rc = rc;
                        best = k;
                    }
                }
                if (best >= 0) break;
            }
            if (best < 0) break;
            if (++iterations > max_iterations) throw std::runtime_error("TransportSimplex: iteration limit reached");
            pivot(static_cast<int>(best / m_), static_cast<int>(best % m_));
        }

        TransportSolution out;
        out.iterations = iterations;
        for (const auto& arc : arcs_) {
            if (arc.flow <= 0.0) continue;
            out.flows.push_back({arc.i, arc.j, arc.flow});
            out.cost += arc.flow * cost_[static_cast<std::size_t>(arc.i) * m_ + arc.j];
        }
        std::sort(out.flows.begin(), out.flows.end(),
                  [](const FlowEntry& x, const FlowEntry& y) { return x.i != y.i ? x.i < y.i : x.j < y.j; });
        return out;
    }

private:
    struct Arc {
        int i;
        int j;
        double flow;
    };

    // Staircase start: exactly n + m - 1 cells forming a spanning tree.
    void northwest_corner(std::span<const double> supply, std::span<const double> demand)
    {
        adj_.assign(static_cast<std::size_t>(n_ + m_), {});
        arcs_.reserve(static_cast<std::size_t>(n_ + m_ - 1));
        int i = 0, j = 0;
        double ra = supply[0], rb = demand[0];
        while (true) {
            const double q = std::max(0.0, std::min(ra, rb));
            add_arc(i, j, q);
            ra -= q;
            rb -= q;
            if (i == n_ - 1 && j == m_ - 1) break;
            if ((ra <= rb && i < n_ - 1) || j == m_ - 1) {
                ++i;
                ra = supply[i];
                rb = std::max(rb, 0.0);
            } else {
                ++j;
                rb = demand[j];
                ra = std::max(ra, 0.0);
            }
        }
    }

    void add_arc(int i, int j, double flow)
    {
        const int id = static_cast<int>(arcs_.size());
        arcs_.push_back({i, j, flow});
        adj_[i].push_back(id);
        adj_[n_ + j].push_back(id);
    }

    static void erase_id(std::vector<int>& ids, int id)
    {
        ids.erase(std::find(ids.begin(), ids.end(), id));
    }

    int other_end(const Arc& arc, int node) const { return node == arc.i ? n_ + arc.j : arc.i; }

    // Rebuilds parents, depths and potentials (u_i + v_j = C_ij on the tree).
    void build_tree()
    {
        const int nodes = n_ + m_;
        parent_arc_.assign(nodes, -1);
        depth_.assign(nodes, -1);
        pot_.assign(nodes, 0.0);
        queue_.clear();
        queue_.push_back(0);
        depth_[0] = 0;
        for (std::size_t head = 0; head < queue_.size(); ++head) {
            const int node = queue_[head];
            for (int id : adj_[node]) {
                const Arc& arc = arcs_[id];
                const int next = other_end(arc, node);
                if (depth_[next] >= 0) continue;
                depth_[next] = depth_[node] + 1;
                parent_arc_[next] = id;
                const double c = cost_[static_cast<std::size_t>(arc.i) * m_ + arc.j];
                pot_[next] = c - pot_[node];
                queue_.push_back(next);
            }
        }
    }

    void pivot(int in_i, int in_j)
    {
        // Tree path from sink (in_j) to source (in_i); arcs at even positions
        // along that walk lose flow when the entering cell gains it.
        int a = n_ + in_j, b = in_i;
        path_a_.clear();
        path_b_.clear();
        while (depth_[a] > depth_[b]) {
            path_a_.push_back(parent_arc_[a]);
            a = other_end(arcs_[parent_arc_[a]], a);
        }
        while (depth_[b] > depth_[a]) {
            path_b_.push_back(parent_arc_[b]);
            b = other_end(arcs_[parent_arc_[b]], b);
        }
        while (a != b) {
            path_a_.push_back(parent_arc_[a]);
            a = other_end(arcs_[parent_arc_[a]], a);
            path_b_.push_back(parent_arc_[b]);
            b = other_end(arcs_[parent_arc_[b]], b);
        }
        path_a_.insert(path_a_.end(), path_b_.rbegin(), path_b_.rend());

        double theta = std::numeric_limits<double>::infinity();
        int leave_pos = -1;
        for (std::size_t p = 0; p < path_a_.size(); p += 2) {
            const double f = arcs_[path_a_[p]].flow;
            if (f < theta) {
                theta = f;
                leave_pos = static_cast<int>(p);
            }
        }
        theta = std::max(theta, 0.0);
        for (std::size_t p = 0; p < path_a_.size(); ++p) {
            Arc& arc = arcs_[path_a_[p]];
            arc.flow += (p % 2 == 0) ? -theta : theta;
            if (arc.flow < 0.0) arc.flow = 0.0;
        }
        const int leave = path_a_[leave_pos];
        erase_id(adj_[arcs_[leave].i], leave);
        erase_id(adj_[n_ + arcs_[leave].j], leave);
        arcs_[leave] = {in_i, in_j, theta};
        adj_[in_i].push_back(leave);
        adj_[n_ + in_j].push_back(leave);
        build_tree();
    }

    int n_;
    int m_;
    std::span<const double> cost_;
    double eps_ = 0.0;
    std::vector<Arc> arcs_;
    std::vector<std::vector<int>> adj_;
    std::vector<int> parent_arc_;
    std::vector<int> depth_;
    std::vector<double> pot_;
    std::vector<int> queue_;
    std::vector<int> path_a_;
    std::vector<int> path_b_;
};

inline TransportSolution solve_transport(std::span<const double> supply, std::span<const double> demand,
                                         std::span<const double> cost)
{
    return TransportSimplex(supply, demand, cost).solve();
}

/// Minimum-cost perfect matching for a square n x n cost matrix.
/// Returns row -> column assignment.
inline std::vector<int> solve_assignment(std::span<const double> cost, int n)
{
    require(n >= 1 && cost.size() == static_cast<std::size_t>(n) * n, "solve_assignment: cost must be n x n");
    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based potentials; column 0 is the virtual start.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int row = 1; row <= n; ++row) {
        match[0] = row;
        int col0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[col0] = 1;
            const int r = match[col0];
            double delta = inf;
            int col1 = 0;
            for (int c = 1; c <= n; ++c) {
                if (used[c]) continue;
                const double cur = cost[static_cast<std::size_t>(r - 1) * n + (c - 1)] - u[r] - v[c];
                if (cur < minv[c]) {
                    minv[c] = cur;
                    way[c] = col0;
                }
                if (minv[c] < delta) {
                    delta = minv[c];
                    col1 = c;
                }
            }
            for (int c = 0; c <= n; ++c) {
                if (used[c]) {
                    u[match[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = col1;
        } while (match[col0] != 0);
        do {
            const int col1 = way[col0];
            match[col0] = match[col1];
            col0 = col1;
        } while (col0);
    }
    std::vector<int> assignment(n);
    for (int c = 1; c <= n; ++c) assignment[match[c] - 1] = c - 1;
    return assignment;
}

} // namespace udg
