#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "common.hpp"

namespace udg {

/// Exact nearest-neighbour index over a fixed point set. Among equidistant
/// points the one with the lowest original index wins, so results match a
/// first-minimum linear scan.
class KdTree {
public:
    struct Hit {
        std::size_t index = 0;
        double squared_distance = std::numeric_limits<double>::infinity();
    };

    KdTree() = default;

    /// `points` is row-major n x dim and must outlive the tree.
    KdTree(std::span<const double> points, std::size_t dim, std::size_t leaf_size = 8)
        : points_(points), dim_(dim), leaf_size_(std::max<std::size_t>(1, leaf_size))
    {
        require(dim >= 1 && points.size() % dim == 0, "KdTree: bad point array");
        order_.resize(points.size() / dim);
        std::iota(order_.begin(), order_.end(), 0);
        if (!order_.empty()) build(0, order_.size());
    }

    std::size_t size() const { return order_.size(); }
    std::size_t dim() const { return dim_; }

    Hit nearest(std::span<const double> query) const
    {
        require(query.size() == dim_, "KdTree: query dimension mismatch");
        require(!order_.empty(), "KdTree: empty index");
        Hit best;
        search(0, query.data(), best);
        return best;
    }

private:
    struct Node {
        std::size_t first = 0;
        std::size_t last = 0;
        int axis = -1;  // -1 marks a leaf
        double split = 0.0;
        std::size_t left = 0;
        std::size_t right = 0;
    };

    double coord(std::size_t idx, std::size_t axis) const { return points_[idx * dim_ + axis]; }

    std::size_t build(std::size_t first, std::size_t last)
    {
        const std::size_t id = nodes_.size();
        nodes_.push_back({first, last});
        if (last - first <= leaf_size_) return id;

        // Split the widest axis at the median.
        std::size_t axis = 0;
        double widest = -1.0;
        for (std::size_t a = 0; a < dim_; ++a) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t k = first; k < last; ++k) {
                lo = std::min(lo, coord(order_[k], a));
                hi = std::max(hi, coord(order_[k], a));
            }
            if (hi - lo > widest) {
                widest = hi - lo;
                axis = a;
            }
        }
        if (widest <= 0.0) return id;  // all points coincide
        const std::size_t mid = first + (last - first) / 2;
        std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + last,
                         [&](std::size_t x, std::size_t y) { return coord(x, axis) < coord(y, axis); });
        const double split = coord(order_[mid], axis);
        const std::size_t left = build(first, mid);
        const std::size_t right = build(mid, last);
        nodes_[id].axis = static_cast<int>(axis);
        nodes_[id].split = split;
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void search(std::size_t id, const double* q, Hit& best) const
    {
        const Node& node = nodes_[id];
        if (node.axis < 0) {
            for (std::size_t k = node.first; k < node.last; ++k) {
                const std::size_t idx = order_[k];
                const double d = squared_distance(q, points_.data() + idx * dim_, dim_);
                if (d < best.squared_distance || (d == best.squared_distance && idx < best.index))
                    best = {idx, d};
            }
            return;
        }
        // Left holds coords <= split, right holds coords >= split.
        const double diff = q[node.axis] - node.split;
        const std::size_t near = diff <= 0.0 ? node.left : node.right;
        const std::size_t far = diff <= 0.0 ? node.right : node.left;
        search(near, q, best);
        // Ties may hide a lower index on the far side, so prune only on strict excess.
        if (diff * diff <= best.squared_distance) search(far, q, best);
    }

    std::span<const double> points_;
    std::size_t dim_ = 0;
    std::size_t leaf_size_ = 8;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

} // namespace udg
