#pragma once

#include "tuberrt/geometry.hpp"

#include <limits>
#include <vector>

namespace tuberrt {

/// Incremental 3-D kd-tree over (point, id) pairs. Insertion order follows
/// node ids, which keeps queries deterministic; nearest breaks distance ties
/// toward the lowest id.
class KdTree3 {
public:
    void insert(const Vec3& p, int id) {
        const int idx = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{p, id, 0, -1, -1});
        if (root_ < 0) {
            root_ = idx;
            return;
        }
        int cur = root_;
        for (;;) {
            Node& n = nodes_[static_cast<std::size_t>(cur)];
            const int axis = n.axis;
            int& child = (p[axis] < n.p[axis]) ? n.left : n.right;
            if (child < 0) {
                child = idx;
                nodes_[static_cast<std::size_t>(idx)].axis = (axis + 1) % 3;
                return;
            }
            cur = child;
        }
    }

    bool empty() const { return root_ < 0; }

    /// Id of the stored point minimizing distance to q; -1 when empty.
    int nearest(const Vec3& q) const {
        if (root_ < 0) return -1;
        Best best;
        nearest_rec(root_, q, best);
        return best.id;
    }

    /// Ids of all stored points with distance <= radius, unordered.
    void radius_search(const Vec3& q, double radius, std::vector<int>& out) const {
        if (root_ >= 0) radius_rec(root_, q, radius, radius * radius, out);
    }

private:
    struct Node {
        Vec3 p;
        int id;
        int axis;
        int left;
        int right;
    };
    struct Best {
        double d2{std::numeric_limits<double>::infinity()};
        int id{-1};
    };

    void nearest_rec(int idx, const Vec3& q, Best& best) const {
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        const double d2 = (n.p - q).squaredNorm();
        if (d2 < best.d2 || (d2 == best.d2 && n.id < best.id)) {
            best.d2 = d2;
            best.id = n.id;
        }
        const double diff = q[n.axis] - n.p[n.axis];
        const int near_side = (diff < 0.0) ? n.left : n.right;
        const int far_side = (diff < 0.0) ? n.right : n.left;
        if (near_side >= 0) nearest_rec(near_side, q, best);
        // <= so equal-distance points across the plane are still visited and
        // the lowest-id tie-break stays exact.
        if (far_side >= 0 && diff * diff <= best.d2) nearest_rec(far_side, q, best);
    }

    void radius_rec(int idx, const Vec3& q, double r, double r2, std::vector<int>& out) const {
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        if ((n.p - q).squaredNorm() <= r2) out.push_back(n.id);
        const double diff = q[n.axis] - n.p[n.axis];
        if (n.left >= 0 && diff <= r) radius_rec(n.left, q, r, r2, out);
        if (n.right >= 0 && diff >= -r) radius_rec(n.right, q, r, r2, out);
    }

    std::vector<Node> nodes_;
    int root_{-1};
};

}  // namespace tuberrt
