#include "scenesearch/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace scenesearch {

namespace {

double coord(const Point3& p, int axis) {
    switch (axis) {
        case 0: return p.x;
        case 1: return p.y;
        default: return p.z;
    }
}

}  // namespace

SpatialIndex::SpatialIndex(const PointCloud& cloud) : points_(cloud.points) {
    for (const Point3& p : points_) {
        if (!p.finite()) {
            throw std::invalid_argument("spatial index: points must be finite");
        }
    }
    if (points_.empty()) {
        return;
    }
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) {
        order_[i] = static_cast<int>(i);
    }
    nodes_.reserve(points_.size());
    root_ = build(0, static_cast<int>(points_.size()));
}

int SpatialIndex::build(int begin, int end) {
    if (begin >= end) {
        return -1;
    }
    // Split along the axis with the largest extent over this range.
    Point3 lo = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(begin)])];
    Point3 hi = lo;
    for (int i = begin; i < end; ++i) {
        const Point3& p = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
        hi.z = std::max(hi.z, p.z);
    }
    const double ex = hi.x - lo.x;
    const double ey = hi.y - lo.y;
    const double ez = hi.z - lo.z;
    int axis = 0;
    if (ey > ex && ey >= ez) {
        axis = 1;
    } else if (ez > ex && ez > ey) {
        axis = 2;
    }

    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         const double ca = coord(points_[static_cast<std::size_t>(a)], axis);
                         const double cb = coord(points_[static_cast<std::size_t>(b)], axis);
                         if (ca != cb) {
                             return ca < cb;
                         }
                         return a < b;
                     });

    Node node;
    node.point = order_[static_cast<std::size_t>(mid)];
    node.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(begin, mid);
    const int right = build(mid + 1, end);
    nodes_[static_cast<std::size_t>(self)].left = left;
    nodes_[static_cast<std::size_t>(self)].right = right;
    return self;
}

void SpatialIndex::search(int node, const Point3& p, double radius, bool any_hit,
                          Neighbor& best, bool& found) const {
    if (node < 0 || (any_hit && found)) {
        return;
    }
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    const Point3& q = points_[static_cast<std::size_t>(n.point)];
    const double d2 = (p - q).squared_norm();
    const double limit = found && !any_hit ? std::min(radius, best.distance) : radius;
    if (d2 <= limit * limit) {
        const double d = std::sqrt(d2);
        if (!found || d < best.distance ||
            (d == best.distance && n.point < best.index)) {
            best.index = n.point;
            best.distance = d;
        }
        found = true;
        if (any_hit) {
            return;
        }
    }

    const double diff = coord(p, n.axis) - coord(q, n.axis);
    const int near = diff <= 0.0 ? n.left : n.right;
    const int far = diff <= 0.0 ? n.right : n.left;
    search(near, p, radius, any_hit, best, found);
    const double bound = found && !any_hit ? std::min(radius, best.distance) : radius;
    if (std::fabs(diff) <= bound) {
        search(far, p, radius, any_hit, best, found);
    }
}

bool SpatialIndex::has_neighbor_within(const Point3& p, double radius) const {
    if (root_ < 0 || radius < 0.0) {
        return false;
    }
    Neighbor best;
    bool found = false;
    search(root_, p, radius, true, best, found);
    return found;
}

SpatialIndex::Neighbor SpatialIndex::nearest_within(const Point3& p, double radius) const {
    Neighbor best;
    if (root_ < 0 || radius < 0.0) {
        return best;
    }
    bool found = false;
    search(root_, p, radius, false, best, found);
    if (!found) {
        best.index = -1;
    }
    return best;
}

bool nearest_within(const SpatialIndex& index, const Point3& p, double delta) {
    return index.has_neighbor_within(p, delta);
}

}  // namespace scenesearch
