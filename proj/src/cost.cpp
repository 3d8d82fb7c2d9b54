#include "scenesearch/cost.hpp"

#include <stdexcept>

namespace scenesearch {

namespace {

void check_delta(double delta) {
    if (!(delta >= 0.0)) {
        throw std::invalid_argument("cost: delta must be non-negative");
    }
}

}  // namespace

Count count_unexplained(const PointCloud& targets, const SpatialIndex& by, double delta) {
    check_delta(delta);
    Count n = 0;
    for (const Point3& p : targets.points) {
        if (!by.has_neighbor_within(p, delta)) {
            ++n;
        }
    }
    return n;
}

Count explanation_cost(const PointCloud& observed, const PointCloud& rendered, double delta) {
    check_delta(delta);
    if (observed.frame != rendered.frame) {
        throw std::invalid_argument("explanation_cost: clouds are in different frames");
    }
    const SpatialIndex rendered_index(rendered);
    const SpatialIndex observed_index(observed);
    return count_unexplained(observed, rendered_index, delta) +
           count_unexplained(rendered, observed_index, delta);
}

Count delta_rendered_cost(const PointCloud& new_points, const SpatialIndex& observed_index,
                          double delta) {
    return count_unexplained(new_points, observed_index, delta);
}

Count delta_observed_cost(const PointCloud& observed, const VolumeApprox& vol,
                          const RigidPose2D& pose, const SpatialIndex& new_points_index,
                          double delta) {
    check_delta(delta);
    Count n = 0;
    for (const Point3& p : observed.points) {
        if (point_in_volume(p, vol, pose) && !new_points_index.has_neighbor_within(p, delta)) {
            ++n;
        }
    }
    return n;
}

Count residual_cost(const PointCloud& observed, const std::vector<PosedVolume>& volumes,
                    const SpatialIndex& full_rendered_index, double delta) {
    check_delta(delta);
    Count n = 0;
    for (const Point3& p : observed.points) {
        bool inside = false;
        for (const auto& [vol, pose] : volumes) {
            if (point_in_volume(p, vol, pose)) {
                inside = true;
                break;
            }
        }
        if (!inside && !full_rendered_index.has_neighbor_within(p, delta)) {
            ++n;
        }
    }
    return n;
}

}  // namespace scenesearch
