#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "scenesearch/geometry.hpp"

namespace scenesearch {

using Count = std::int64_t;

// Edge-cost pieces for adding one object to a partial scene. `residual` is
// zero except on edges completing the final assignment.
struct CostBreakdown {
    Count delta_rendered = 0;
    Count delta_observed = 0;
    Count residual = 0;
    Count total = 0;

    CostBreakdown() = default;
    CostBreakdown(Count dr, Count dobs, Count res)
        : delta_rendered(dr), delta_observed(dobs), residual(res),
          total(dr + dobs + res) {}
};

// Number of target points with no indexed point within delta (distance
// exactly delta counts as explained). Empty index leaves every target
// unexplained.
Count count_unexplained(const PointCloud& targets, const SpatialIndex& by, double delta);

// Two-sided scene cost: observed points unexplained by the render plus
// rendered points unexplained by the observation. Symmetric in its arguments;
// both clouds must share a frame.
Count explanation_cost(const PointCloud& observed, const PointCloud& rendered, double delta);

// Cost over only the newly visible points of the added object.
Count delta_rendered_cost(const PointCloud& new_points, const SpatialIndex& observed_index,
                          double delta);

// Among observed points inside the posed volume, how many the new object's
// visible points fail to explain.
Count delta_observed_cost(const PointCloud& observed, const VolumeApprox& vol,
                          const RigidPose2D& pose, const SpatialIndex& new_points_index,
                          double delta);

using PosedVolume = std::pair<VolumeApprox, RigidPose2D>;

// Among observed points outside every assigned volume, how many the complete
// render fails to explain. Charged only on edges reaching a full assignment.
Count residual_cost(const PointCloud& observed, const std::vector<PosedVolume>& volumes,
                    const SpatialIndex& full_rendered_index, double delta);

}  // namespace scenesearch
