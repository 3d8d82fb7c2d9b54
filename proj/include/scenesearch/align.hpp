#pragma once

#include "scenesearch/geometry.hpp"

namespace scenesearch {

struct IcpConfig {
    double max_correspondence = 0.02;  // meters; pairs beyond this are dropped
    int max_iterations = 30;
    double convergence_eps = 1e-6;  // meters of RMS change
};

struct IcpResult {
    RigidPose2D refined_pose;
    double fitness = 0.0;  // RMS residual over the final matched pairs
    int iterations = 0;
    bool converged = false;
};

// Planar ICP: iteratively matches each source point to its nearest target
// within max_correspondence and solves the closed-form least-squares (x, y,
// yaw) alignment — roll, pitch, and z are never introduced. `source` holds the
// object's visible points already placed at `initial`; the result composes the
// accumulated correction onto `initial`.
//
// Each step is optimal for its own matched pairs and never raises their
// residual; as the pose improves, farther points can join the matched set, so
// the reported fitness (RMS over the final pairs) may grow between iterations
// while the alignment is still pulling in. Iteration stops once a step
// improves its own matched residual by less than convergence_eps (converged)
// or at max_iterations (not converged). One iteration moves the matched
// centroid by at most max_correspondence. Zero correspondences abort the
// refinement and return `initial` with converged=false.
IcpResult icp_refine(const PointCloud& source, const SpatialIndex& target_index,
                     const RigidPose2D& initial, const IcpConfig& cfg);

}  // namespace scenesearch
