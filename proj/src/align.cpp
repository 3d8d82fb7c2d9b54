#include "scenesearch/align.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace scenesearch {

namespace {

struct Increment {
    double c = 1.0;  // cos yaw
    double s = 0.0;  // sin yaw
    double tx = 0.0;
    double ty = 0.0;

    Point3 apply(const Point3& p) const {
        return {c * p.x - s * p.y + tx, s * p.x + c * p.y + ty, p.z};
    }
};

double rms(const std::vector<Point3>& moved, const std::vector<Point3>& matched) {
    double sum = 0.0;
    for (std::size_t i = 0; i < moved.size(); ++i) {
        sum += (moved[i] - matched[i]).squared_norm();
    }
    return std::sqrt(sum / static_cast<double>(moved.size()));
}

}  // namespace

IcpResult icp_refine(const PointCloud& source, const SpatialIndex& target_index,
                     const RigidPose2D& initial, const IcpConfig& cfg) {
    if (!(cfg.max_correspondence > 0.0)) {
        throw std::invalid_argument("icp: max_correspondence must be positive");
    }
    if (cfg.max_iterations < 1) {
        throw std::invalid_argument("icp: max_iterations must be at least 1");
    }

    IcpResult result;
    result.refined_pose = initial;

    std::vector<Point3> current(source.points);
    // Accumulated correction in the source's frame (applied on top of initial).
    double acc_theta = 0.0;
    Increment acc;

    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        result.iterations = iter;

        std::vector<Point3> moved;
        std::vector<Point3> matched;
        moved.reserve(current.size());
        matched.reserve(current.size());
        for (const Point3& p : current) {
            const auto hit = target_index.nearest_within(p, cfg.max_correspondence);
            if (hit.index >= 0) {
                moved.push_back(p);
                matched.push_back(target_index.point(hit.index));
            }
        }
        if (moved.empty()) {
            result.refined_pose = initial;
            result.fitness = 0.0;
            result.converged = false;
            return result;
        }

        // Residual of the fresh matching at the current pose. It can exceed
        // the previous iteration's fitness when the improving pose recruits
        // new, farther correspondences — that is progress, not divergence, so
        // only the per-iteration improvement below decides termination.
        const double fitness_now = rms(moved, matched);

        // Closed-form planar least squares over the matched pairs.
        double ax = 0.0, ay = 0.0, bx = 0.0, by = 0.0;
        const double n = static_cast<double>(moved.size());
        for (std::size_t i = 0; i < moved.size(); ++i) {
            ax += moved[i].x;
            ay += moved[i].y;
            bx += matched[i].x;
            by += matched[i].y;
        }
        ax /= n;
        ay /= n;
        bx /= n;
        by /= n;
        double sin_sum = 0.0, cos_sum = 0.0;
        for (std::size_t i = 0; i < moved.size(); ++i) {
            const double sx = moved[i].x - ax;
            const double sy = moved[i].y - ay;
            const double tx = matched[i].x - bx;
            const double ty = matched[i].y - by;
            sin_sum += sx * ty - sy * tx;
            cos_sum += sx * tx + sy * ty;
        }
        Increment step;
        if (sin_sum != 0.0 || cos_sum != 0.0) {
            const double theta = std::atan2(sin_sum, cos_sum);
            step.c = std::cos(theta);
            step.s = std::sin(theta);
            acc_theta += theta;
        }
        step.tx = bx - (step.c * ax - step.s * ay);
        step.ty = by - (step.s * ax + step.c * ay);

        for (Point3& p : current) {
            p = step.apply(p);
        }
        acc = {std::cos(acc_theta), std::sin(acc_theta),
               step.c * acc.tx - step.s * acc.ty + step.tx,
               step.s * acc.tx + step.c * acc.ty + step.ty};
        result.refined_pose =
            RigidPose2D(acc.c * initial.x - acc.s * initial.y + acc.tx,
                        acc.s * initial.x + acc.c * initial.y + acc.ty,
                        initial.theta + acc_theta);

        double after = 0.0;
        for (std::size_t i = 0; i < moved.size(); ++i) {
            after += (step.apply(moved[i]) - matched[i]).squared_norm();
        }
        const double fitness_after = std::sqrt(after / n);
        result.fitness = fitness_after;

        if (fitness_now - fitness_after < cfg.convergence_eps) {
            result.converged = true;
            return result;
        }
    }
    result.converged = false;  // ran out of iterations
    return result;
}

}  // namespace scenesearch
