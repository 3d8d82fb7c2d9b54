#include "scenesearch/msgt.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <stdexcept>
#include <thread>

namespace scenesearch {

void SceneTask::prepare() {
    if (observed.frame != Frame::world) {
        throw std::invalid_argument("task: observed cloud must be in the world frame");
    }
    camera.validate();
    if (required_objects.empty()) {
        throw std::invalid_argument("task: at least one required object");
    }
    if (!(grid.step_xy > 0.0) || !(grid.step_yaw > 0.0)) {
        throw std::invalid_argument("task: grid steps must be positive");
    }
    if (!(delta >= 0.0)) {
        throw std::invalid_argument("task: delta must be non-negative");
    }
    std::unordered_set<std::string> ids;
    for (const ObjectModel& m : models) {
        if (!ids.insert(m.id).second) {
            throw std::invalid_argument("task: duplicate model id " + m.id);
        }
        m.mesh.validate();
        if (!(m.volume.radius > 0.0) || !(m.volume.z_max > m.volume.z_min)) {
            throw std::invalid_argument("task: degenerate volume for model " + m.id);
        }
    }
    for (const std::string& id : required_objects) {
        model(id);  // throws if missing
    }

    const bool auto_bounds = std::isnan(grid.min_x) || std::isnan(grid.max_x) ||
                             std::isnan(grid.min_y) || std::isnan(grid.max_y);
    if (auto_bounds) {
        if (observed.empty()) {
            throw std::invalid_argument("task: cannot derive grid bounds from an empty cloud");
        }
        double min_x = observed.points[0].x, max_x = min_x;
        double min_y = observed.points[0].y, max_y = min_y;
        for (const Point3& p : observed.points) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
        grid.min_x = min_x - grid.step_xy;
        grid.max_x = max_x + grid.step_xy;
        grid.min_y = min_y - grid.step_xy;
        grid.max_y = max_y + grid.step_xy;
    }
    if (!(grid.min_x <= grid.max_x) || !(grid.min_y <= grid.max_y)) {
        throw std::invalid_argument("task: empty grid bounds");
    }
    if (icp.max_correspondence <= 0.0) {
        icp.max_correspondence = grid.step_xy / 2.0;
    }
    observed_index = SpatialIndex(observed);
}

const ObjectModel& SceneTask::model(const std::string& id) const {
    for (const ObjectModel& m : models) {
        if (m.id == id) {
            return m;
        }
    }
    throw std::invalid_argument("task: unknown model id " + id);
}

std::string canonical_key(const std::vector<ObjectPoseHypothesis>& assignments) {
    std::vector<std::string> entries;
    entries.reserve(assignments.size());
    for (const ObjectPoseHypothesis& a : assignments) {
        const long long ix = std::llround(a.pose.x * 1e4);
        const long long iy = std::llround(a.pose.y * 1e4);
        long long it = std::llround(normalize_angle(a.pose.theta) * 1e4);
        if (it >= 62832) {  // 2*pi rounds here; identify it with zero
            it = 0;
        }
        entries.push_back(a.model_id + "@" + std::to_string(ix) + "," + std::to_string(iy) +
                          "," + std::to_string(it));
    }
    std::sort(entries.begin(), entries.end());
    std::string key;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) {
            key += ";";
        }
        key += entries[i];
    }
    return key;
}

SceneState make_root(const SceneTask&) {
    SceneState root;
    root.canonical_key = canonical_key(root.assignments);
    return root;
}

bool is_goal(const SceneState& s, const SceneTask& task) {
    return s.assignments.size() == task.object_count();
}

Count path_cost(const SceneState& goal, const SceneTask& task) {
    if (!is_goal(goal, task)) {
        throw std::invalid_argument("path_cost: state is not a complete assignment");
    }
    return goal.g;
}

DepthImage state_depth(const SceneState& s, const CameraModel& camera) {
    DepthImage img(camera);
    for (const PixelReturn& r : s.returns) {
        img.depth[static_cast<std::size_t>(r.pixel)] = r.depth;
    }
    return img;
}

std::vector<double> grid_axis_values(double lo, double hi, double step) {
    std::vector<double> v;
    for (int i = 0;; ++i) {
        const double x = lo + i * step;
        if (x > hi + 1e-9) {
            break;
        }
        v.push_back(x);
    }
    return v;
}

std::vector<double> grid_yaw_values(double step) {
    std::vector<double> v;
    for (int i = 0;; ++i) {
        const double t = i * step;
        if (t >= kTwoPi - 1e-9) {
            break;
        }
        v.push_back(t);
    }
    return v;
}

namespace {

Point3 backproject(const CameraModel& camera, const Transform3& cam_to_world,
                   std::int32_t pixel, float depth) {
    const int x = static_cast<int>(pixel % camera.width);
    const int y = static_cast<int>(pixel / camera.width);
    const double z = depth;
    const Point3 cam_point{(x + 0.5 - camera.cx) / camera.fx * z,
                           (y + 0.5 - camera.cy) / camera.fy * z, z};
    return cam_to_world.apply(cam_point);
}

PointCloud pixels_to_cloud(const std::vector<PixelReturn>& returns,
                           const CameraModel& camera) {
    PointCloud cloud;
    cloud.frame = Frame::world;
    cloud.points.reserve(returns.size());
    const Transform3 cam_to_world = camera.camera_to_world();
    for (const PixelReturn& r : returns) {
        cloud.points.push_back(backproject(camera, cam_to_world, r.pixel, r.depth));
    }
    return cloud;
}

struct Candidate {
    const ObjectModel* model;
    RigidPose2D pose;
};

struct Evaluation {
    bool valid = false;
    SceneState state;
    CostBreakdown cost;
};

// Single-candidate pipeline: render, occlusion gate, ICP, re-check, price.
Evaluation evaluate_candidate(const SceneState& parent, const std::vector<float>& parent_dense,
                              const SceneTask& task, const Candidate& cand, bool final_level) {
    Evaluation out;
    const CameraModel& camera = task.camera;
    const double eps = task.eps_render;

    DepthImage img(camera);
    render_into(img, cand.model->mesh, cand.pose);

    // One fused pass: bail on occlusion, collect the newly visible pixels.
    auto scan = [&](const DepthImage& candidate, std::vector<PixelReturn>& fresh) {
        fresh.clear();
        for (std::size_t i = 0; i < candidate.depth.size(); ++i) {
            const float c = candidate.depth[i];
            const float p = parent_dense[i];
            if (std::isfinite(p)) {
                if (static_cast<double>(c) < static_cast<double>(p) - eps) {
                    return false;  // candidate steals an existing return
                }
            } else if (std::isfinite(c)) {
                fresh.push_back({static_cast<std::int32_t>(i), c});
            }
        }
        return true;
    };

    std::vector<PixelReturn> fresh;
    if (!scan(img, fresh)) {
        return out;
    }

    RigidPose2D pose = cand.pose;
    if (task.icp_enabled && !fresh.empty()) {
        const PointCloud source = pixels_to_cloud(fresh, camera);
        const IcpResult icp = icp_refine(source, task.observed_index, cand.pose, task.icp);
        RigidPose2D refined = icp.refined_pose;
        if (cand.model->rotationally_symmetric) {
            refined.theta = cand.pose.theta;  // yaw is meaningless for these
        }
        const bool local =
            std::fabs(refined.x - cand.pose.x) <= task.grid.step_xy / 2.0 + 1e-12 &&
            std::fabs(refined.y - cand.pose.y) <= task.grid.step_xy / 2.0 + 1e-12 &&
            shortest_angular_difference(refined.theta, cand.pose.theta) <=
                task.grid.step_yaw / 2.0 + 1e-12;
        const bool moved = refined.x != cand.pose.x || refined.y != cand.pose.y ||
                           refined.theta != cand.pose.theta;
        if (local && moved) {
            DepthImage refined_img(camera);
            render_into(refined_img, cand.model->mesh, refined);
            std::vector<PixelReturn> refined_fresh;
            if (scan(refined_img, refined_fresh)) {
                pose = refined;
                fresh = std::move(refined_fresh);
            }
            // Otherwise the refinement occludes the scene; keep the grid pose.
        }
    }

    const PointCloud fresh_cloud = pixels_to_cloud(fresh, camera);
    const Count dr = count_unexplained(fresh_cloud, task.observed_index, task.delta);
    const SpatialIndex fresh_index(fresh_cloud);
    const Count dobs = delta_observed_cost(task.observed, cand.model->volume, pose, fresh_index,
                                           task.delta);

    SceneState child;
    child.assignments = parent.assignments;
    child.assignments.push_back({cand.model->id, pose});
    child.returns.reserve(parent.returns.size() + fresh.size());
    std::merge(parent.returns.begin(), parent.returns.end(), fresh.begin(), fresh.end(),
               std::back_inserter(child.returns),
               [](const PixelReturn& a, const PixelReturn& b) { return a.pixel < b.pixel; });
    child.cloud_size = static_cast<Count>(child.returns.size());

    Count residual = 0;
    if (final_level) {
        std::vector<PosedVolume> volumes;
        volumes.reserve(child.assignments.size());
        for (const ObjectPoseHypothesis& a : child.assignments) {
            volumes.push_back({task.model(a.model_id).volume, a.pose});
        }
        const SpatialIndex full_index(pixels_to_cloud(child.returns, camera));
        residual = residual_cost(task.observed, volumes, full_index, task.delta);
    }

    out.cost = CostBreakdown(dr, dobs, residual);
    child.g = parent.g + out.cost.total;
    child.canonical_key = canonical_key(child.assignments);
    out.state = std::move(child);
    out.valid = true;
    return out;
}

}  // namespace

PointCloud state_cloud(const SceneState& s, const CameraModel& camera) {
    return pixels_to_cloud(s.returns, camera);
}

bool returns_preserved(const SceneState& parent, const SceneState& child) {
    std::size_t j = 0;
    for (const PixelReturn& p : parent.returns) {
        while (j < child.returns.size() && child.returns[j].pixel < p.pixel) {
            ++j;
        }
        if (j >= child.returns.size() || child.returns[j].pixel != p.pixel ||
            child.returns[j].depth != p.depth) {
            return false;
        }
        ++j;
    }
    return true;
}

std::vector<SuccessorOutput> successors(const SceneState& s, const SceneTask& task,
                                        std::unordered_set<std::string>* seen, int workers) {
    const std::size_t K = task.object_count();
    if (s.assignments.size() >= K) {
        return {};
    }
    const bool final_level = s.assignments.size() + 1 == K;

    // Remaining required ids (multiset difference), one candidate set per
    // distinct id, in sorted order.
    std::map<std::string, int> remaining;
    for (const std::string& id : task.required_objects) {
        ++remaining[id];
    }
    for (const ObjectPoseHypothesis& a : s.assignments) {
        auto it = remaining.find(a.model_id);
        if (it != remaining.end() && --it->second == 0) {
            remaining.erase(it);
        }
    }

    const std::vector<double> xs =
        grid_axis_values(task.grid.min_x, task.grid.max_x, task.grid.step_xy);
    const std::vector<double> ys =
        grid_axis_values(task.grid.min_y, task.grid.max_y, task.grid.step_xy);
    const std::vector<double> yaws = grid_yaw_values(task.grid.step_yaw);

    std::vector<Candidate> candidates;
    for (const auto& [id, count] : remaining) {
        (void)count;
        const ObjectModel& model = task.model(id);
        for (double x : xs) {
            for (double y : ys) {
                if (model.rotationally_symmetric) {
                    candidates.push_back({&model, RigidPose2D(x, y, 0.0)});
                } else {
                    for (double yaw : yaws) {
                        candidates.push_back({&model, RigidPose2D(x, y, yaw)});
                    }
                }
            }
        }
    }

    // Dense lookup for the parent's returns, shared read-only by all workers.
    std::vector<float> parent_dense(
        static_cast<std::size_t>(task.camera.width) * static_cast<std::size_t>(task.camera.height),
        DepthImage::kNoReturn);
    for (const PixelReturn& r : s.returns) {
        parent_dense[static_cast<std::size_t>(r.pixel)] = r.depth;
    }

    std::vector<Evaluation> evals(candidates.size());
    const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(candidates.size())));
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            evals[i] = evaluate_candidate(s, parent_dense, task, candidates[i], final_level);
        }
    } else {
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_workers));
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) {
            pool.emplace_back([&, w]() {
                try {
                    for (std::size_t i = static_cast<std::size_t>(w); i < candidates.size();
                         i += static_cast<std::size_t>(n_workers)) {
                        evals[i] =
                            evaluate_candidate(s, parent_dense, task, candidates[i], final_level);
                    }
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        for (std::thread& t : pool) {
            t.join();
        }
        for (const std::exception_ptr& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }

    // Merge in enumeration order; only now touch the shared seen set.
    std::vector<SuccessorOutput> out;
    std::unordered_set<std::string> local_seen;
    for (Evaluation& e : evals) {
        if (!e.valid) {
            continue;
        }
        const std::string& key = e.state.canonical_key;
        if (!local_seen.insert(key).second) {
            continue;
        }
        if (seen && !seen->insert(key).second) {
            continue;
        }
        out.push_back({std::move(e.state), e.cost});
    }
    return out;
}

}  // namespace scenesearch
