#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <unordered_set>
#include <vector>

#include "scenesearch/align.hpp"
#include "scenesearch/cost.hpp"
#include "scenesearch/geometry.hpp"
#include "scenesearch/render.hpp"

namespace scenesearch {

struct ObjectModel {
    std::string id;
    TriMesh mesh;
    VolumeApprox volume;
    bool rotationally_symmetric = false;
};

// Discretization of the pose space. Bounds left as NaN resolve to the
// observed cloud's bounding box inflated by one step.
struct GridSpec {
    double step_xy = 0.04;
    double step_yaw = kTwoPi / 16.0;
    double min_x = std::numeric_limits<double>::quiet_NaN();
    double max_x = std::numeric_limits<double>::quiet_NaN();
    double min_y = std::numeric_limits<double>::quiet_NaN();
    double max_y = std::numeric_limits<double>::quiet_NaN();
};

struct ObjectPoseHypothesis {
    std::string model_id;
    RigidPose2D pose;
};

// Everything fixed for one solving run: the preprocessed observation, the
// model library, which objects are present, and the knobs.
struct SceneTask {
    PointCloud observed;  // world frame
    SpatialIndex observed_index;
    CameraModel camera;
    std::vector<ObjectModel> models;
    std::vector<std::string> required_objects;  // multiset of model ids
    GridSpec grid;
    double delta = 0.003;
    IcpConfig icp;
    bool icp_enabled = true;
    double eps_render = kEpsRenderDefault;

    // Builds the observed index, resolves auto grid bounds and the ICP cap
    // (half the xy step when unset), and validates the whole task. Must be
    // called once before the task is used.
    void prepare();

    const ObjectModel& model(const std::string& id) const;
    std::size_t object_count() const { return required_objects.size(); }
};

struct PixelReturn {
    std::int32_t pixel = 0;  // row-major index
    float depth = 0.0f;
};

// One node of the scene generation tree: a partial assignment with its render
// stored as the sorted list of pixel returns.
struct SceneState {
    std::vector<ObjectPoseHypothesis> assignments;
    std::vector<PixelReturn> returns;
    Count cloud_size = 0;  // == returns.size()
    Count g = 0;           // accumulated edge cost from the root
    std::string canonical_key;
};

// Order-independent identity of an assignment set; poses rounded to 1e-4 m
// and 1e-4 rad so float jitter cannot split identical configurations.
std::string canonical_key(const std::vector<ObjectPoseHypothesis>& assignments);

// The discrete sweeps used everywhere a grid is walked: [lo, hi] inclusive
// (with a nanometer of slack for accumulated rounding), and yaw over
// [0, 2*pi). Exhaustive baselines must use these to visit the exact same
// poses as successor expansion.
std::vector<double> grid_axis_values(double lo, double hi, double step);
std::vector<double> grid_yaw_values(double step);

SceneState make_root(const SceneTask& task);

bool is_goal(const SceneState& s, const SceneTask& task);

// The accumulated cost of a complete assignment; throws on non-goal input.
Count path_cost(const SceneState& goal, const SceneTask& task);

// Dense depth image / world cloud materialized from a state's returns.
DepthImage state_depth(const SceneState& s, const CameraModel& camera);
PointCloud state_cloud(const SceneState& s, const CameraModel& camera);

// Audit: every parent pixel return present in the child at exactly the same
// depth. Holds by construction for every generated edge.
bool returns_preserved(const SceneState& parent, const SceneState& child);

struct SuccessorOutput {
    SceneState state;
    CostBreakdown cost;
};

// Expands one tree node: for every unassigned model id and every on-grid pose
// (yaw fixed to 0 for rotationally symmetric models), renders the candidate,
// drops it if it would occlude the existing scene, optionally refines the
// pose against the observation with ICP (reverting refinements that leave the
// half-cell neighborhood or break the occlusion rule), prices the edge, and
// emits the grown state. Output is sorted by (model_id, x, y, yaw); states
// whose canonical key is already in `seen` are dropped and new keys are
// inserted. Candidate evaluation fans out over `workers` threads with results
// identical to the serial order.
std::vector<SuccessorOutput> successors(const SceneState& s, const SceneTask& task,
                                        std::unordered_set<std::string>* seen = nullptr,
                                        int workers = 1);

}  // namespace scenesearch
