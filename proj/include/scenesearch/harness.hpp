#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "scenesearch/geometry.hpp"
#include "scenesearch/msgt.hpp"
#include "scenesearch/search.hpp"

namespace scenesearch {

// A synthetic observation paired with the placement that produced it.
struct GroundTruthScene {
    PointCloud observed;  // world frame
    CameraModel camera;
    std::vector<ObjectPoseHypothesis> truth;
    double noise_sigma = 0.0;  // meters, per axis
    unsigned seed = 0;
};

// Renders the truth placement, back-projects every pixel return, and adds
// seeded per-axis Gaussian jitter. Each object must land at least partly in
// the camera frustum (it must contribute a pixel when rendered alone).
GroundTruthScene synthesize_scene(const std::vector<ObjectModel>& models,
                                  const std::vector<ObjectPoseHypothesis>& truth,
                                  const CameraModel& camera, double noise_sigma,
                                  unsigned seed);

struct PlaneRemoval {
    PointCloud filtered;
    // ax + by + cz + d = 0 with a unit normal oriented against gravity
    // (c >= 0), so a tabletop reads directly as height -d.
    std::array<double, 4> plane{0.0, 0.0, 0.0, 0.0};
    bool plane_found = false;
};

// Deterministic sampled-consensus plane fit. When some plane explains at
// least 30% of the cloud, its inliers (within inlier_eps) are removed;
// otherwise the cloud comes back unchanged with plane_found=false. The
// cloud must hold at least 3 points.
PlaneRemoval remove_plane(const PointCloud& cloud, int iterations, double inlier_eps);

struct ThresholdGrid {
    std::vector<double> translation{0.01, 0.05, 0.10};          // meters
    std::vector<double> yaw{0.0872664625997164788, 0.1745329251994329577,
                            0.3490658503988659154, 3.1415926535897932385};  // radians
};

struct ObjectError {
    std::string model_id;
    double translation_error = 0.0;  // meters
    double yaw_error = 0.0;          // radians, shortest difference
    bool yaw_ignored = false;        // rotationally symmetric model
};

struct EvalReport {
    std::vector<ObjectError> errors;  // one per truth object, truth order
    ThresholdGrid thresholds;
    // correct[i][j] = objects with translation error < translation[i] and
    // (yaw ignored or yaw error < yaw[j]).
    std::vector<std::vector<Count>> correct;
    // Filled by run_experiment; evaluate() leaves them zero.
    double wall_time = 0.0;
    Count expansions = 0;
    Count generated = 0;
};

// Pairs predictions with truth per model id (duplicates matched to minimize
// total translation error), then scores each pair against every threshold
// combination. Predicted and truth must carry the same multiset of ids, and
// every id must exist in models (for the symmetry flag).
EvalReport evaluate(const std::vector<ObjectPoseHypothesis>& predicted,
                    const std::vector<ObjectPoseHypothesis>& truth,
                    const std::vector<ObjectModel>& models, const ThresholdGrid& thresholds);

struct ExperimentConfig {
    GridSpec grid;
    double delta = 0.003;
    SearchConfig search;
    IcpConfig icp;
    bool icp_enabled = true;
    ThresholdGrid thresholds;
    // Strip the dominant plane from the observation before solving.
    bool strip_plane = false;
    int plane_iterations = 200;
    double plane_eps = 0.005;
    // When non-empty, result.json and histogram.csv are written here.
    std::string out_dir;
};

struct ExperimentResult {
    std::vector<ObjectPoseHypothesis> predicted;
    SearchResult search;
    EvalReport report;
};

// Preprocess -> solve -> evaluate. The objects to place are the scene's
// truth ids that exist in `models`; truth entries without a model (scene
// furniture such as a tabletop) are excluded from solving and scoring.
// Failures carry a "stage: " prefix naming the step that raised them.
ExperimentResult run_experiment(const GroundTruthScene& scene,
                                const std::vector<ObjectModel>& models,
                                const ExperimentConfig& cfg);

// ---- File formats ----------------------------------------------------------
// Poses JSON: {"objects": [{"id","x","y","theta"}...]} plus, for ground
// truth, "noise_sigma" and "seed". Result JSON: {"cost","bound_certificate",
// "expansions","generated","wall_time","timed_out","poses":[...]}.
// Histogram CSV: header dt,dtheta,correct,total; one row per threshold pair.

void save_truth_json(const std::string& path, const GroundTruthScene& scene);
// Reads the pose list from either a truth file ("objects") or a result file
// ("poses").
std::vector<ObjectPoseHypothesis> load_poses_json(const std::string& path);
// Truth metadata (noise_sigma, seed); poses load via load_poses_json.
std::pair<double, unsigned> load_truth_meta_json(const std::string& path);

void save_result_json(const std::string& path, const ExperimentResult& result);
void save_histogram_csv(const std::string& path, const EvalReport& report);

// Loads every .obj in the directory as a model (id = file stem, volume =
// the mesh's inscribed cylinder). An optional models.json beside them may
// set {"models":[{"id":...,"symmetric":true}]} flags.
std::vector<ObjectModel> load_models_dir(const std::string& dir);

}  // namespace scenesearch
