#include "scenesearch/capi.h"

#include <cmath>
#include <exception>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scenesearch/geometry.hpp"
#include "scenesearch/harness.hpp"
#include "scenesearch/io.hpp"
#include "scenesearch/msgt.hpp"
#include "scenesearch/search.hpp"

using namespace scenesearch;

extern "C" {
struct ss_model_set {
    std::vector<ObjectModel> models;
};
struct ss_scene {
    GroundTruthScene scene;
};
struct ss_poses {
    std::vector<ObjectPoseHypothesis> poses;
};
struct ss_result {
    std::vector<ObjectPoseHypothesis> predicted;
    SearchResult search;
};
struct ss_report {
    EvalReport report;
};
}

namespace {

thread_local std::string g_error;

void require(bool ok, const char* what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

// Runs the body, translating exceptions to statuses: invalid_argument maps
// to SS_ERR_INVALID_ARGUMENT, anything else to `fallback`.
template <typename F>
ss_status guarded_as(ss_status fallback, F&& body) noexcept {
    try {
        return body();
    } catch (const std::invalid_argument& e) {
        g_error = e.what();
        return SS_ERR_INVALID_ARGUMENT;
    } catch (const std::bad_alloc&) {
        g_error = "out of memory";
        return SS_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_error = e.what();
        return fallback;
    } catch (...) {
        g_error = "unknown error";
        return SS_ERR_INTERNAL;
    }
}

template <typename F>
ss_status guarded(F&& body) noexcept {
    return guarded_as(SS_ERR_INTERNAL, std::forward<F>(body));
}

std::vector<ObjectPoseHypothesis> to_hypotheses(const char* const* ids,
                                                const ss_pose* poses, size_t count) {
    require(count == 0 || (ids != nullptr && poses != nullptr),
            "ids and poses must be provided");
    std::vector<ObjectPoseHypothesis> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        require(ids[i] != nullptr, "null model id");
        out.push_back({ids[i], RigidPose2D(poses[i].x, poses[i].y, poses[i].theta)});
    }
    return out;
}

ss_pose to_c_pose(const RigidPose2D& p) { return {p.x, p.y, p.theta}; }

}  // namespace

const char* ss_version(void) { return "1.0.0"; }

const char* ss_last_error(void) { return g_error.c_str(); }

void ss_config_init(ss_config* cfg) {
    if (cfg == nullptr) {
        return;
    }
    const GridSpec grid;
    const SearchConfig search;
    const SceneTask task;
    cfg->delta = task.delta;
    cfg->w = search.w;
    cfg->grid_step_xy = grid.step_xy;
    cfg->grid_step_yaw = grid.step_yaw;
    cfg->grid_min_x = grid.min_x;
    cfg->grid_max_x = grid.max_x;
    cfg->grid_min_y = grid.min_y;
    cfg->grid_max_y = grid.max_y;
    cfg->time_limit = search.time_limit;
    cfg->workers = search.workers;
    cfg->icp_enabled = 1;
    cfg->icp_cap = 0.0;  // resolved to half the xy step
    cfg->use_depth_heuristic = 1;
    cfg->use_overlap_heuristic = 1;
}

/* ---- Model libraries ---------------------------------------------------- */

ss_status ss_models_load(const char* dir, ss_model_set** out) {
    return guarded_as(SS_ERR_IO, [&]() {
        require(dir != nullptr && out != nullptr, "null argument");
        auto ms = std::make_unique<ss_model_set>();
        ms->models = load_models_dir(dir);
        *out = ms.release();
        return SS_OK;
    });
}

size_t ss_models_count(const ss_model_set* ms) { return ms ? ms->models.size() : 0; }

const char* ss_models_id(const ss_model_set* ms, size_t index) {
    if (ms == nullptr || index >= ms->models.size()) {
        return nullptr;
    }
    return ms->models[index].id.c_str();
}

void ss_models_free(ss_model_set* ms) { delete ms; }

/* ---- Pose lists --------------------------------------------------------- */

ss_status ss_poses_create(const char* const* ids, const ss_pose* poses, size_t count,
                          ss_poses** out) {
    return guarded([&]() {
        require(out != nullptr, "null output");
        auto ps = std::make_unique<ss_poses>();
        ps->poses = to_hypotheses(ids, poses, count);
        *out = ps.release();
        return SS_OK;
    });
}

ss_status ss_poses_load_json(const char* path, ss_poses** out) {
    return guarded_as(SS_ERR_IO, [&]() {
        require(path != nullptr && out != nullptr, "null argument");
        auto ps = std::make_unique<ss_poses>();
        ps->poses = load_poses_json(path);
        *out = ps.release();
        return SS_OK;
    });
}

size_t ss_poses_count(const ss_poses* ps) { return ps ? ps->poses.size() : 0; }

const char* ss_poses_id(const ss_poses* ps, size_t index) {
    if (ps == nullptr || index >= ps->poses.size()) {
        return nullptr;
    }
    return ps->poses[index].model_id.c_str();
}

ss_status ss_poses_get(const ss_poses* ps, size_t index, ss_pose* out) {
    return guarded([&]() {
        require(ps != nullptr && out != nullptr, "null argument");
        require(index < ps->poses.size(), "pose index out of range");
        *out = to_c_pose(ps->poses[index].pose);
        return SS_OK;
    });
}

void ss_poses_free(ss_poses* ps) { delete ps; }

/* ---- Scenes ------------------------------------------------------------- */

ss_status ss_scene_load(const char* pcd_path, const char* camera_json_path,
                        ss_scene** out) {
    return guarded_as(SS_ERR_IO, [&]() {
        require(pcd_path != nullptr && camera_json_path != nullptr && out != nullptr,
                "null argument");
        auto sc = std::make_unique<ss_scene>();
        sc->scene.camera = load_camera_json(camera_json_path);
        sc->scene.observed = load_pcd(pcd_path);
        if (sc->scene.observed.frame == Frame::camera) {
            const Transform3 to_world = sc->scene.camera.camera_to_world();
            for (Point3& p : sc->scene.observed.points) {
                p = to_world.apply(p);
            }
            sc->scene.observed.frame = Frame::world;
        }
        *out = sc.release();
        return SS_OK;
    });
}

ss_status ss_scene_synthesize(const ss_model_set* ms, const ss_poses* truth,
                              const char* camera_json_path, double noise_sigma,
                              uint32_t seed, ss_scene** out) {
    return guarded_as(SS_ERR_IO, [&]() {
        require(ms != nullptr && truth != nullptr && camera_json_path != nullptr &&
                    out != nullptr,
                "null argument");
        const CameraModel camera = load_camera_json(camera_json_path);
        auto sc = std::make_unique<ss_scene>();
        sc->scene = synthesize_scene(ms->models, truth->poses, camera, noise_sigma, seed);
        *out = sc.release();
        return SS_OK;
    });
}

ss_status ss_scene_save(const ss_scene* scene, const char* pcd_path,
                        const char* truth_json_path) {
    return guarded_as(SS_ERR_IO, [&]() {
        require(scene != nullptr && pcd_path != nullptr, "null argument");
        save_pcd(pcd_path, scene->scene.observed);
        if (truth_json_path != nullptr) {
            save_truth_json(truth_json_path, scene->scene);
        }
        return SS_OK;
    });
}

ss_status ss_scene_strip_plane(ss_scene* scene, int iterations, double inlier_eps,
                               int* plane_found) {
    return guarded([&]() {
        require(scene != nullptr, "null scene");
        PlaneRemoval removal = remove_plane(scene->scene.observed, iterations, inlier_eps);
        if (plane_found != nullptr) {
            *plane_found = removal.plane_found ? 1 : 0;
        }
        scene->scene.observed = std::move(removal.filtered);
        return SS_OK;
    });
}

size_t ss_scene_point_count(const ss_scene* scene) {
    return scene ? scene->scene.observed.size() : 0;
}

size_t ss_scene_truth_count(const ss_scene* scene) {
    return scene ? scene->scene.truth.size() : 0;
}

const char* ss_scene_truth_id(const ss_scene* scene, size_t index) {
    if (scene == nullptr || index >= scene->scene.truth.size()) {
        return nullptr;
    }
    return scene->scene.truth[index].model_id.c_str();
}

ss_status ss_scene_truth_pose(const ss_scene* scene, size_t index, ss_pose* out) {
    return guarded([&]() {
        require(scene != nullptr && out != nullptr, "null argument");
        require(index < scene->scene.truth.size(), "truth index out of range");
        *out = to_c_pose(scene->scene.truth[index].pose);
        return SS_OK;
    });
}

void ss_scene_free(ss_scene* scene) { delete scene; }

/* ---- Solving ------------------------------------------------------------ */

ss_status ss_solve(const ss_model_set* ms, const ss_scene* scene,
                   const char* const* required_ids, size_t required_count,
                   const ss_config* cfg, ss_progress_fn progress, void* user,
                   uint64_t progress_every, ss_result** out) {
    return guarded([&]() {
        require(ms != nullptr && scene != nullptr && cfg != nullptr && out != nullptr,
                "null argument");
        require(required_count > 0 && required_ids != nullptr,
                "at least one required object id");

        SceneTask task;
        task.observed = scene->scene.observed;
        task.camera = scene->scene.camera;
        task.models = ms->models;
        for (size_t i = 0; i < required_count; ++i) {
            require(required_ids[i] != nullptr, "null model id");
            task.required_objects.emplace_back(required_ids[i]);
        }
        task.grid.step_xy = cfg->grid_step_xy;
        task.grid.step_yaw = cfg->grid_step_yaw;
        task.grid.min_x = cfg->grid_min_x;
        task.grid.max_x = cfg->grid_max_x;
        task.grid.min_y = cfg->grid_min_y;
        task.grid.max_y = cfg->grid_max_y;
        task.delta = cfg->delta;
        task.icp_enabled = cfg->icp_enabled != 0;
        task.icp.max_correspondence = cfg->icp_cap > 0.0 ? cfg->icp_cap : 0.0;
        task.prepare();

        SearchConfig sc;
        sc.w = cfg->w;
        sc.time_limit = cfg->time_limit;
        sc.workers = cfg->workers;
        sc.heuristics.clear();
        if (cfg->use_depth_heuristic) {
            sc.heuristics.push_back(kHeuristicDepth);
        }
        if (cfg->use_overlap_heuristic) {
            sc.heuristics.push_back(kHeuristicOverlap);
        }
        if (progress != nullptr && progress_every > 0) {
            sc.progress_every = static_cast<Count>(progress_every);
            sc.on_progress = [progress, user](const SearchProgress& p) {
                progress(static_cast<uint64_t>(p.expansions),
                         static_cast<uint64_t>(p.generated),
                         static_cast<int64_t>(p.best_cost), p.elapsed, user);
            };
        }

        auto res = std::make_unique<ss_result>();
        res->search = solve(task, sc);
        if (res->search.goal) {
            res->predicted = res->search.goal->assignments;
        }
        const bool found = res->search.goal.has_value();
        const bool timed_out = res->search.timed_out;
        *out = res.release();
        if (found) {
            return SS_OK;
        }
        g_error = timed_out ? "time limit reached before any complete pose set"
                            : "no non-occluding placement of all required objects exists "
                              "on this grid";
        return timed_out ? SS_ERR_TIMEOUT : SS_ERR_INFEASIBLE;
    });
}

int64_t ss_result_cost(const ss_result* res) { return res ? res->search.cost : -1; }

double ss_result_certificate(const ss_result* res) {
    return res ? res->search.bound_certificate : -1.0;
}

uint64_t ss_result_expansions(const ss_result* res) {
    return res ? static_cast<uint64_t>(res->search.expansions) : 0;
}

uint64_t ss_result_generated(const ss_result* res) {
    return res ? static_cast<uint64_t>(res->search.generated) : 0;
}

double ss_result_wall_time(const ss_result* res) {
    return res ? res->search.wall_time : 0.0;
}

int ss_result_timed_out(const ss_result* res) {
    return (res && res->search.timed_out) ? 1 : 0;
}

size_t ss_result_object_count(const ss_result* res) {
    return res ? res->predicted.size() : 0;
}

const char* ss_result_object_id(const ss_result* res, size_t index) {
    if (res == nullptr || index >= res->predicted.size()) {
        return nullptr;
    }
    return res->predicted[index].model_id.c_str();
}

ss_status ss_result_object_pose(const ss_result* res, size_t index, ss_pose* out) {
    return guarded([&]() {
        require(res != nullptr && out != nullptr, "null argument");
        require(index < res->predicted.size(), "object index out of range");
        *out = to_c_pose(res->predicted[index].pose);
        return SS_OK;
    });
}

ss_status ss_result_save_json(const ss_result* res, const char* path) {
    return guarded_as(SS_ERR_IO, [&]() {
        require(res != nullptr && path != nullptr, "null argument");
        ExperimentResult full;
        full.predicted = res->predicted;
        full.search = res->search;
        save_result_json(path, full);
        return SS_OK;
    });
}

void ss_result_free(ss_result* res) { delete res; }

/* ---- Evaluation --------------------------------------------------------- */

ss_status ss_evaluate(const ss_model_set* ms, const ss_poses* truth,
                      const ss_poses* predicted, ss_report** out) {
    return guarded([&]() {
        require(ms != nullptr && truth != nullptr && predicted != nullptr &&
                    out != nullptr,
                "null argument");
        auto rep = std::make_unique<ss_report>();
        rep->report =
            evaluate(predicted->poses, truth->poses, ms->models, ThresholdGrid{});
        *out = rep.release();
        return SS_OK;
    });
}

size_t ss_report_object_count(const ss_report* rep) {
    return rep ? rep->report.errors.size() : 0;
}

ss_status ss_report_error(const ss_report* rep, size_t index, double* translation_error,
                          double* yaw_error, int* yaw_ignored) {
    return guarded([&]() {
        require(rep != nullptr, "null report");
        require(index < rep->report.errors.size(), "object index out of range");
        const ObjectError& e = rep->report.errors[index];
        if (translation_error != nullptr) {
            *translation_error = e.translation_error;
        }
        if (yaw_error != nullptr) {
            *yaw_error = e.yaw_error;
        }
        if (yaw_ignored != nullptr) {
            *yaw_ignored = e.yaw_ignored ? 1 : 0;
        }
        return SS_OK;
    });
}

ss_status ss_report_threshold_counts(const ss_report* rep, size_t* translation_count,
                                     size_t* yaw_count) {
    return guarded([&]() {
        require(rep != nullptr, "null report");
        if (translation_count != nullptr) {
            *translation_count = rep->report.thresholds.translation.size();
        }
        if (yaw_count != nullptr) {
            *yaw_count = rep->report.thresholds.yaw.size();
        }
        return SS_OK;
    });
}

ss_status ss_report_cell(const ss_report* rep, size_t t_index, size_t y_index,
                         double* dt, double* dtheta, int64_t* correct) {
    return guarded([&]() {
        require(rep != nullptr, "null report");
        require(t_index < rep->report.thresholds.translation.size() &&
                    y_index < rep->report.thresholds.yaw.size(),
                "threshold index out of range");
        if (dt != nullptr) {
            *dt = rep->report.thresholds.translation[t_index];
        }
        if (dtheta != nullptr) {
            *dtheta = rep->report.thresholds.yaw[y_index];
        }
        if (correct != nullptr) {
            *correct = rep->report.correct[t_index][y_index];
        }
        return SS_OK;
    });
}

ss_status ss_report_save_csv(const ss_report* rep, const char* path) {
    return guarded_as(SS_ERR_IO, [&]() {
        require(rep != nullptr && path != nullptr, "null argument");
        save_histogram_csv(path, rep->report);
        return SS_OK;
    });
}

void ss_report_free(ss_report* rep) { delete rep; }
