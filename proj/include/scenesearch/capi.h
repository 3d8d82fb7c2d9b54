#ifndef SCENESEARCH_CAPI_H
#define SCENESEARCH_CAPI_H

/* C interface to the scene-search engine: load a model library, obtain an
 * observation (from files or by synthesizing one), solve for object poses,
 * and score predictions against ground truth.
 *
 * All functions returning ss_status leave a thread-local message readable
 * via ss_last_error() on failure. Output handles are written only on the
 * statuses documented per function and must be released with the matching
 * _free(); every _free() accepts NULL. Strings returned by accessors stay
 * valid until their owning handle is freed. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SS_API __declspec(dllexport)
#else
#define SS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ss_status {
    SS_OK = 0,
    SS_ERR_INVALID_ARGUMENT = 2, /* bad configuration or malformed input */
    SS_ERR_INFEASIBLE = 3,       /* search exhausted without a complete pose set */
    SS_ERR_TIMEOUT = 4,          /* time limit hit before any complete pose set */
    SS_ERR_IO = 5,               /* file missing, unreadable, or unwritable */
    SS_ERR_INTERNAL = 6
} ss_status;

typedef struct ss_model_set ss_model_set; /* immutable model library */
typedef struct ss_scene ss_scene;         /* observation + camera (+ optional truth) */
typedef struct ss_poses ss_poses;         /* list of (model id, pose) entries */
typedef struct ss_result ss_result;       /* solver output */
typedef struct ss_report ss_report;       /* evaluation histogram */

typedef struct ss_pose {
    double x;     /* meters */
    double y;     /* meters */
    double theta; /* radians, yaw about +z */
} ss_pose;

typedef struct ss_config {
    double delta;        /* match radius in meters for the explanation cost */
    double w;            /* suboptimality factor, >= 1 */
    double grid_step_xy; /* meters */
    double grid_step_yaw; /* radians */
    double grid_min_x;   /* NaN = fit bounds to the observed cloud */
    double grid_max_x;
    double grid_min_y;
    double grid_max_y;
    double time_limit;   /* seconds; <= 0 means unlimited */
    int workers;         /* parallel successor evaluation; result is identical */
    int icp_enabled;     /* refine candidate poses against the observation */
    double icp_cap;      /* max refinement shift in meters; <= 0 = half xy step */
    int use_depth_heuristic;   /* prefer deeper partial assignments */
    int use_overlap_heuristic; /* prefer assignments covering more of the cloud */
} ss_config;

typedef void (*ss_progress_fn)(uint64_t expansions, uint64_t generated,
                               int64_t best_cost, double elapsed_seconds, void* user);

SS_API const char* ss_version(void);

/* Message from the most recent failing call on this thread ("" if none). */
SS_API const char* ss_last_error(void);

/* Fills cfg with the engine defaults (w=3, delta=3 mm, 4 cm / 22.5 deg grid,
 * auto bounds, 1 worker, refinement on, both heuristics on). */
SS_API void ss_config_init(ss_config* cfg);

/* ---- Model libraries ---------------------------------------------------- */

/* Loads every .obj in dir (model id = file stem). An optional models.json
 * may flag rotationally symmetric ids. Writes *out on SS_OK. */
SS_API ss_status ss_models_load(const char* dir, ss_model_set** out);
SS_API size_t ss_models_count(const ss_model_set* ms);
SS_API const char* ss_models_id(const ss_model_set* ms, size_t index);
SS_API void ss_models_free(ss_model_set* ms);

/* ---- Pose lists --------------------------------------------------------- */

SS_API ss_status ss_poses_create(const char* const* ids, const ss_pose* poses,
                                 size_t count, ss_poses** out);
/* Reads {"objects":[...]} or {"poses":[...]} entries of {id,x,y,theta}. */
SS_API ss_status ss_poses_load_json(const char* path, ss_poses** out);
SS_API size_t ss_poses_count(const ss_poses* ps);
SS_API const char* ss_poses_id(const ss_poses* ps, size_t index);
SS_API ss_status ss_poses_get(const ss_poses* ps, size_t index, ss_pose* out);
SS_API void ss_poses_free(ss_poses* ps);

/* ---- Scenes ------------------------------------------------------------- */

/* Observation from an ASCII PCD file plus camera intrinsics/extrinsics JSON.
 * The cloud must be in (or is taken as) the camera frame unless the file
 * records "# frame world". Writes *out on SS_OK. */
SS_API ss_status ss_scene_load(const char* pcd_path, const char* camera_json_path,
                               ss_scene** out);

/* Renders the given placement and back-projects it to a cloud, adding
 * per-axis Gaussian jitter of noise_sigma meters under the seed. The truth
 * placement is retained in the scene. Writes *out on SS_OK. */
SS_API ss_status ss_scene_synthesize(const ss_model_set* ms, const ss_poses* truth,
                                     const char* camera_json_path, double noise_sigma,
                                     uint32_t seed, ss_scene** out);

/* Writes the observation (always) and, when truth_json_path is non-NULL,
 * the truth placement with its noise/seed metadata. */
SS_API ss_status ss_scene_save(const ss_scene* scene, const char* pcd_path,
                               const char* truth_json_path);

/* Fits the dominant plane and removes its inliers from the observation.
 * When no plane reaches 30% support the scene is unchanged and *plane_found
 * (if non-NULL) is 0; that still returns SS_OK. */
SS_API ss_status ss_scene_strip_plane(ss_scene* scene, int iterations,
                                      double inlier_eps, int* plane_found);

SS_API size_t ss_scene_point_count(const ss_scene* scene);
SS_API size_t ss_scene_truth_count(const ss_scene* scene);
SS_API const char* ss_scene_truth_id(const ss_scene* scene, size_t index);
SS_API ss_status ss_scene_truth_pose(const ss_scene* scene, size_t index, ss_pose* out);
SS_API void ss_scene_free(ss_scene* scene);

/* ---- Solving ------------------------------------------------------------ */

/* Searches for poses of the required objects (a multiset of model ids from
 * ms) that explain the scene's observation. progress (when non-NULL) is
 * invoked from the calling thread every progress_every expansions.
 *
 * Writes *out on SS_OK (complete pose set found), SS_ERR_INFEASIBLE
 * (search space exhausted), and SS_ERR_TIMEOUT (limit hit first) — the
 * latter two carry statistics but no poses. Configuration problems return
 * SS_ERR_INVALID_ARGUMENT and leave *out untouched. */
SS_API ss_status ss_solve(const ss_model_set* ms, const ss_scene* scene,
                          const char* const* required_ids, size_t required_count,
                          const ss_config* cfg, ss_progress_fn progress, void* user,
                          uint64_t progress_every, ss_result** out);

SS_API int64_t ss_result_cost(const ss_result* res); /* -1 without a pose set */
/* Proven upper bound: final cost of the best possible pose set is >= this
 * cost / w at termination; -1.0 when nothing was proven. */
SS_API double ss_result_certificate(const ss_result* res);
SS_API uint64_t ss_result_expansions(const ss_result* res);
SS_API uint64_t ss_result_generated(const ss_result* res);
SS_API double ss_result_wall_time(const ss_result* res);
SS_API int ss_result_timed_out(const ss_result* res);
SS_API size_t ss_result_object_count(const ss_result* res);
SS_API const char* ss_result_object_id(const ss_result* res, size_t index);
SS_API ss_status ss_result_object_pose(const ss_result* res, size_t index, ss_pose* out);
/* {"cost","bound_certificate","expansions","generated","wall_time",
 *  "timed_out","poses":[{id,x,y,theta}...]} */
SS_API ss_status ss_result_save_json(const ss_result* res, const char* path);
SS_API void ss_result_free(ss_result* res);

/* ---- Evaluation --------------------------------------------------------- */

/* Scores predicted against truth: per model id, duplicates are paired to
 * minimize total translation error; yaw is ignored for rotationally
 * symmetric models. Both lists must carry the same multiset of ids, all
 * known to ms. Histogram thresholds: translation {1, 5, 10} cm crossed with
 * yaw {5, 10, 20, 180} degrees. Writes *out on SS_OK. */
SS_API ss_status ss_evaluate(const ss_model_set* ms, const ss_poses* truth,
                             const ss_poses* predicted, ss_report** out);

SS_API size_t ss_report_object_count(const ss_report* rep);
/* Errors for the index-th truth object (any output may be NULL). */
SS_API ss_status ss_report_error(const ss_report* rep, size_t index,
                                 double* translation_error, double* yaw_error,
                                 int* yaw_ignored);
SS_API ss_status ss_report_threshold_counts(const ss_report* rep,
                                            size_t* translation_count, size_t* yaw_count);
/* One histogram cell: its thresholds and how many objects passed both. */
SS_API ss_status ss_report_cell(const ss_report* rep, size_t t_index, size_t y_index,
                                double* dt, double* dtheta, int64_t* correct);
/* CSV with header dt,dtheta,correct,total and one row per cell. */
SS_API ss_status ss_report_save_csv(const ss_report* rep, const char* path);
SS_API void ss_report_free(ss_report* rep);

#ifdef __cplusplus
}
#endif

#endif /* SCENESEARCH_CAPI_H */
