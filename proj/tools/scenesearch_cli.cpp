// Command-line front end for the scene-search engine. Talks to the engine
// exclusively through its C interface, so it doubles as a living example of
// embedding the shared library.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scenesearch/capi.h"

namespace {

template <typename T, void (*Free)(T*)>
class Handle {
  public:
    Handle() = default;
    ~Handle() { Free(ptr_); }
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;

    T** slot() { return &ptr_; }
    T* get() const { return ptr_; }
    explicit operator bool() const { return ptr_ != nullptr; }

  private:
    T* ptr_ = nullptr;
};

using ModelSet = Handle<ss_model_set, ss_models_free>;
using Scene = Handle<ss_scene, ss_scene_free>;
using Poses = Handle<ss_poses, ss_poses_free>;
using Result = Handle<ss_result, ss_result_free>;
using Report = Handle<ss_report, ss_report_free>;

// 0 success, 2 invalid configuration or unreadable input, 3 no complete
// placement exists, 4 time limit hit before any placement, 1 internal.
int exit_code(ss_status status) {
    switch (status) {
        case SS_OK:
            return 0;
        case SS_ERR_INVALID_ARGUMENT:
        case SS_ERR_IO:
            return 2;
        case SS_ERR_INFEASIBLE:
            return 3;
        case SS_ERR_TIMEOUT:
            return 4;
        default:
            return 1;
    }
}

int fail(ss_status status, const char* doing) {
    std::fprintf(stderr, "error while %s: %s\n", doing, ss_last_error());
    return exit_code(status);
}

struct SearchFlags {
    ss_config cfg{};
    std::string preset;
    bool no_icp = false;
    bool strip_plane = false;
    bool progress = false;
    CLI::Option* w_opt = nullptr;
    CLI::Option* delta_opt = nullptr;
};

void add_search_flags(CLI::App* cmd, SearchFlags& f) {
    ss_config_init(&f.cfg);
    f.delta_opt = cmd->add_option("--delta", f.cfg.delta,
                                  "Match radius in meters for the explanation cost")
                      ->envname("SCENESEARCH_DELTA")
                      ->capture_default_str();
    f.w_opt = cmd->add_option("--w", f.cfg.w, "Suboptimality factor (>= 1)")
                  ->envname("SCENESEARCH_W")
                  ->capture_default_str();
    cmd->add_option("--grid-xy", f.cfg.grid_step_xy, "Translation grid step in meters")
        ->envname("SCENESEARCH_GRID_XY")
        ->capture_default_str();
    cmd->add_option("--grid-yaw", f.cfg.grid_step_yaw, "Yaw grid step in radians")
        ->envname("SCENESEARCH_GRID_YAW")
        ->capture_default_str();
    cmd->add_option("--grid-min-x", f.cfg.grid_min_x,
                    "Grid lower x bound in meters (default: fit to cloud)");
    cmd->add_option("--grid-max-x", f.cfg.grid_max_x,
                    "Grid upper x bound in meters (default: fit to cloud)");
    cmd->add_option("--grid-min-y", f.cfg.grid_min_y,
                    "Grid lower y bound in meters (default: fit to cloud)");
    cmd->add_option("--grid-max-y", f.cfg.grid_max_y,
                    "Grid upper y bound in meters (default: fit to cloud)");
    cmd->add_option("--time-limit", f.cfg.time_limit,
                    "Wall-clock budget in seconds (<= 0: unlimited)")
        ->envname("SCENESEARCH_TIME_LIMIT")
        ->capture_default_str();
    cmd->add_option("--workers", f.cfg.workers,
                    "Threads for candidate evaluation (never changes the answer)")
        ->envname("SCENESEARCH_WORKERS")
        ->capture_default_str();
    cmd->add_option("--icp-cap", f.cfg.icp_cap,
                    "Max pose-refinement shift in meters (<= 0: half the xy step)")
        ->envname("SCENESEARCH_ICP_CAP");
    cmd->add_flag("--no-icp", f.no_icp, "Disable pose refinement");
    cmd->add_flag("--strip-plane", f.strip_plane,
                  "Remove the dominant support plane before solving");
    cmd->add_flag("--progress", f.progress, "Stream search progress to stderr");
    cmd->add_option("--preset", f.preset,
                    "Named parameter set: 'chessboard' (w=15, delta=7.5 mm)")
        ->envname("SCENESEARCH_PRESET");
}

// Returns false (after printing) when the preset name is unknown.
bool apply_preset(SearchFlags& f) {
    f.cfg.icp_enabled = f.no_icp ? 0 : 1;
    if (f.preset.empty()) {
        return true;
    }
    if (f.preset != "chessboard") {
        std::fprintf(stderr, "error: unknown preset '%s'\n", f.preset.c_str());
        return false;
    }
    if (f.w_opt->count() == 0) {
        f.cfg.w = 15.0;
    }
    if (f.delta_opt->count() == 0) {
        f.cfg.delta = 0.0075;
    }
    return true;
}

void print_progress(uint64_t expansions, uint64_t generated, int64_t best_cost,
                    double elapsed, void*) {
    std::fprintf(stderr, "  expanded %llu  generated %llu  best %lld  %.2fs\n",
                 static_cast<unsigned long long>(expansions),
                 static_cast<unsigned long long>(generated),
                 static_cast<long long>(best_cost), elapsed);
}

void print_result(const ss_result* res) {
    for (size_t i = 0; i < ss_result_object_count(res); ++i) {
        ss_pose p{};
        ss_result_object_pose(res, i, &p);
        std::printf("%-16s x %9.4f  y %9.4f  theta %8.4f\n",
                    ss_result_object_id(res, i), p.x, p.y, p.theta);
    }
    std::printf("cost %lld  certificate %.1f  expansions %llu  generated %llu  %.2fs%s\n",
                static_cast<long long>(ss_result_cost(res)), ss_result_certificate(res),
                static_cast<unsigned long long>(ss_result_expansions(res)),
                static_cast<unsigned long long>(ss_result_generated(res)),
                ss_result_wall_time(res), ss_result_timed_out(res) ? "  [timed out]" : "");
}

void print_report(const ss_report* rep, const ss_poses* truth) {
    for (size_t i = 0; i < ss_report_object_count(rep); ++i) {
        double dt = 0.0;
        double dyaw = 0.0;
        int ignored = 0;
        ss_report_error(rep, i, &dt, &dyaw, &ignored);
        if (ignored) {
            std::printf("%-16s translation error %.4f m  (yaw-free shape)\n",
                        ss_poses_id(truth, i), dt);
        } else {
            std::printf("%-16s translation error %.4f m  yaw error %.4f rad\n",
                        ss_poses_id(truth, i), dt, dyaw);
        }
    }
    size_t nt = 0;
    size_t ny = 0;
    ss_report_threshold_counts(rep, &nt, &ny);
    std::printf("correct counts (rows: translation gate, columns: yaw gate):\n");
    for (size_t i = 0; i < nt; ++i) {
        double dt = 0.0;
        std::printf("  dt<%4.2fm:", [&] {
            ss_report_cell(rep, i, 0, &dt, nullptr, nullptr);
            return dt;
        }());
        for (size_t j = 0; j < ny; ++j) {
            int64_t correct = 0;
            double dtheta = 0.0;
            ss_report_cell(rep, i, j, nullptr, &dtheta, &correct);
            std::printf("  %lld (dyaw<%.2f)", static_cast<long long>(correct), dtheta);
        }
        std::printf("\n");
    }
}

// Gathers a result's poses into a pose list for evaluation.
ss_status result_to_poses(const ss_result* res, Poses& out) {
    std::vector<const char*> ids;
    std::vector<ss_pose> poses;
    for (size_t i = 0; i < ss_result_object_count(res); ++i) {
        ids.push_back(ss_result_object_id(res, i));
        ss_pose p{};
        ss_result_object_pose(res, i, &p);
        poses.push_back(p);
    }
    return ss_poses_create(ids.data(), poses.data(), ids.size(), out.slot());
}

std::vector<const char*> pose_ids(const ss_poses* ps) {
    std::vector<const char*> ids;
    for (size_t i = 0; i < ss_poses_count(ps); ++i) {
        ids.push_back(ss_poses_id(ps, i));
    }
    return ids;
}

bool ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        std::fprintf(stderr, "error: cannot create %s: %s\n", dir.c_str(),
                     ec.message().c_str());
        return false;
    }
    return true;
}

int run_synth(const std::string& models_dir, const std::string& truth_file,
              const std::string& camera_file, double noise, uint32_t seed,
              const std::string& out_dir) {
    ModelSet ms;
    if (ss_status s = ss_models_load(models_dir.c_str(), ms.slot()); s != SS_OK) {
        return fail(s, "loading models");
    }
    Poses truth;
    if (ss_status s = ss_poses_load_json(truth_file.c_str(), truth.slot()); s != SS_OK) {
        return fail(s, "reading the placement");
    }
    Scene scene;
    if (ss_status s = ss_scene_synthesize(ms.get(), truth.get(), camera_file.c_str(),
                                          noise, seed, scene.slot());
        s != SS_OK) {
        return fail(s, "synthesizing the scene");
    }
    if (!ensure_out_dir(out_dir)) {
        return 2;
    }
    const std::string pcd = out_dir + "/scene.pcd";
    const std::string truth_out = out_dir + "/truth.json";
    if (ss_status s = ss_scene_save(scene.get(), pcd.c_str(), truth_out.c_str());
        s != SS_OK) {
        return fail(s, "writing the scene");
    }
    std::printf("wrote %zu points for %zu objects to %s and %s\n",
                ss_scene_point_count(scene.get()), ss_scene_truth_count(scene.get()),
                pcd.c_str(), truth_out.c_str());
    return 0;
}

int solve_common(const ModelSet& ms, const Scene& scene, const Poses& required_from,
                 const std::vector<std::string>& require_ids, SearchFlags& flags,
                 const std::string& out_dir, Result& res) {
    std::vector<const char*> ids;
    for (const std::string& id : require_ids) {
        ids.push_back(id.c_str());
    }
    if (ids.empty() && required_from) {
        ids = pose_ids(required_from.get());
    }
    if (ids.empty()) {
        std::fprintf(stderr, "error: nothing to place (use --require or --truth)\n");
        return 2;
    }
    if (flags.strip_plane) {
        int found = 0;
        if (ss_status s = ss_scene_strip_plane(
                const_cast<ss_scene*>(scene.get()), 200, 0.005, &found);
            s != SS_OK) {
            return fail(s, "removing the support plane");
        }
        if (found == 0) {
            std::fprintf(stderr, "note: no dominant plane found; cloud unchanged\n");
        }
    }
    const ss_status s =
        ss_solve(ms.get(), scene.get(), ids.data(), ids.size(), &flags.cfg,
                 flags.progress ? print_progress : nullptr, nullptr, 200, res.slot());
    if (res) {
        print_result(res.get());
    }
    if (s != SS_OK && !res) {
        return fail(s, "solving");
    }
    if (s != SS_OK) {
        std::fprintf(stderr, "error: %s\n", ss_last_error());
    }
    if (!out_dir.empty()) {
        if (!ensure_out_dir(out_dir)) {
            return 2;
        }
        const std::string path = out_dir + "/result.json";
        if (ss_status w = ss_result_save_json(res.get(), path.c_str()); w != SS_OK) {
            return fail(w, "writing the result");
        }
    }
    return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Locates known rigid objects in a depth observation by searching "
                 "over rendered scene hypotheses."};
    app.require_subcommand(1);
    app.set_version_flag("--version", ss_version());

    std::string models_dir;
    std::string camera_file;
    std::string scene_file;
    std::string truth_file;
    std::string predicted_file;
    std::string out_dir;
    std::vector<std::string> require_ids;
    double noise = 0.0;
    uint32_t seed = 0;

    auto* synth = app.add_subcommand(
        "synth", "Render a known placement into a synthetic observation");
    synth->add_option("--models", models_dir, "Directory of .obj models")
        ->envname("SCENESEARCH_MODELS")
        ->required();
    synth->add_option("--truth", truth_file, "Placement JSON to render")->required();
    synth->add_option("--camera", camera_file, "Camera JSON")->required();
    synth->add_option("--noise", noise, "Per-axis Gaussian jitter in meters")
        ->capture_default_str();
    synth->add_option("--seed", seed, "Jitter seed")
        ->envname("SCENESEARCH_SEED")
        ->capture_default_str();
    synth->add_option("--out", out_dir, "Output directory")
        ->envname("SCENESEARCH_OUT")
        ->required();

    auto* solve = app.add_subcommand("solve", "Find object poses in an observation");
    solve->add_option("--models", models_dir, "Directory of .obj models")
        ->envname("SCENESEARCH_MODELS")
        ->required();
    solve->add_option("--scene", scene_file, "Observation PCD")->required();
    solve->add_option("--camera", camera_file, "Camera JSON")->required();
    solve->add_option("--truth", truth_file,
                      "Placement JSON naming the objects to search for");
    solve->add_option("--require", require_ids,
                      "Model id to place (repeat per instance; overrides --truth)");
    solve->add_option("--out", out_dir, "Directory for result.json")
        ->envname("SCENESEARCH_OUT");
    SearchFlags solve_flags;
    add_search_flags(solve, solve_flags);

    auto* eval = app.add_subcommand("eval", "Score predicted poses against truth");
    eval->add_option("--models", models_dir, "Directory of .obj models")
        ->envname("SCENESEARCH_MODELS")
        ->required();
    eval->add_option("--truth", truth_file, "Ground-truth placement JSON")->required();
    eval->add_option("--predicted", predicted_file, "Predicted poses JSON")->required();
    eval->add_option("--out", out_dir, "Directory for histogram.csv")
        ->envname("SCENESEARCH_OUT");

    auto* experiment = app.add_subcommand(
        "experiment", "Synthesize (or load), solve, and score in one run");
    experiment->add_option("--models", models_dir, "Directory of .obj models")
        ->envname("SCENESEARCH_MODELS")
        ->required();
    experiment->add_option("--camera", camera_file, "Camera JSON")->required();
    experiment->add_option("--truth", truth_file, "Ground-truth placement JSON")
        ->required();
    experiment->add_option("--scene", scene_file,
                           "Existing observation PCD (default: render the truth)");
    experiment->add_option("--noise", noise, "Per-axis jitter in meters when rendering")
        ->capture_default_str();
    experiment->add_option("--seed", seed, "Jitter seed")
        ->envname("SCENESEARCH_SEED")
        ->capture_default_str();
    experiment->add_option("--out", out_dir, "Directory for result.json + histogram.csv")
        ->envname("SCENESEARCH_OUT");
    SearchFlags exp_flags;
    add_search_flags(experiment, exp_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (synth->parsed()) {
        return run_synth(models_dir, truth_file, camera_file, noise, seed, out_dir);
    }

    ModelSet ms;
    if (ss_status s = ss_models_load(models_dir.c_str(), ms.slot()); s != SS_OK) {
        return fail(s, "loading models");
    }

    if (eval->parsed()) {
        Poses truth;
        if (ss_status s = ss_poses_load_json(truth_file.c_str(), truth.slot());
            s != SS_OK) {
            return fail(s, "reading truth");
        }
        Poses predicted;
        if (ss_status s = ss_poses_load_json(predicted_file.c_str(), predicted.slot());
            s != SS_OK) {
            return fail(s, "reading predictions");
        }
        Report rep;
        if (ss_status s = ss_evaluate(ms.get(), truth.get(), predicted.get(), rep.slot());
            s != SS_OK) {
            return fail(s, "evaluating");
        }
        print_report(rep.get(), truth.get());
        if (!out_dir.empty()) {
            if (!ensure_out_dir(out_dir)) {
                return 2;
            }
            const std::string csv = out_dir + "/histogram.csv";
            if (ss_status s = ss_report_save_csv(rep.get(), csv.c_str()); s != SS_OK) {
                return fail(s, "writing the histogram");
            }
        }
        return 0;
    }

    SearchFlags& flags = solve->parsed() ? solve_flags : exp_flags;
    if (!apply_preset(flags)) {
        return 2;
    }

    Poses truth;
    if (!truth_file.empty()) {
        if (ss_status s = ss_poses_load_json(truth_file.c_str(), truth.slot());
            s != SS_OK) {
            return fail(s, "reading truth");
        }
    }

    Scene scene;
    if (!scene_file.empty()) {
        if (ss_status s =
                ss_scene_load(scene_file.c_str(), camera_file.c_str(), scene.slot());
            s != SS_OK) {
            return fail(s, "loading the scene");
        }
    } else {
        // experiment without --scene: render the truth placement.
        if (ss_status s = ss_scene_synthesize(ms.get(), truth.get(), camera_file.c_str(),
                                              noise, seed, scene.slot());
            s != SS_OK) {
            return fail(s, "synthesizing the scene");
        }
    }

    Result res;
    const int code =
        solve_common(ms, scene, truth, require_ids, flags, out_dir, res);

    if (experiment->parsed() && code == 0) {
        Poses predicted;
        if (ss_status s = result_to_poses(res.get(), predicted); s != SS_OK) {
            return fail(s, "collecting predictions");
        }
        Report rep;
        if (ss_status s = ss_evaluate(ms.get(), truth.get(), predicted.get(), rep.slot());
            s != SS_OK) {
            return fail(s, "evaluating");
        }
        print_report(rep.get(), truth.get());
        if (!out_dir.empty()) {
            const std::string csv = out_dir + "/histogram.csv";
            if (ss_status s = ss_report_save_csv(rep.get(), csv.c_str()); s != SS_OK) {
                return fail(s, "writing the histogram");
            }
        }
    }
    return code;
}
