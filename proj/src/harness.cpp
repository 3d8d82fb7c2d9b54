#include "scenesearch/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "scenesearch/io.hpp"
#include "scenesearch/render.hpp"

namespace scenesearch {

namespace {

const ObjectModel& find_model(const std::vector<ObjectModel>& models, const std::string& id) {
    for (const ObjectModel& m : models) {
        if (m.id == id) {
            return m;
        }
    }
    throw std::invalid_argument("unknown model id " + id);
}

}  // namespace

GroundTruthScene synthesize_scene(const std::vector<ObjectModel>& models,
                                  const std::vector<ObjectPoseHypothesis>& truth,
                                  const CameraModel& camera, double noise_sigma,
                                  unsigned seed) {
    camera.validate();
    if (truth.empty()) {
        throw std::invalid_argument("synthesize: at least one object required");
    }
    if (!(noise_sigma >= 0.0)) {
        throw std::invalid_argument("synthesize: noise sigma must be non-negative");
    }

    DepthImage img(camera);
    for (const ObjectPoseHypothesis& t : truth) {
        const ObjectModel& m = find_model(models, t.model_id);
        DepthImage alone(camera);
        render_into(alone, m.mesh, t.pose);
        if (alone.return_count() == 0) {
            throw std::invalid_argument("synthesize: object " + t.model_id +
                                        " falls outside the camera frustum");
        }
        render_into(img, m.mesh, t.pose);
    }

    GroundTruthScene scene;
    scene.observed = depth_to_cloud(img);
    scene.camera = camera;
    scene.truth = truth;
    scene.noise_sigma = noise_sigma;
    scene.seed = seed;
    if (noise_sigma > 0.0) {
        std::mt19937 rng(seed);
        std::normal_distribution<double> jitter(0.0, noise_sigma);
        for (Point3& p : scene.observed.points) {
            p.x += jitter(rng);
            p.y += jitter(rng);
            p.z += jitter(rng);
        }
    }
    return scene;
}

PlaneRemoval remove_plane(const PointCloud& cloud, int iterations, double inlier_eps) {
    const std::size_t n = cloud.size();
    if (n < 3) {
        throw std::invalid_argument("remove_plane: need at least 3 points");
    }
    if (iterations <= 0 || !(inlier_eps > 0.0)) {
        throw std::invalid_argument("remove_plane: iterations and eps must be positive");
    }

    std::mt19937 rng(123456789u);  // fixed seed: the fit is reproducible
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    std::size_t best_inliers = 0;
    Point3 best_normal{0, 0, 0};
    double best_d = 0.0;

    for (int it = 0; it < iterations; ++it) {
        const std::size_t ia = pick(rng);
        const std::size_t ib = pick(rng);
        const std::size_t ic = pick(rng);
        if (ia == ib || ib == ic || ia == ic) {
            continue;
        }
        const Point3& a = cloud.points[ia];
        const Point3 ab = cloud.points[ib] - a;
        const Point3 ac = cloud.points[ic] - a;
        Point3 normal = ab.cross(ac);
        const double len = normal.norm();
        if (len < 1e-12) {
            continue;
        }
        normal = normal * (1.0 / len);
        const double d = -normal.dot(a);
        std::size_t inliers = 0;
        for (const Point3& p : cloud.points) {
            if (std::fabs(normal.dot(p) + d) <= inlier_eps) {
                ++inliers;
            }
        }
        if (inliers > best_inliers) {
            best_inliers = inliers;
            best_normal = normal;
            best_d = d;
        }
    }

    PlaneRemoval out;
    if (best_inliers * 10 < n * 3) {  // less than 30%: nothing dominant
        out.filtered = cloud;
        out.plane_found = false;
        return out;
    }

    // Orient the normal upward (against gravity); break exact verticals
    // deterministically.
    bool flip = best_normal.z < 0.0;
    if (best_normal.z == 0.0) {
        flip = best_normal.x < 0.0 || (best_normal.x == 0.0 && best_normal.y < 0.0);
    }
    if (flip) {
        best_normal = best_normal * -1.0;
        best_d = -best_d;
    }

    out.plane = {best_normal.x, best_normal.y, best_normal.z, best_d};
    out.plane_found = true;
    out.filtered.frame = cloud.frame;
    for (const Point3& p : cloud.points) {
        if (std::fabs(best_normal.dot(p) + best_d) > inlier_eps) {
            out.filtered.points.push_back(p);
        }
    }
    return out;
}

EvalReport evaluate(const std::vector<ObjectPoseHypothesis>& predicted,
                    const std::vector<ObjectPoseHypothesis>& truth,
                    const std::vector<ObjectModel>& models, const ThresholdGrid& thresholds) {
    std::map<std::string, std::vector<std::size_t>> pred_by_id;
    std::map<std::string, std::vector<std::size_t>> truth_by_id;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        pred_by_id[predicted[i].model_id].push_back(i);
    }
    for (std::size_t i = 0; i < truth.size(); ++i) {
        truth_by_id[truth[i].model_id].push_back(i);
    }
    if (pred_by_id.size() != truth_by_id.size() || predicted.size() != truth.size()) {
        throw std::invalid_argument("evaluate: predicted and truth ids do not match");
    }
    for (const auto& [id, t_idx] : truth_by_id) {
        auto it = pred_by_id.find(id);
        if (it == pred_by_id.end() || it->second.size() != t_idx.size()) {
            throw std::invalid_argument("evaluate: predicted and truth ids do not match");
        }
    }

    EvalReport report;
    report.thresholds = thresholds;
    report.errors.resize(truth.size());

    for (const auto& [id, t_idx] : truth_by_id) {
        const ObjectModel& model = find_model(models, id);
        std::vector<std::size_t> p_idx = pred_by_id.at(id);
        const std::size_t n = t_idx.size();
        if (n > 8) {
            throw std::invalid_argument("evaluate: too many duplicates of id " + id);
        }

        // Min total translation error over all pairings; the first minimal
        // permutation (lexicographic sweep) wins ties.
        std::sort(p_idx.begin(), p_idx.end());
        std::vector<std::size_t> best = p_idx;
        double best_cost = -1.0;
        std::vector<std::size_t> perm = p_idx;
        do {
            double cost = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                cost += std::hypot(predicted[perm[k]].pose.x - truth[t_idx[k]].pose.x,
                                   predicted[perm[k]].pose.y - truth[t_idx[k]].pose.y);
            }
            if (best_cost < 0.0 || cost < best_cost) {
                best_cost = cost;
                best = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));

        for (std::size_t k = 0; k < n; ++k) {
            const ObjectPoseHypothesis& p = predicted[best[k]];
            const ObjectPoseHypothesis& t = truth[t_idx[k]];
            ObjectError& e = report.errors[t_idx[k]];
            e.model_id = id;
            e.translation_error = std::hypot(p.pose.x - t.pose.x, p.pose.y - t.pose.y);
            e.yaw_error = shortest_angular_difference(p.pose.theta, t.pose.theta);
            e.yaw_ignored = model.rotationally_symmetric;
        }
    }

    report.correct.assign(thresholds.translation.size(),
                          std::vector<Count>(thresholds.yaw.size(), 0));
    for (const ObjectError& e : report.errors) {
        for (std::size_t i = 0; i < thresholds.translation.size(); ++i) {
            if (!(e.translation_error < thresholds.translation[i])) {
                continue;
            }
            for (std::size_t j = 0; j < thresholds.yaw.size(); ++j) {
                if (e.yaw_ignored || e.yaw_error < thresholds.yaw[j]) {
                    ++report.correct[i][j];
                }
            }
        }
    }
    return report;
}

ExperimentResult run_experiment(const GroundTruthScene& scene,
                                const std::vector<ObjectModel>& models,
                                const ExperimentConfig& cfg) {
    // Stage: configure.
    std::vector<ObjectPoseHypothesis> truth_in_library;
    for (const ObjectPoseHypothesis& t : scene.truth) {
        for (const ObjectModel& m : models) {
            if (m.id == t.model_id) {
                truth_in_library.push_back(t);
                break;
            }
        }
    }
    if (truth_in_library.empty()) {
        throw std::invalid_argument("configure: scene names no object from the model library");
    }

    SceneTask task;
    task.camera = scene.camera;
    task.models = models;
    for (const ObjectPoseHypothesis& t : truth_in_library) {
        task.required_objects.push_back(t.model_id);
    }
    task.grid = cfg.grid;
    task.delta = cfg.delta;
    task.icp = cfg.icp;
    task.icp_enabled = cfg.icp_enabled;

    // Stage: preprocess.
    try {
        task.observed = scene.observed;
        if (cfg.strip_plane) {
            PlaneRemoval removal =
                remove_plane(task.observed, cfg.plane_iterations, cfg.plane_eps);
            task.observed = std::move(removal.filtered);
        }
    } catch (const std::exception& e) {
        throw std::runtime_error("preprocess: " + std::string(e.what()));
    }

    try {
        task.prepare();
    } catch (const std::exception& e) {
        throw std::invalid_argument("configure: " + std::string(e.what()));
    }

    // Stage: solve.
    ExperimentResult result;
    try {
        result.search = solve(task, cfg.search);
    } catch (const std::exception& e) {
        throw std::runtime_error("solve: " + std::string(e.what()));
    }
    if (result.search.goal) {
        result.predicted = result.search.goal->assignments;
    }

    // Stage: evaluate. Without a complete assignment the report stays empty.
    try {
        if (!result.predicted.empty()) {
            result.report = evaluate(result.predicted, truth_in_library, models, cfg.thresholds);
        } else {
            result.report.thresholds = cfg.thresholds;
            result.report.correct.assign(cfg.thresholds.translation.size(),
                                         std::vector<Count>(cfg.thresholds.yaw.size(), 0));
        }
        result.report.wall_time = result.search.wall_time;
        result.report.expansions = result.search.expansions;
        result.report.generated = result.search.generated;
    } catch (const std::exception& e) {
        throw std::runtime_error("evaluate: " + std::string(e.what()));
    }

    // Stage: write.
    if (!cfg.out_dir.empty()) {
        try {
            std::filesystem::create_directories(cfg.out_dir);
            save_result_json(cfg.out_dir + "/result.json", result);
            save_histogram_csv(cfg.out_dir + "/histogram.csv", result.report);
        } catch (const std::exception& e) {
            throw std::runtime_error("write: " + std::string(e.what()));
        }
    }
    return result;
}

namespace {

nlohmann::json poses_to_json(const std::vector<ObjectPoseHypothesis>& poses) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ObjectPoseHypothesis& p : poses) {
        arr.push_back({{"id", p.model_id},
                       {"x", p.pose.x},
                       {"y", p.pose.y},
                       {"theta", p.pose.theta}});
    }
    return arr;
}

std::vector<ObjectPoseHypothesis> poses_from_json(const nlohmann::json& arr) {
    std::vector<ObjectPoseHypothesis> poses;
    for (const nlohmann::json& e : arr) {
        poses.push_back({e.at("id").get<std::string>(),
                         RigidPose2D(e.at("x").get<double>(), e.at("y").get<double>(),
                                     e.at("theta").get<double>())});
    }
    return poses;
}

nlohmann::json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed for " + path);
    }
}

}  // namespace

void save_truth_json(const std::string& path, const GroundTruthScene& scene) {
    nlohmann::json j;
    j["noise_sigma"] = scene.noise_sigma;
    j["seed"] = scene.seed;
    j["objects"] = poses_to_json(scene.truth);
    write_file(path, j.dump(2) + "\n");
}

std::vector<ObjectPoseHypothesis> load_poses_json(const std::string& path) {
    const nlohmann::json j = parse_file(path);
    const char* key = j.contains("objects") ? "objects" : "poses";
    if (!j.contains(key)) {
        throw std::runtime_error(path + ": no \"objects\" or \"poses\" list");
    }
    try {
        return poses_from_json(j.at(key));
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

std::pair<double, unsigned> load_truth_meta_json(const std::string& path) {
    const nlohmann::json j = parse_file(path);
    return {j.value("noise_sigma", 0.0), j.value("seed", 0u)};
}

void save_result_json(const std::string& path, const ExperimentResult& result) {
    nlohmann::json j;
    j["cost"] = result.search.cost;
    j["bound_certificate"] = result.search.bound_certificate;
    j["expansions"] = result.search.expansions;
    j["generated"] = result.search.generated;
    j["wall_time"] = result.search.wall_time;
    j["timed_out"] = result.search.timed_out;
    j["poses"] = poses_to_json(result.predicted);
    write_file(path, j.dump(2) + "\n");
}

void save_histogram_csv(const std::string& path, const EvalReport& report) {
    std::ostringstream out;
    out << "dt,dtheta,correct,total\n";
    out.precision(10);
    for (std::size_t i = 0; i < report.thresholds.translation.size(); ++i) {
        for (std::size_t j = 0; j < report.thresholds.yaw.size(); ++j) {
            out << report.thresholds.translation[i] << "," << report.thresholds.yaw[j] << ","
                << report.correct[i][j] << "," << report.errors.size() << "\n";
        }
    }
    write_file(path, out.str());
}

std::vector<ObjectModel> load_models_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("not a directory: " + dir);
    }
    std::vector<fs::path> meshes;
    for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".obj") {
            meshes.push_back(e.path());
        }
    }
    if (meshes.empty()) {
        throw std::runtime_error("no .obj files in " + dir);
    }
    std::sort(meshes.begin(), meshes.end());

    std::map<std::string, bool> symmetric;
    const fs::path meta = fs::path(dir) / "models.json";
    if (fs::exists(meta)) {
        const nlohmann::json j = parse_file(meta.string());
        for (const nlohmann::json& e : j.value("models", nlohmann::json::array())) {
            symmetric[e.at("id").get<std::string>()] = e.value("symmetric", false);
        }
    }

    std::vector<ObjectModel> models;
    for (const fs::path& p : meshes) {
        ObjectModel m;
        m.id = p.stem().string();
        m.mesh = load_obj(p.string());
        m.volume = inscribed_cylinder(m.mesh);
        auto it = symmetric.find(m.id);
        if (it != symmetric.end()) {
            m.rotationally_symmetric = it->second;
            symmetric.erase(it);
        }
        models.push_back(std::move(m));
    }
    for (const auto& [id, flag] : symmetric) {
        (void)flag;
        throw std::runtime_error("models.json names unknown id " + id);
    }
    return models;
}

}  // namespace scenesearch
