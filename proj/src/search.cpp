#include "scenesearch/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace scenesearch {

Count h_depth(const SceneState& s, std::size_t total_objects) {
    if (s.assignments.size() > total_objects) {
        throw std::invalid_argument("h_depth: state has more assignments than objects");
    }
    return static_cast<Count>(total_objects - s.assignments.size());
}

Count h_overlap(const SceneState& s, const SceneTask& task) {
    std::vector<std::pair<const VolumeApprox*, const RigidPose2D*>> volumes;
    volumes.reserve(s.assignments.size());
    for (const ObjectPoseHypothesis& a : s.assignments) {
        volumes.push_back({&task.model(a.model_id).volume, &a.pose});
    }
    Count outside = 0;
    for (const Point3& p : task.observed.points) {
        bool covered = false;
        for (const auto& [vol, pose] : volumes) {
            if (point_in_volume(p, *vol, *pose)) {
                covered = true;
                break;
            }
        }
        if (!covered) {
            ++outside;
        }
    }
    return outside;
}

namespace {

enum class Guide { depth, overlap };

struct Node {
    SceneState state;
    Count hd = 0;            // objects left to place
    Count hov = -1;          // covered-points heuristic, computed lazily
    Count parent_hov = -1;   // parent's value at generation time, for audit
    bool in_focal = false;
};

// Set keys ordered by an explicit priority tuple; the canonical key makes
// every entry unique and the ordering deterministic.
struct Prio {
    Count primary = 0;
    Count secondary = 0;
    Node* node = nullptr;

    bool operator<(const Prio& o) const {
        if (primary != o.primary) {
            return primary < o.primary;
        }
        if (secondary != o.secondary) {
            return secondary < o.secondary;
        }
        return node->state.canonical_key < o.node->state.canonical_key;
    }
};

class Clock {
public:
    Clock() : start_(std::chrono::steady_clock::now()) {}
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

SearchResult solve(const SceneTask& task, const SearchConfig& cfg) {
    if (!(cfg.w >= 1.0)) {
        throw std::invalid_argument("solve: suboptimality factor must be >= 1");
    }
    std::vector<Guide> schedule;
    for (const std::string& id : cfg.heuristics) {
        if (id == kHeuristicDepth) {
            schedule.push_back(Guide::depth);
        } else if (id == kHeuristicOverlap) {
            schedule.push_back(Guide::overlap);
        } else {
            throw std::invalid_argument("solve: unknown heuristic id " + id);
        }
    }
    const bool overlap_used =
        std::find(schedule.begin(), schedule.end(), Guide::overlap) != schedule.end();

    const Clock clock;
    SearchResult result;
    const std::size_t K = task.object_count();

    // Node storage (stable addresses), the cost-ordered frontier, and one
    // guidance ordering per heuristic over the within-bound subset.
    std::unordered_map<std::string, std::unique_ptr<Node>> nodes;
    std::set<Prio> anchor;        // (g, hd, key)
    std::set<Prio> focal_depth;   // (hd, 0, key)
    std::set<Prio> focal_overlap; // (hov, hd, key)
    std::unordered_set<std::string> seen;

    std::optional<SceneState> best_goal;

    auto goal_better = [&](const SceneState& a) {
        return !best_goal || a.g < best_goal->g ||
               (a.g == best_goal->g && a.canonical_key < best_goal->canonical_key);
    };

    auto enter_focal = [&](Node* n) {
        n->in_focal = true;
        focal_depth.insert({n->hd, 0, n});
        if (overlap_used) {
            if (n->hov < 0) {
                n->hov = h_overlap(n->state, task);
            }
            ++result.audit_overlap_checked;
            if (n->parent_hov >= 0 && n->hov > n->parent_hov) {
                ++result.audit_overlap_violations;
            }
            focal_overlap.insert({n->hov, n->hd, n});
        }
    };

    auto insert_node = [&](SceneState&& s, Count parent_hov, double focal_bound) {
        auto n = std::make_unique<Node>();
        n->state = std::move(s);
        n->hd = static_cast<Count>(K - n->state.assignments.size());
        n->parent_hov = parent_hov;
        Node* raw = n.get();
        anchor.insert({raw->state.g, raw->hd, raw});
        if (static_cast<double>(raw->state.g) <= focal_bound) {
            enter_focal(raw);
        }
        nodes.emplace(raw->state.canonical_key, std::move(n));
    };

    auto remove_node = [&](Node* n) {
        anchor.erase({n->state.g, n->hd, n});
        if (n->in_focal) {
            focal_depth.erase({n->hd, 0, n});
            if (overlap_used) {
                focal_overlap.erase({n->hov, n->hd, n});
            }
        }
    };

    auto emit_progress = [&](bool force) {
        if (!cfg.on_progress || cfg.progress_every <= 0) {
            return;
        }
        if (force || result.expansions % cfg.progress_every == 0) {
            SearchProgress p;
            p.expansions = result.expansions;
            p.generated = result.generated;
            p.best_cost = best_goal ? best_goal->g : -1;
            p.elapsed = clock.elapsed();
            cfg.on_progress(p);
        }
    };

    auto finish = [&](double certificate, bool timed_out) {
        result.timed_out = timed_out;
        if (best_goal) {
            result.cost = best_goal->g;
            result.goal = std::move(best_goal);
        }
        result.bound_certificate = certificate;
        result.wall_time = clock.elapsed();
        emit_progress(true);
        return result;
    };

    // Root.
    {
        SceneState root = make_root(task);
        seen.insert(root.canonical_key);
        insert_node(std::move(root), -1, cfg.w * 0.0);
    }

    double focal_bound = 0.0;
    Count last_min_key = 0;
    std::size_t rotation = 0;  // position in schedule; schedule.size() = anchor's turn

    while (!anchor.empty()) {
        const Count min_key = anchor.begin()->primary;
        if (min_key < last_min_key) {
            ++result.audit_anchor_regressions;
        }
        last_min_key = std::max(last_min_key, min_key);

        // Grow the guided subset up to the current bound. The bound never
        // shrinks, so each node crosses it at most once.
        const double new_bound = cfg.w * static_cast<double>(min_key);
        if (new_bound > focal_bound) {
            focal_bound = new_bound;
            for (const Prio& e : anchor) {
                if (static_cast<double>(e.primary) > focal_bound) {
                    break;
                }
                if (!e.node->in_focal) {
                    enter_focal(e.node);
                }
            }
        }

        if (best_goal && static_cast<double>(best_goal->g) <= cfg.w * static_cast<double>(min_key)) {
            return finish(cfg.w * static_cast<double>(min_key), false);
        }
        if (cfg.time_limit > 0.0 && clock.elapsed() >= cfg.time_limit) {
            return finish(cfg.w * static_cast<double>(min_key), true);
        }

        // Pick this turn's state: one of the guided orderings, then the
        // cheapest frontier entry.
        Node* chosen;
        if (rotation < schedule.size()) {
            chosen = schedule[rotation] == Guide::depth ? focal_depth.begin()->node
                                                        : focal_overlap.begin()->node;
        } else {
            chosen = anchor.begin()->node;
        }
        rotation = (rotation + 1) % (schedule.size() + 1);

        remove_node(chosen);
        auto owned = std::move(nodes.at(chosen->state.canonical_key));
        nodes.erase(chosen->state.canonical_key);

        const Count parent_hov = owned->hov;
        auto kids = successors(owned->state, task, &seen, cfg.workers);
        ++result.expansions;
        result.generated += static_cast<Count>(kids.size());

        for (SuccessorOutput& kid : kids) {
            ++result.audit_edges_checked;
            if (!returns_preserved(owned->state, kid.state)) {
                ++result.audit_edge_violations;
            }
            if (is_goal(kid.state, task)) {
                if (goal_better(kid.state)) {
                    best_goal = std::move(kid.state);
                }
            } else {
                insert_node(std::move(kid.state), parent_hov, focal_bound);
            }
        }
        emit_progress(false);
    }

    // Tree exhausted: the best found is exactly the best reachable.
    return finish(best_goal ? static_cast<double>(best_goal->g) : -1.0, false);
}

OracleResult brute_force_oracle(const SceneTask& task) {
    const std::vector<double> xs =
        grid_axis_values(task.grid.min_x, task.grid.max_x, task.grid.step_xy);
    const std::vector<double> ys =
        grid_axis_values(task.grid.min_y, task.grid.max_y, task.grid.step_xy);
    const std::vector<double> yaws = grid_yaw_values(task.grid.step_yaw);

    double joint = 1.0;
    std::vector<const ObjectModel*> objects;
    for (const std::string& id : task.required_objects) {
        const ObjectModel& m = task.model(id);
        objects.push_back(&m);
        const double per = static_cast<double>(xs.size()) * static_cast<double>(ys.size()) *
                           (m.rotationally_symmetric ? 1.0 : static_cast<double>(yaws.size()));
        joint *= per;
        if (joint > 1e6) {
            throw std::invalid_argument("brute_force_oracle: joint grid exceeds one million");
        }
    }

    OracleResult best;
    std::vector<ObjectPoseHypothesis> current(objects.size());

    // Recursive sweep in required-object order, each object over x, y, yaw
    // ascending: the enumeration itself is the lexicographic tie-break.
    auto recurse = [&](auto&& self, std::size_t level) -> void {
        if (level == objects.size()) {
            DepthImage img(task.camera);
            for (const ObjectPoseHypothesis& a : current) {
                render_into(img, task.model(a.model_id).mesh, a.pose);
            }
            const PointCloud rendered = depth_to_cloud(img);
            const Count cost = count_unexplained(rendered, task.observed_index, task.delta) +
                               count_unexplained(task.observed, SpatialIndex(rendered), task.delta);
            ++best.evaluated;
            if (best.cost < 0 || cost < best.cost) {
                best.cost = cost;
                best.assignment = current;
            }
            return;
        }
        const ObjectModel& m = *objects[level];
        for (double x : xs) {
            for (double y : ys) {
                if (m.rotationally_symmetric) {
                    current[level] = {m.id, RigidPose2D(x, y, 0.0)};
                    self(self, level + 1);
                } else {
                    for (double yaw : yaws) {
                        current[level] = {m.id, RigidPose2D(x, y, yaw)};
                        self(self, level + 1);
                    }
                }
            }
        }
    };
    recurse(recurse, 0);
    return best;
}

}  // namespace scenesearch
