#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scenesearch/msgt.hpp"

namespace scenesearch {

// Guidance heuristics. Neither is admissible; they only steer which frontier
// states get expanded early, never the guarantee.

// Number of objects still to place.
Count h_depth(const SceneState& s, std::size_t total_objects);

// Observed points not covered by any assigned object's volume.
Count h_overlap(const SceneState& s, const SceneTask& task);

inline constexpr const char* kHeuristicDepth = "depth";
inline constexpr const char* kHeuristicOverlap = "overlap";

struct SearchProgress {
    Count expansions = 0;
    Count generated = 0;
    Count best_cost = -1;  // -1 until a complete assignment is found
    double elapsed = 0.0;  // seconds
};

struct SearchConfig {
    // Suboptimality factor: the returned cost is certified within w times
    // the optimum. Must be >= 1.
    double w = 3.0;
    // Wall-clock budget in seconds; <= 0 means unlimited. Checked between
    // expansions, so overshoot is bounded by one expansion.
    double time_limit = 0.0;
    // Round-robin order of guidance heuristics; empty list degrades to pure
    // cheapest-first expansion.
    std::vector<std::string> heuristics{kHeuristicDepth, kHeuristicOverlap};
    // Threads used inside each expansion. Results never depend on this.
    int workers = 1;
    // Optional statistics stream: called every `progress_every` expansions
    // and once at termination. 0 disables.
    std::function<void(const SearchProgress&)> on_progress;
    Count progress_every = 0;
};

struct SearchResult {
    // Best complete assignment found, if any.
    std::optional<SceneState> goal;
    Count cost = -1;  // goal's accumulated cost; -1 when goal is absent
    // w x (cheapest frontier cost at termination): an upper bound on
    // w x optimum. cost <= bound_certificate holds whenever the search ran
    // to its stopping rule; a timed-out result reports the bound it had
    // reached, which may certify nothing. -1 when the tree was exhausted
    // without a single complete assignment.
    double bound_certificate = -1.0;
    Count expansions = 0;
    Count generated = 0;
    double wall_time = 0.0;  // seconds
    bool timed_out = false;

    // Always-on self-checks, expected to stay at zero violations.
    Count audit_edges_checked = 0;      // parent returns intact in each child
    Count audit_edge_violations = 0;
    Count audit_overlap_checked = 0;    // coverage never shrinks along a path
    Count audit_overlap_violations = 0;
    Count audit_anchor_regressions = 0;  // frontier minimum never decreased
};

// Best-first search over the scene generation tree. The frontier is ordered
// by accumulated cost alone; each round additionally expands, per configured
// heuristic, the best-scoring state among those within w of the cheapest
// frontier entry. Stops when the best complete assignment costs at most
// w x (cheapest frontier entry), when the tree is exhausted (no complete
// assignment reachable -> goal absent), or at the time limit (best found so
// far, flagged). The task must have been prepared.
SearchResult solve(const SceneTask& task, const SearchConfig& cfg);

struct OracleResult {
    std::vector<ObjectPoseHypothesis> assignment;  // in required-object order
    Count cost = -1;
    Count evaluated = 0;  // complete scenes rendered and scored
};

// Exhaustive reference: scores every joint on-grid assignment (no pose
// refinement, whole scene rendered monolithically) and returns the cheapest;
// ties keep the first in enumeration order (objects in required order, each
// sweeping x, then y, then yaw ascending). Throws if the joint grid exceeds
// one million configurations.
OracleResult brute_force_oracle(const SceneTask& task);

}  // namespace scenesearch
