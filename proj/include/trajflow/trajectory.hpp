#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "trajflow/types.hpp"

namespace trajflow {

// A time-ordered 2-D point sequence sampled at a uniform step dt.
// Sub-trajectories produced by splitting carry their parent id and the
// half-open index range they occupied in the parent.
struct Trajectory {
    TrajId id = 0;
    std::vector<TrajPoint> points;
    double dt = 0.0;
    std::optional<TrajId> parent_id;
    std::optional<IndexInterval> parent_range;

    std::size_t size() const { return points.size(); }
    void validate() const;  // throws ValidationError on broken invariants
};

struct Dataset {
    std::vector<Trajectory> trajectories;
    std::string units = "meters";
    Bounds bounds;

    std::size_t n_t() const { return trajectories.size(); }
    const Trajectory* find(TrajId id) const;
    void recompute_bounds();
};

struct ValidationIssue {
    enum class Kind { non_uniform_dt, non_finite_point, duplicate_id, out_of_bounds, too_short };
    Kind kind;
    TrajId trajectory_id = 0;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool clean() const { return issues.empty(); }
};

// Keeps points at stride `keep_every`, always retaining the final point so
// scene exit locations survive; dt scales by the stride.
Trajectory downsample(const Trajectory& traj, std::size_t keep_every);

// Forward differences attached at the left point; the last point receives the
// backward difference. Output length equals point count.
std::vector<VelocitySample> estimate_velocities(const Trajectory& traj);

ValidationReport validate_dataset(const Dataset& ds);

// Resolves a (possibly nested) sub-trajectory to its root ancestor id and the
// absolute index interval it occupies there. Trajectories without a parent
// map to themselves.
struct LineageIndex {
    explicit LineageIndex(const std::vector<Trajectory>& all);
    std::pair<TrajId, IndexInterval> resolve(const Trajectory& traj) const;

private:
    std::unordered_map<TrajId, const Trajectory*> by_id_;
};

}  // namespace trajflow
