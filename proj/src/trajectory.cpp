#include "trajflow/trajectory.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace trajflow {

void Trajectory::validate() const {
    if (points.size() < 2) {
        throw ValidationError("trajectory " + std::to_string(id) + " has fewer than 2 points");
    }
    if (!(dt > 0.0)) {
        throw ValidationError("trajectory " + std::to_string(id) + " has non-positive dt");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!points[i].finite()) {
            throw ValidationError("trajectory " + std::to_string(id) + " has non-finite point at index " +
                                  std::to_string(i));
        }
    }
    if (parent_id.has_value() != parent_range.has_value()) {
        throw ValidationError("trajectory " + std::to_string(id) + " has partial lineage");
    }
    if (parent_range && parent_range->size() != points.size()) {
        throw ValidationError("trajectory " + std::to_string(id) + " parent_range size mismatch");
    }
}

const Trajectory* Dataset::find(TrajId id) const {
    for (const auto& t : trajectories) {
        if (t.id == id) return &t;
    }
    return nullptr;
}

void Dataset::recompute_bounds() {
    bounds = Bounds{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
                    std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
    bool any = false;
    for (const auto& t : trajectories) {
        for (const auto& p : t.points) {
            if (!p.finite()) continue;
            bounds.min_x = std::min(bounds.min_x, p.x);
            bounds.min_y = std::min(bounds.min_y, p.y);
            bounds.max_x = std::max(bounds.max_x, p.x);
            bounds.max_y = std::max(bounds.max_y, p.y);
            any = true;
        }
    }
    if (!any) bounds = Bounds{};
}

Trajectory downsample(const Trajectory& traj, std::size_t keep_every) {
    if (keep_every == 0) throw ValidationError("keep_every must be >= 1");
    if (keep_every == 1) return traj;

    Trajectory out;
    out.id = traj.id;
    out.dt = traj.dt * static_cast<double>(keep_every);
    out.parent_id = traj.parent_id;
    out.parent_range = traj.parent_range;
    for (std::size_t i = 0; i < traj.points.size(); i += keep_every) {
        out.points.push_back(traj.points[i]);
    }
    // keep the exit location even when it falls off-stride
    const std::size_t last = traj.points.size() - 1;
    if (last % keep_every != 0) {
        out.points.push_back(traj.points[last]);
    }
    if (out.points.size() < 2) {
        throw ValidationError("downsample of trajectory " + std::to_string(traj.id) +
                              " leaves fewer than 2 points");
    }
    // lineage ranges refer to parent indices and no longer apply after resampling
    out.parent_id.reset();
    out.parent_range.reset();
    return out;
}

std::vector<VelocitySample> estimate_velocities(const Trajectory& traj) {
    traj.validate();
    const std::size_t n = traj.points.size();
    std::vector<VelocitySample> out(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        out[i].position = traj.points[i];
        out[i].vx = (traj.points[i + 1].x - traj.points[i].x) / traj.dt;
        out[i].vy = (traj.points[i + 1].y - traj.points[i].y) / traj.dt;
    }
    // the last point sees only its past: reuse the final forward difference
    out[n - 1].position = traj.points[n - 1];
    out[n - 1].vx = (traj.points[n - 1].x - traj.points[n - 2].x) / traj.dt;
    out[n - 1].vy = (traj.points[n - 1].y - traj.points[n - 2].y) / traj.dt;
    return out;
}

ValidationReport validate_dataset(const Dataset& ds) {
    ValidationReport report;
    std::set<TrajId> seen;
    double ref_dt = 0.0;
    for (const auto& t : ds.trajectories) {
        if (!seen.insert(t.id).second) {
            report.issues.push_back({ValidationIssue::Kind::duplicate_id, t.id,
                                     "duplicate id " + std::to_string(t.id)});
        }
        if (t.points.size() < 2) {
            report.issues.push_back({ValidationIssue::Kind::too_short, t.id,
                                     "trajectory " + std::to_string(t.id) + " has fewer than 2 points"});
        }
        if (ref_dt == 0.0 && t.dt > 0.0) ref_dt = t.dt;
        if (ref_dt > 0.0 && std::abs(t.dt - ref_dt) > 0.01 * ref_dt) {
            report.issues.push_back({ValidationIssue::Kind::non_uniform_dt, t.id,
                                     "trajectory " + std::to_string(t.id) + " dt differs from dataset dt"});
        }
        for (std::size_t i = 0; i < t.points.size(); ++i) {
            if (!t.points[i].finite()) {
                report.issues.push_back({ValidationIssue::Kind::non_finite_point, t.id,
                                         "non-finite point at index " + std::to_string(i) +
                                             " of trajectory " + std::to_string(t.id)});
            } else if (!ds.bounds.contains(t.points[i])) {
                report.issues.push_back({ValidationIssue::Kind::out_of_bounds, t.id,
                                         "point " + std::to_string(i) + " of trajectory " +
                                             std::to_string(t.id) + " outside dataset bounds"});
            }
        }
    }
    return report;
}

LineageIndex::LineageIndex(const std::vector<Trajectory>& all) {
    for (const auto& t : all) by_id_[t.id] = &t;
}

std::pair<TrajId, IndexInterval> LineageIndex::resolve(const Trajectory& traj) const {
    TrajId id = traj.id;
    IndexInterval range{0, traj.points.size()};
    const Trajectory* cur = &traj;
    while (cur->parent_id) {
        const auto it = by_id_.find(*cur->parent_id);
        if (it == by_id_.end()) {
            throw ValidationError("unresolved lineage: trajectory " + std::to_string(cur->id) +
                                  " references missing parent " + std::to_string(*cur->parent_id));
        }
        const IndexInterval local = *cur->parent_range;
        range = IndexInterval{local.begin + range.begin, local.begin + range.end};
        cur = it->second;
        id = cur->id;
    }
    return {id, range};
}

}  // namespace trajflow
