#include "trajflow/transition.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "trajflow/parallel.hpp"

namespace trajflow {

void TestConfig::validate() const {
    if (!(significance > 0.0) || !(significance < 1.0)) {
        throw ValidationError("significance must lie in (0,1)");
    }
    if (min_run == 0) throw ValidationError("min_run must be >= 1");
    if (!(min_support > 0.0) || min_support > 1.0) {
        throw ValidationError("min_support must lie in (0,1]");
    }
}

void TransitionPoint::validate() const {
    if (!mean.finite()) throw ValidationError("transition point mean is not finite");
    if (std::abs(cov(0, 1) - cov(1, 0)) > 1e-9) {
        throw ValidationError("transition point covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    if (es.eigenvalues().minCoeff() < kCovarianceEigenFloor * (1.0 - 1e-9)) {
        throw ValidationError("transition point covariance below the eigenvalue floor");
    }
}

double mahalanobis2(const TrajPoint& p, const TransitionPoint& tp) {
    const double dx = p.x - tp.mean.x;
    const double dy = p.y - tp.mean.y;
    const double a = tp.cov(0, 0), b = tp.cov(0, 1), d = tp.cov(1, 1);
    const double det = a * d - b * b;
    return (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
}

double test_statistic(const VelocitySample& q, const MotionPattern& m1, const MotionPattern& m2,
                      const WeightParams& wp) {
    (void)m1;  // q's membership in m1 is the hypothesis context; the density is m2's
    const VelocityPrediction pred = m2.posterior(q.position);
    const double log_g = log_normal_pdf(q.vx, pred.mean_vx, pred.var_x) +
                         log_normal_pdf(q.vy, pred.mean_vy, pred.var_y);
    return log_g + std::log(positional_weight(q.position, m2, wp));
}

double p_value(const VelocitySample& q, const MotionPattern& m2, const WeightParams& wp) {
    if (m2.support_count(q.position, wp.epsilon) == 0) return 0.0;
    const VelocityPrediction pred = m2.posterior(q.position);
    const double rx = q.vx - pred.mean_vx;
    const double ry = q.vy - pred.mean_vy;
    const double d2 = rx * rx / pred.var_x + ry * ry / pred.var_y;
    return std::exp(-0.5 * d2);  // chi-square-2 survival function
}

namespace {

std::vector<IndexInterval> accepted_runs(const std::vector<bool>& accepted, const TestConfig& tc) {
    std::vector<IndexInterval> raw;
    std::size_t i = 0;
    const std::size_t n = accepted.size();
    while (i < n) {
        if (!accepted[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && accepted[j]) ++j;
        raw.push_back({i, j});
        i = j;
    }
    // bridge short rejection gaps so one shared segment stays one run
    std::vector<IndexInterval> bridged;
    for (const auto& r : raw) {
        if (!bridged.empty() && r.begin - bridged.back().end <= tc.gap_bridge) {
            bridged.back().end = r.end;
        } else {
            bridged.push_back(r);
        }
    }
    std::vector<IndexInterval> kept;
    for (const auto& r : bridged) {
        if (r.size() >= tc.min_run) kept.push_back(r);
    }
    return kept;
}

SharedRun::Kind classify_run(const IndexInterval& run, std::size_t n_points) {
    if (run.end == n_points) return SharedRun::Kind::merge;   // shared tail
    if (run.begin == 0) return SharedRun::Kind::branch;        // shared head
    return SharedRun::Kind::merge;
}

}  // namespace

std::vector<SharedRun> find_shared_runs(const MotionPattern& m1, const MotionPattern& m2,
                                        const TestConfig& tc, const WeightParams& wp) {
    tc.validate();
    if (m1.id() == m2.id()) throw ValidationError("find_shared_runs requires distinct patterns");

    const std::size_t n_members = m1.members().size();
    std::vector<std::vector<SharedRun>> per_member(n_members);
    parallel_for(n_members, [&](std::size_t mi) {
        const Trajectory& traj = m1.members()[mi];
        const auto samples = estimate_velocities(traj);
        std::vector<bool> accepted(samples.size(), false);

        // batched posterior keeps the Cholesky solves to one pass per member
        std::vector<TrajPoint> positions(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) positions[i] = samples[i].position;
        const auto preds = m2.posterior_batch(positions);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (m2.support_count(positions[i], wp.epsilon) == 0) continue;
            const double rx = samples[i].vx - preds[i].mean_vx;
            const double ry = samples[i].vy - preds[i].mean_vy;
            const double d2 = rx * rx / preds[i].var_x + ry * ry / preds[i].var_y;
            accepted[i] = std::exp(-0.5 * d2) >= tc.significance;
        }
        for (const auto& run : accepted_runs(accepted, tc)) {
            per_member[mi].push_back({traj.id, run, classify_run(run, traj.points.size())});
        }
    });

    std::size_t members_with_runs = 0;
    std::vector<SharedRun> all;
    for (const auto& runs : per_member) {
        if (!runs.empty()) ++members_with_runs;
        all.insert(all.end(), runs.begin(), runs.end());
    }
    const double support = static_cast<double>(members_with_runs) / static_cast<double>(n_members);
    if (support < tc.min_support) return {};
    return all;
}

namespace {

TrajId max_element_id(const Clustering& clustering) {
    TrajId max_id = 0;
    for (const auto& p : clustering.patterns) {
        for (const auto& m : p.members()) max_id = std::max(max_id, m.id);
    }
    return max_id;
}

struct Segment {
    IndexInterval range;
    bool shared = false;
};

// cut a trajectory at run boundaries; segments shorter than 2 points fold
// into the preceding segment (or the following one at the very front)
std::vector<Segment> segment_trajectory(std::size_t n_points, std::vector<IndexInterval> runs) {
    std::sort(runs.begin(), runs.end(),
              [](const IndexInterval& a, const IndexInterval& b) { return a.begin < b.begin; });
    std::vector<Segment> segments;
    std::size_t cursor = 0;
    for (const auto& run : runs) {
        if (run.begin > n_points || run.end > n_points || run.begin >= run.end) {
            throw ValidationError("shared run boundary out of range");
        }
        if (run.begin < cursor) continue;  // overlapping runs collapse into the first
        if (run.begin > cursor) segments.push_back({{cursor, run.begin}, false});
        segments.push_back({{run.begin, run.end}, true});
        cursor = run.end;
    }
    if (cursor < n_points) segments.push_back({{cursor, n_points}, false});

    std::vector<Segment> repaired;
    for (const auto& seg : segments) {
        if (seg.range.size() >= 2) {
            repaired.push_back(seg);
        } else if (!repaired.empty()) {
            repaired.back().range.end = seg.range.end;
        } else {
            repaired.push_back(seg);  // head stub: extend when the next segment arrives
        }
    }
    if (repaired.size() >= 2 && repaired.front().range.size() < 2) {
        repaired[1].range.begin = repaired.front().range.begin;
        repaired.erase(repaired.begin());
    }
    return repaired;
}

}  // namespace

SplitOutcome apply_split(const Clustering& clustering,
                         const std::vector<std::pair<TrajId, std::vector<SharedRun>>>& run_sets,
                         const DpConfig& cfg) {
    bool any = false;
    for (const auto& [pid, runs] : run_sets) any = any || !runs.empty();
    if (!any) throw ValidationError("apply_split requires at least one non-empty run set");

    Clustering out = clustering;
    TrajId next_element_id = max_element_id(clustering) + 1;
    std::vector<Trajectory> new_pattern_members;

    for (const auto& [pattern_id, runs] : run_sets) {
        if (runs.empty()) continue;
        MotionPattern* pattern = out.find_pattern(pattern_id);
        if (pattern == nullptr) {
            throw ValidationError("split references missing pattern " + std::to_string(pattern_id));
        }
        std::map<TrajId, std::vector<IndexInterval>> runs_by_traj;
        for (const auto& r : runs) {
            if (!pattern->has_member(r.trajectory_id)) {
                throw ValidationError("run references trajectory " + std::to_string(r.trajectory_id) +
                                      " outside pattern " + std::to_string(pattern_id));
            }
            runs_by_traj[r.trajectory_id].push_back(r.index_range);
        }

        std::vector<Trajectory> remaining;
        for (const auto& member : pattern->members()) {
            const auto it = runs_by_traj.find(member.id);
            if (it == runs_by_traj.end()) {
                remaining.push_back(member);
                continue;
            }
            const auto segments = segment_trajectory(member.points.size(), it->second);
            if (segments.size() == 1 && segments[0].shared) {
                // run covers the whole trajectory: move it wholesale, no cut
                out.assignment.erase(member.id);
                new_pattern_members.push_back(member);
                continue;
            }
            out.assignment.erase(member.id);
            for (const auto& seg : segments) {
                Trajectory child;
                child.id = next_element_id++;
                child.dt = member.dt;
                child.parent_id = member.id;
                child.parent_range = seg.range;
                child.points.assign(member.points.begin() + static_cast<std::ptrdiff_t>(seg.range.begin),
                                    member.points.begin() + static_cast<std::ptrdiff_t>(seg.range.end));
                if (seg.shared) {
                    new_pattern_members.push_back(std::move(child));
                } else {
                    remaining.push_back(std::move(child));
                }
            }
        }

        if (remaining.empty()) {
            out.erase_pattern(pattern_id);
        } else {
            for (const auto& m : remaining) out.assignment[m.id] = pattern_id;
            *out.find_pattern(pattern_id) =
                MotionPattern::build(pattern_id, std::move(remaining), cfg.hyper, cfg.training_cap);
        }
    }

    const TrajId new_id = out.next_pattern_id++;
    for (const auto& m : new_pattern_members) out.assignment[m.id] = new_id;
    out.insert_pattern(MotionPattern::build(new_id, std::move(new_pattern_members), cfg.hyper,
                                            cfg.training_cap));
    out.verify_partition();
    return {std::move(out), new_id};
}

SplitOutcome split_on_runs(const Clustering& clustering, TrajId m1_id,
                           const std::vector<SharedRun>& runs, const DpConfig& cfg) {
    if (runs.empty()) throw ValidationError("split_on_runs requires a non-empty run set");
    return apply_split(clustering, {{m1_id, runs}}, cfg);
}

IterativeResult iterative_cluster(const Dataset& ds, const DpConfig& cfg, const TestConfig& tc,
                                  const IterationObserver& observer) {
    cfg.validate();
    tc.validate();

    std::vector<Trajectory> elements = ds.trajectories;
    IterativeResult result;
    for (std::size_t iter = 0; iter < tc.max_iterations; ++iter) {
        DpConfig iter_cfg = cfg;
        iter_cfg.seed = cfg.seed + iter;  // fresh but reproducible re-clustering each round
        Clustering clustering = cluster_elements(elements, iter_cfg);
        result.iterations = iter + 1;
        if (observer) observer(clustering, iter);

        // first qualifying ordered pair, patterns scanned by ascending id
        bool split_done = false;
        for (std::size_t i = 0; i < clustering.patterns.size() && !split_done; ++i) {
            for (std::size_t j = 0; j < clustering.patterns.size() && !split_done; ++j) {
                if (i == j) continue;
                const MotionPattern& a = clustering.patterns[i];
                const MotionPattern& b = clustering.patterns[j];
                const auto runs_ab = find_shared_runs(a, b, tc, cfg.wp);
                if (runs_ab.empty()) continue;
                const auto runs_ba = find_shared_runs(b, a, tc, cfg.wp);
                auto outcome = apply_split(clustering, {{a.id(), runs_ab}, {b.id(), runs_ba}}, cfg);
                elements.clear();
                for (const auto& p : outcome.clustering.patterns) {
                    elements.insert(elements.end(), p.members().begin(), p.members().end());
                }
                ++result.splits;
                split_done = true;
            }
        }
        if (!split_done) {
            result.clustering = std::move(clustering);
            return result;
        }
    }

    // guard exhausted: return the last clustering with the warning flag set
    DpConfig final_cfg = cfg;
    final_cfg.seed = cfg.seed + tc.max_iterations;
    result.clustering = cluster_elements(elements, final_cfg);
    result.guard_exhausted = true;
    return result;
}

std::vector<TransitionPoint> discover_transition_points(const Clustering& clustering,
                                                        const DbscanParams& params) {
    std::vector<TrajPoint> endpoints;
    for (const auto& p : clustering.patterns) {
        for (const auto& m : p.members()) {
            endpoints.push_back(m.points.front());
            endpoints.push_back(m.points.back());
        }
    }
    const DbscanResult res = dbscan(endpoints, params);

    std::vector<TransitionPoint> tps;
    for (std::size_t c = 0; c < res.clusters.size(); ++c) {
        const auto& idx = res.clusters[c];
        TransitionPoint tp;
        tp.id = static_cast<TrajId>(c);
        double sx = 0.0, sy = 0.0;
        for (std::size_t i : idx) {
            sx += endpoints[i].x;
            sy += endpoints[i].y;
        }
        const double n = static_cast<double>(idx.size());
        tp.mean = {sx / n, sy / n};

        Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
        if (idx.size() > 1) {
            for (std::size_t i : idx) {
                const double dx = endpoints[i].x - tp.mean.x;
                const double dy = endpoints[i].y - tp.mean.y;
                cov(0, 0) += dx * dx;
                cov(0, 1) += dx * dy;
                cov(1, 1) += dy * dy;
            }
            cov /= (n - 1.0);
            cov(1, 0) = cov(0, 1);
        }
        // floor the eigenvalues so every gate stays positive definite
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
        Eigen::Vector2d ev = es.eigenvalues().cwiseMax(kCovarianceEigenFloor);
        tp.cov = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
        tp.cov(1, 0) = tp.cov(0, 1);
        tps.push_back(tp);
    }
    return tps;
}

}  // namespace trajflow
