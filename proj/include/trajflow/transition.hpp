#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "trajflow/dbscan.hpp"
#include "trajflow/dpgp.hpp"

namespace trajflow {

struct TestConfig {
    double significance = 0.05;   // p-value threshold retaining H0
    std::size_t min_run = 3;      // minimum consecutive accepted points
    double min_support = 0.5;     // fraction of m1 members that must contain a run
    std::size_t gap_bridge = 3;   // accepted runs separated by <= this many points are joined
    std::size_t max_iterations = 25;

    void validate() const;
};

struct SharedRun {
    enum class Kind { branch, merge };
    TrajId trajectory_id = 0;
    IndexInterval index_range;  // half-open, within the owning trajectory
    Kind kind = Kind::merge;
};

// A 2-D Gaussian over a region where discrete transition behavior occurs,
// fitted over a DBSCAN endpoint cluster.
struct TransitionPoint {
    TrajId id = 0;
    TrajPoint mean;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();

    void validate() const;  // cov must be symmetric PD above the eigenvalue floor
};

inline constexpr double kCovarianceEigenFloor = 1e-6;

// log(g * w): density of the observed velocity under m2's posterior at q,
// times m2's positional weight. q is a sample of an m1 trajectory.
double test_statistic(const VelocitySample& q, const MotionPattern& m1, const MotionPattern& m2,
                      const WeightParams& wp);

// Two-sided p-value of q's velocity under m2's posterior via the chi-square-2
// law: exp(-d^2/2) over the per-axis standardized residuals. Points with zero
// m2 support inside the epsilon disc are gated to p = 0.
double p_value(const VelocitySample& q, const MotionPattern& m2, const WeightParams& wp);

// Maximal consecutive runs of m1-trajectory points whose p-value against m2
// retains H0. Returns empty unless at least tc.min_support of m1's members
// contain a qualifying run.
std::vector<SharedRun> find_shared_runs(const MotionPattern& m1, const MotionPattern& m2,
                                        const TestConfig& tc, const WeightParams& wp);

struct SplitOutcome {
    Clustering clustering;
    TrajId new_pattern_id = 0;
};

// Cuts the run segments out of their trajectories and pools them into one new
// pattern; remainder segments stay in their source patterns. Children carry
// parent lineage, and reassembling them reproduces each parent exactly.
SplitOutcome split_on_runs(const Clustering& clustering, TrajId m1_id,
                           const std::vector<SharedRun>& runs, const DpConfig& cfg);

// Same, but pooling run sets from several source patterns into a single new
// pattern (the two sides of one hypothesis-test comparison).
SplitOutcome apply_split(const Clustering& clustering,
                         const std::vector<std::pair<TrajId, std::vector<SharedRun>>>& run_sets,
                         const DpConfig& cfg);

struct IterativeResult {
    Clustering clustering;
    std::size_t iterations = 0;
    std::size_t splits = 0;
    bool guard_exhausted = false;
};

using IterationObserver = std::function<void(const Clustering&, std::size_t iteration)>;

// Alternates DPGP clustering with pairwise shared-run discovery, splitting on
// the first qualifying pattern pair per iteration until none remains or the
// iteration guard runs out.
IterativeResult iterative_cluster(const Dataset& ds, const DpConfig& cfg, const TestConfig& tc,
                                  const IterationObserver& observer = {});

// First and last points of every (sub-)trajectory, clustered with DBSCAN and
// fitted with floored-covariance Gaussians. Noise points yield nothing.
std::vector<TransitionPoint> discover_transition_points(const Clustering& clustering,
                                                        const DbscanParams& params);

double mahalanobis2(const TrajPoint& p, const TransitionPoint& tp);

}  // namespace trajflow
