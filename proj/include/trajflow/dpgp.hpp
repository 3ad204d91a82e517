#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "trajflow/gp.hpp"
#include "trajflow/trajectory.hpp"

namespace trajflow {

// Sentinel pattern id for the new-cluster hypothesis in posterior listings.
inline constexpr TrajId kNewPattern = -1;

struct DpConfig {
    double alpha = 0.5;            // DP concentration
    std::size_t init_clusters = 6; // 0 = one initial cluster per trajectory
    std::size_t sweeps = 5;
    WeightParams wp;
    GpHyper hyper;
    std::uint64_t seed = 0;
    enum class Assign { argmax, sample };
    Assign assign = Assign::argmax;
    std::size_t training_cap = kDefaultTrainingCap;

    void validate() const;
};

class Clustering {
public:
    std::vector<MotionPattern> patterns;                 // kept sorted by pattern id
    std::unordered_map<TrajId, TrajId> assignment;       // trajectory id -> pattern id
    TrajId next_pattern_id = 0;

    const MotionPattern* find_pattern(TrajId pattern_id) const;
    MotionPattern* find_pattern(TrajId pattern_id);
    void insert_pattern(MotionPattern pattern);
    void erase_pattern(TrajId pattern_id);
    std::size_t n_elements() const { return assignment.size(); }

    // throws ValidationError if the partition invariant is broken
    void verify_partition() const;
};

// CRP priors for existing clusters (n_mj / (alpha + n_t - 1)) and a new one
// (alpha / (alpha + n_t - 1)). Sizes must exclude the evaluated trajectory.
std::pair<std::vector<double>, double> crp_priors(const std::vector<std::size_t>& cluster_sizes,
                                                  std::size_t n_t, double alpha);

// Log posterior per existing pattern plus the new-cluster hypothesis
// (id kNewPattern). The trajectory is held out of its own pattern and of the
// CRP counts before scoring; entries follow ascending pattern id, NEW last.
std::vector<std::pair<TrajId, double>> assignment_log_posteriors(const Trajectory& traj,
                                                                 const Clustering& clustering,
                                                                 const DpConfig& cfg);

// DPGP sweep clustering: random init into cfg.init_clusters groups (or one
// group per trajectory when 0), then up to cfg.sweeps reassignment passes in
// ascending trajectory id order, stopping early once a sweep changes nothing.
Clustering cluster_dataset(const Dataset& ds, const DpConfig& cfg);

// Same, but over an explicit element list (used by iterative splitting where
// elements are sub-trajectories rather than dataset rows).
Clustering cluster_elements(const std::vector<Trajectory>& elements, const DpConfig& cfg);

}  // namespace trajflow
