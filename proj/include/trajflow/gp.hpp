#pragma once

#include <Eigen/Dense>
#include <vector>

#include "trajflow/trajectory.hpp"
#include "trajflow/types.hpp"

namespace trajflow {

// RBF kernel hyperparameters shared by the two per-axis velocity GPs. The
// exponential part depends only on u_x/u_y, so the axes differ by the signal
// variance scale and can share the Cholesky factor whenever sigma_x == sigma_y.
struct GpHyper {
    double sigma_x = 1.0;  // signal std, x-velocity output
    double sigma_y = 1.0;  // signal std, y-velocity output
    double sigma_n = 0.1;  // observation noise std
    double u_x = 1.0;      // length scale, x input
    double u_y = 1.0;      // length scale, y input

    void validate() const;
};

struct WeightParams {
    double epsilon = 1.0;  // neighborhood radius, scene units
    double beta = 1.0;     // weighting exponent; 0 disables positional weighting

    void validate() const;
};

struct VelocityPrediction {
    double mean_vx = 0.0;
    double mean_vy = 0.0;
    double var_x = 0.0;
    double var_y = 0.0;
};

enum class Axis { x, y };

inline constexpr std::size_t kDefaultTrainingCap = 400;

// A cluster of (sub-)trajectories plus per-axis GP regressors from position to
// velocity. Immutable once built; membership changes produce a new value.
class MotionPattern {
public:
    MotionPattern() = default;

    // Builds training data (flattened velocity samples, deterministically
    // subsampled to `training_cap`) and the Cholesky factor caches.
    static MotionPattern build(TrajId id, std::vector<Trajectory> members, const GpHyper& hyper,
                               std::size_t training_cap = kDefaultTrainingCap);

    // A pattern with no training data: the GP prior. Used to score the
    // new-cluster hypothesis.
    static MotionPattern prior(const GpHyper& hyper);

    TrajId id() const { return id_; }
    const std::vector<Trajectory>& members() const { return members_; }
    std::size_t size() const { return members_.size(); }
    bool empty() const { return members_.empty(); }
    std::size_t training_size() const { return static_cast<std::size_t>(train_pos_.rows()); }
    const GpHyper& hyper() const { return hyper_; }
    const Eigen::MatrixX2d& training_positions() const { return train_pos_; }
    const Eigen::VectorXd& training_vx() const { return train_vx_; }
    const Eigen::VectorXd& training_vy() const { return train_vy_; }

    bool has_member(TrajId traj_id) const;

    VelocityPrediction posterior(const TrajPoint& query) const;
    std::vector<VelocityPrediction> posterior_batch(const std::vector<TrajPoint>& queries) const;

    // number of member trajectories with at least one point inside the closed
    // epsilon-disc around p
    std::size_t support_count(const TrajPoint& p, double epsilon) const;

private:
    void factorize();

    TrajId id_ = 0;
    std::vector<Trajectory> members_;
    GpHyper hyper_;
    Eigen::MatrixX2d train_pos_;
    Eigen::VectorXd train_vx_;
    Eigen::VectorXd train_vy_;
    Eigen::MatrixXd chol_x_;  // lower factor of sigma_x^2 E + sigma_n^2 I (+ jitter)
    Eigen::MatrixXd chol_y_;  // empty when shared with chol_x_
    Eigen::VectorXd alpha_x_;
    Eigen::VectorXd alpha_y_;
    bool shared_factor_ = true;
};

// Eq.-style RBF covariance between two points for one output axis. The noise
// term belongs on the Gram diagonal only (same training index), so callers
// pass same_index accordingly; cross-covariances never carry it.
double rbf_kernel(const TrajPoint& p, const TrajPoint& p2, const GpHyper& hyper, Axis axis,
                  bool same_index = false);

// Sum over points of per-axis Gaussian log densities of the observed
// velocities under the pattern posterior. If traj is a member of the pattern
// it is excluded from the training set first (leave-self-out).
double gp_log_likelihood(const Trajectory& traj, const MotionPattern& pattern,
                         std::size_t training_cap = kDefaultTrainingCap);

// Likelihood of precomputed samples against a pattern as-is (no leave-out).
double sample_log_likelihood(const std::vector<VelocitySample>& samples, const MotionPattern& pattern);
double weighted_sample_log_likelihood(const std::vector<VelocitySample>& samples,
                                      const MotionPattern& pattern, const WeightParams& wp);

// (1 + n_eps/n)^beta where n_eps counts member trajectories passing through
// the closed epsilon-disc around p. An empty pattern weighs 1.
double positional_weight(const TrajPoint& p, const MotionPattern& pattern, const WeightParams& wp);

// gp_log_likelihood plus the summed log positional weights, the clustering
// likelihood. Leave-self-out applies to both terms when traj is a member.
double weighted_log_likelihood(const Trajectory& traj, const MotionPattern& pattern,
                               const WeightParams& wp, std::size_t training_cap = kDefaultTrainingCap);

double log_normal_pdf(double value, double mean, double variance);

}  // namespace trajflow
