#include "trajflow/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace trajflow {

namespace {

std::uint64_t mix_member_ids(const std::vector<Trajectory>& members) {
    std::vector<TrajId> ids;
    ids.reserve(members.size());
    for (const auto& m : members) ids.push_back(m.id);
    std::sort(ids.begin(), ids.end());
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (TrajId id : ids) {
        for (int b = 0; b < 8; ++b) {
            h ^= static_cast<std::uint64_t>((id >> (8 * b)) & 0xff);
            h *= 1099511628211ull;
        }
    }
    return h;
}

}  // namespace

void GpHyper::validate() const {
    if (!(sigma_x > 0.0) || !(sigma_y > 0.0) || !(sigma_n > 0.0) || !(u_x > 0.0) || !(u_y > 0.0)) {
        throw ValidationError("GP hyperparameters must all be strictly positive");
    }
}

void WeightParams::validate() const {
    if (!(epsilon > 0.0)) throw ValidationError("weight epsilon must be > 0");
    if (beta < 0.0) throw ValidationError("weight beta must be >= 0");
}

double log_normal_pdf(double value, double mean, double variance) {
    const double r = value - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + r * r / variance);
}

double rbf_kernel(const TrajPoint& p, const TrajPoint& p2, const GpHyper& hyper, Axis axis,
                  bool same_index) {
    const double sigma = axis == Axis::x ? hyper.sigma_x : hyper.sigma_y;
    const double dx = p.x - p2.x;
    const double dy = p.y - p2.y;
    double k = sigma * sigma *
               std::exp(-dx * dx / (2.0 * hyper.u_x * hyper.u_x) - dy * dy / (2.0 * hyper.u_y * hyper.u_y));
    if (same_index) k += hyper.sigma_n * hyper.sigma_n;
    return k;
}

MotionPattern MotionPattern::prior(const GpHyper& hyper) {
    hyper.validate();
    MotionPattern p;
    p.id_ = -1;
    p.hyper_ = hyper;
    p.train_pos_.resize(0, 2);
    return p;
}

MotionPattern MotionPattern::build(TrajId id, std::vector<Trajectory> members, const GpHyper& hyper,
                                   std::size_t training_cap) {
    hyper.validate();
    MotionPattern p;
    p.id_ = id;
    p.hyper_ = hyper;
    p.members_ = std::move(members);

    std::vector<VelocitySample> samples;
    for (const auto& m : p.members_) {
        const auto vs = estimate_velocities(m);
        samples.insert(samples.end(), vs.begin(), vs.end());
    }
    if (samples.size() > training_cap && training_cap > 0) {
        // uniform subsample, reseeded deterministically from the membership
        std::mt19937_64 rng(mix_member_ids(p.members_) ^ 0x9e3779b97f4a7c15ull);
        std::vector<std::size_t> idx(samples.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t i = 0; i < training_cap; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
            std::swap(idx[i], idx[pick(rng)]);
        }
        idx.resize(training_cap);
        std::sort(idx.begin(), idx.end());
        std::vector<VelocitySample> kept;
        kept.reserve(training_cap);
        for (std::size_t i : idx) kept.push_back(samples[i]);
        samples = std::move(kept);
    }

    const auto n = static_cast<Eigen::Index>(samples.size());
    p.train_pos_.resize(n, 2);
    p.train_vx_.resize(n);
    p.train_vy_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        p.train_pos_(i, 0) = samples[static_cast<std::size_t>(i)].position.x;
        p.train_pos_(i, 1) = samples[static_cast<std::size_t>(i)].position.y;
        p.train_vx_(i) = samples[static_cast<std::size_t>(i)].vx;
        p.train_vy_(i) = samples[static_cast<std::size_t>(i)].vy;
    }
    if (n > 0) p.factorize();
    return p;
}

void MotionPattern::factorize() {
    const Eigen::Index n = train_pos_.rows();
    Eigen::MatrixXd expm(n, n);
    const double inv2ux = 1.0 / (2.0 * hyper_.u_x * hyper_.u_x);
    const double inv2uy = 1.0 / (2.0 * hyper_.u_y * hyper_.u_y);
    for (Eigen::Index i = 0; i < n; ++i) {
        expm(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dx = train_pos_(i, 0) - train_pos_(j, 0);
            const double dy = train_pos_(i, 1) - train_pos_(j, 1);
            const double e = std::exp(-dx * dx * inv2ux - dy * dy * inv2uy);
            expm(i, j) = e;
            expm(j, i) = e;
        }
    }
    const double noise = hyper_.sigma_n * hyper_.sigma_n;

    auto factor_axis = [&](double sigma) -> Eigen::MatrixXd {
        Eigen::MatrixXd gram = (sigma * sigma) * expm;
        gram.diagonal().array() += noise;
        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success) {
            // one jitter escalation, then give up
            gram.diagonal().array() += 1e-8 * sigma * sigma;
            llt.compute(gram);
            if (llt.info() != Eigen::Success) {
                throw NumericalError("Gram matrix for pattern " + std::to_string(id_) +
                                     " is not positive definite after jitter");
            }
        }
        return llt.matrixL();
    };

    chol_x_ = factor_axis(hyper_.sigma_x);
    shared_factor_ = hyper_.sigma_x == hyper_.sigma_y;
    if (!shared_factor_) chol_y_ = factor_axis(hyper_.sigma_y);

    const auto solve = [](const Eigen::MatrixXd& L, const Eigen::VectorXd& b) {
        Eigen::VectorXd y = L.triangularView<Eigen::Lower>().solve(b);
        return L.transpose().triangularView<Eigen::Upper>().solve(y).eval();
    };
    alpha_x_ = solve(chol_x_, train_vx_);
    alpha_y_ = solve(shared_factor_ ? chol_x_ : chol_y_, train_vy_);
}

bool MotionPattern::has_member(TrajId traj_id) const {
    for (const auto& m : members_) {
        if (m.id == traj_id) return true;
    }
    return false;
}

VelocityPrediction MotionPattern::posterior(const TrajPoint& query) const {
    return posterior_batch({query})[0];
}

std::vector<VelocityPrediction> MotionPattern::posterior_batch(const std::vector<TrajPoint>& queries) const {
    const double sx2 = hyper_.sigma_x * hyper_.sigma_x;
    const double sy2 = hyper_.sigma_y * hyper_.sigma_y;
    const double noise = hyper_.sigma_n * hyper_.sigma_n;
    const double prior_var_x = sx2 + noise;
    const double prior_var_y = sy2 + noise;

    std::vector<VelocityPrediction> out(queries.size());
    const Eigen::Index n = train_pos_.rows();
    if (n == 0) {
        for (auto& o : out) o = {0.0, 0.0, prior_var_x, prior_var_y};
        return out;
    }

    const auto m = static_cast<Eigen::Index>(queries.size());
    Eigen::MatrixXd expm(n, m);
    const double inv2ux = 1.0 / (2.0 * hyper_.u_x * hyper_.u_x);
    const double inv2uy = 1.0 / (2.0 * hyper_.u_y * hyper_.u_y);
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto& q = queries[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < n; ++i) {
            const double dx = train_pos_(i, 0) - q.x;
            const double dy = train_pos_(i, 1) - q.y;
            expm(i, j) = std::exp(-dx * dx * inv2ux - dy * dy * inv2uy);
        }
    }

    // K* carries no noise term: the Dirac term lives on the Gram diagonal only
    const Eigen::MatrixXd kx = sx2 * expm;
    const Eigen::MatrixXd vx_solve = chol_x_.triangularView<Eigen::Lower>().solve(kx);
    Eigen::VectorXd mean_x = kx.transpose() * alpha_x_;
    Eigen::VectorXd mean_y = (sy2 / sx2) * (kx.transpose() * alpha_y_);

    Eigen::VectorXd var_x(m), var_y(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        var_x(j) = std::max(prior_var_x - vx_solve.col(j).squaredNorm(), 1e-12);
    }
    if (shared_factor_) {
        // same factor and sy2/sx2 scaling: reuse the x solve
        const double ratio = (sy2 / sx2) * (sy2 / sx2);
        for (Eigen::Index j = 0; j < m; ++j) {
            var_y(j) = std::max(prior_var_y - ratio * vx_solve.col(j).squaredNorm(), 1e-12);
        }
    } else {
        const Eigen::MatrixXd vy_solve = chol_y_.triangularView<Eigen::Lower>().solve((sy2 * expm).eval());
        for (Eigen::Index j = 0; j < m; ++j) {
            var_y(j) = std::max(prior_var_y - vy_solve.col(j).squaredNorm(), 1e-12);
        }
    }

    for (Eigen::Index j = 0; j < m; ++j) {
        out[static_cast<std::size_t>(j)] = {mean_x(j), mean_y(j), var_x(j), var_y(j)};
    }
    return out;
}

std::size_t MotionPattern::support_count(const TrajPoint& p, double epsilon) const {
    const double eps2 = epsilon * epsilon;
    std::size_t count = 0;
    for (const auto& m : members_) {
        for (const auto& q : m.points) {
            if (squared_distance(p, q) <= eps2) {
                ++count;
                break;
            }
        }
    }
    return count;
}

namespace {

// leave-self-out: rebuild the pattern without traj when it is a member
MotionPattern strip_member(const MotionPattern& pattern, TrajId traj_id, std::size_t cap) {
    std::vector<Trajectory> rest;
    rest.reserve(pattern.members().size());
    for (const auto& m : pattern.members()) {
        if (m.id != traj_id) rest.push_back(m);
    }
    if (rest.empty()) return MotionPattern::prior(pattern.hyper());
    return MotionPattern::build(pattern.id(), std::move(rest), pattern.hyper(), cap);
}

double gp_log_likelihood_direct(const std::vector<VelocitySample>& samples, const MotionPattern& pattern) {
    std::vector<TrajPoint> positions;
    positions.reserve(samples.size());
    for (const auto& s : samples) positions.push_back(s.position);
    const auto preds = pattern.posterior_batch(positions);
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        total += log_normal_pdf(samples[i].vx, preds[i].mean_vx, preds[i].var_x);
        total += log_normal_pdf(samples[i].vy, preds[i].mean_vy, preds[i].var_y);
    }
    return total;
}

}  // namespace

double gp_log_likelihood(const Trajectory& traj, const MotionPattern& pattern, std::size_t training_cap) {
    const auto samples = estimate_velocities(traj);
    if (pattern.has_member(traj.id)) {
        return gp_log_likelihood_direct(samples, strip_member(pattern, traj.id, training_cap));
    }
    return gp_log_likelihood_direct(samples, pattern);
}

double sample_log_likelihood(const std::vector<VelocitySample>& samples, const MotionPattern& pattern) {
    return gp_log_likelihood_direct(samples, pattern);
}

double weighted_sample_log_likelihood(const std::vector<VelocitySample>& samples,
                                      const MotionPattern& pattern, const WeightParams& wp) {
    double total = gp_log_likelihood_direct(samples, pattern);
    for (const auto& s : samples) {
        total += std::log(positional_weight(s.position, pattern, wp));
    }
    return total;
}

double positional_weight(const TrajPoint& p, const MotionPattern& pattern, const WeightParams& wp) {
    if (pattern.empty()) return 1.0;
    const double frac = static_cast<double>(pattern.support_count(p, wp.epsilon)) /
                        static_cast<double>(pattern.size());
    return std::pow(1.0 + frac, wp.beta);
}

double weighted_log_likelihood(const Trajectory& traj, const MotionPattern& pattern,
                               const WeightParams& wp, std::size_t training_cap) {
    const auto samples = estimate_velocities(traj);
    if (pattern.has_member(traj.id)) {
        return weighted_sample_log_likelihood(samples, strip_member(pattern, traj.id, training_cap), wp);
    }
    return weighted_sample_log_likelihood(samples, pattern, wp);
}

}  // namespace trajflow
