#include "trajflow/dpgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "trajflow/parallel.hpp"

namespace trajflow {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void DpConfig::validate() const {
    if (!(alpha > 0.0)) throw ValidationError("dp alpha must be > 0");
    if (sweeps == 0) throw ValidationError("dp sweeps must be >= 1");
    hyper.validate();
    wp.validate();
}

const MotionPattern* Clustering::find_pattern(TrajId pattern_id) const {
    for (const auto& p : patterns) {
        if (p.id() == pattern_id) return &p;
    }
    return nullptr;
}

MotionPattern* Clustering::find_pattern(TrajId pattern_id) {
    for (auto& p : patterns) {
        if (p.id() == pattern_id) return &p;
    }
    return nullptr;
}

void Clustering::insert_pattern(MotionPattern pattern) {
    const auto pos = std::lower_bound(patterns.begin(), patterns.end(), pattern.id(),
                                      [](const MotionPattern& p, TrajId id) { return p.id() < id; });
    patterns.insert(pos, std::move(pattern));
}

void Clustering::erase_pattern(TrajId pattern_id) {
    patterns.erase(std::remove_if(patterns.begin(), patterns.end(),
                                  [&](const MotionPattern& p) { return p.id() == pattern_id; }),
                   patterns.end());
}

void Clustering::verify_partition() const {
    std::size_t member_total = 0;
    for (const auto& p : patterns) {
        if (p.empty()) throw ValidationError("empty pattern " + std::to_string(p.id()) + " survived");
        member_total += p.size();
        for (const auto& m : p.members()) {
            const auto it = assignment.find(m.id);
            if (it == assignment.end() || it->second != p.id()) {
                throw ValidationError("assignment map disagrees with pattern membership for trajectory " +
                                      std::to_string(m.id));
            }
        }
    }
    if (member_total != assignment.size()) {
        throw ValidationError("patterns do not partition the elements: " + std::to_string(member_total) +
                              " members vs " + std::to_string(assignment.size()) + " assignments");
    }
}

std::pair<std::vector<double>, double> crp_priors(const std::vector<std::size_t>& cluster_sizes,
                                                  std::size_t n_t, double alpha) {
    std::size_t total = 0;
    for (std::size_t s : cluster_sizes) total += s;
    if (total != n_t - 1) {
        throw ValidationError("crp_priors contract violation: sizes sum to " + std::to_string(total) +
                              ", expected n_t - 1 = " + std::to_string(n_t - 1));
    }
    const double denom = alpha + static_cast<double>(n_t) - 1.0;
    std::vector<double> existing;
    existing.reserve(cluster_sizes.size());
    for (std::size_t s : cluster_sizes) existing.push_back(static_cast<double>(s) / denom);
    return {existing, alpha / denom};
}

namespace {

// scores one element against every pattern (self held out) plus NEW
std::vector<std::pair<TrajId, double>> score_element(const std::vector<VelocitySample>& samples,
                                                     const Clustering& clustering, const DpConfig& cfg,
                                                     const MotionPattern& own_stripped, TrajId own_id) {
    const std::size_t n_t = clustering.n_elements();
    const double denom = cfg.alpha + static_cast<double>(n_t) - 1.0;

    const std::size_t n_patterns = clustering.patterns.size();
    std::vector<std::pair<TrajId, double>> out(n_patterns + 1);

    parallel_for(n_patterns + 1, [&](std::size_t i) {
        if (i == n_patterns) {
            const double log_prior = std::log(cfg.alpha / denom);
            const MotionPattern fresh = MotionPattern::prior(cfg.hyper);
            out[i] = {kNewPattern, log_prior + weighted_sample_log_likelihood(samples, fresh, cfg.wp)};
            return;
        }
        const MotionPattern& p = clustering.patterns[i];
        const bool own = p.id() == own_id;
        const MotionPattern& eval = own ? own_stripped : p;
        const std::size_t size = eval.size();
        if (size == 0) {
            out[i] = {p.id(), kNegInf};
            return;
        }
        const double log_prior = std::log(static_cast<double>(size) / denom);
        out[i] = {p.id(), log_prior + weighted_sample_log_likelihood(samples, eval, cfg.wp)};
    });
    return out;
}

MotionPattern stripped_of(const MotionPattern& pattern, TrajId traj_id, const DpConfig& cfg) {
    std::vector<Trajectory> rest;
    rest.reserve(pattern.size());
    for (const auto& m : pattern.members()) {
        if (m.id != traj_id) rest.push_back(m);
    }
    if (rest.empty()) return MotionPattern::prior(cfg.hyper);
    return MotionPattern::build(pattern.id(), std::move(rest), cfg.hyper, cfg.training_cap);
}

TrajId pick_assignment(const std::vector<std::pair<TrajId, double>>& posteriors, DpConfig::Assign mode,
                       std::mt19937_64& rng) {
    if (mode == DpConfig::Assign::argmax) {
        // ties break to the lowest pattern id; NEW (listed last) loses ties
        std::size_t best = 0;
        for (std::size_t i = 1; i < posteriors.size(); ++i) {
            if (posteriors[i].second > posteriors[best].second) best = i;
        }
        return posteriors[best].first;
    }
    // sample from the normalized posterior in log domain
    double max_log = kNegInf;
    for (const auto& [id, lp] : posteriors) max_log = std::max(max_log, lp);
    std::vector<double> w(posteriors.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < posteriors.size(); ++i) {
        if (posteriors[i].second == kNegInf) continue;
        w[i] = std::exp(posteriors[i].second - max_log);
        total += w[i];
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double r = unit(rng) * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
        r -= w[i];
        if (r <= 0.0) return posteriors[i].first;
    }
    return posteriors.back().first;
}

Clustering init_clustering(const std::vector<Trajectory>& elements, const DpConfig& cfg,
                           std::mt19937_64& rng) {
    Clustering c;
    std::vector<std::vector<Trajectory>> groups;
    if (cfg.init_clusters == 0) {
        groups.reserve(elements.size());
        for (const auto& t : elements) groups.push_back({t});
    } else {
        groups.resize(cfg.init_clusters);
        std::uniform_int_distribution<std::size_t> pick(0, cfg.init_clusters - 1);
        for (const auto& t : elements) groups[pick(rng)].push_back(t);
    }
    for (auto& g : groups) {
        if (g.empty()) continue;
        const TrajId pid = c.next_pattern_id++;
        for (const auto& t : g) c.assignment[t.id] = pid;
        c.insert_pattern(MotionPattern::build(pid, std::move(g), cfg.hyper, cfg.training_cap));
    }
    return c;
}

}  // namespace

std::vector<std::pair<TrajId, double>> assignment_log_posteriors(const Trajectory& traj,
                                                                 const Clustering& clustering,
                                                                 const DpConfig& cfg) {
    cfg.validate();
    const auto it = clustering.assignment.find(traj.id);
    if (it == clustering.assignment.end()) {
        throw ValidationError("trajectory " + std::to_string(traj.id) + " is not part of the clustering");
    }
    const MotionPattern* own = clustering.find_pattern(it->second);
    if (own == nullptr) {
        throw ValidationError("assignment references missing pattern " + std::to_string(it->second));
    }
    const auto samples = estimate_velocities(traj);
    const MotionPattern stripped = stripped_of(*own, traj.id, cfg);
    return score_element(samples, clustering, cfg, stripped, own->id());
}

Clustering cluster_elements(const std::vector<Trajectory>& elements, const DpConfig& cfg) {
    cfg.validate();
    if (elements.empty()) throw ValidationError("cannot cluster an empty dataset");
    for (const auto& t : elements) t.validate();

    std::mt19937_64 rng(cfg.seed);
    Clustering clustering = init_clustering(elements, cfg, rng);

    std::vector<const Trajectory*> order;
    order.reserve(elements.size());
    for (const auto& t : elements) order.push_back(&t);
    std::sort(order.begin(), order.end(),
              [](const Trajectory* a, const Trajectory* b) { return a->id < b->id; });

    for (std::size_t sweep = 0; sweep < cfg.sweeps; ++sweep) {
        bool changed = false;
        for (const Trajectory* traj : order) {
            const TrajId own_id = clustering.assignment.at(traj->id);
            MotionPattern* own = clustering.find_pattern(own_id);
            const auto samples = estimate_velocities(*traj);
            const MotionPattern stripped = stripped_of(*own, traj->id, cfg);
            const auto posteriors = score_element(samples, clustering, cfg, stripped, own_id);
            const TrajId winner = pick_assignment(posteriors, cfg.assign, rng);

            if (winner == own_id) continue;  // original pattern untouched
            changed = true;

            // detach from the source pattern
            Trajectory moved = *traj;
            if (stripped.empty()) {
                clustering.erase_pattern(own_id);
            } else {
                *clustering.find_pattern(own_id) = stripped;
            }
            // attach to the winner (possibly a brand-new pattern)
            if (winner == kNewPattern) {
                const TrajId pid = clustering.next_pattern_id++;
                clustering.assignment[traj->id] = pid;
                clustering.insert_pattern(MotionPattern::build(pid, {std::move(moved)}, cfg.hyper,
                                                               cfg.training_cap));
            } else {
                MotionPattern* target = clustering.find_pattern(winner);
                std::vector<Trajectory> grown = target->members();
                grown.push_back(std::move(moved));
                *target = MotionPattern::build(winner, std::move(grown), cfg.hyper, cfg.training_cap);
                clustering.assignment[traj->id] = winner;
            }
        }
        if (!changed) break;
    }
    clustering.verify_partition();
    return clustering;
}

Clustering cluster_dataset(const Dataset& ds, const DpConfig& cfg) {
    return cluster_elements(ds.trajectories, cfg);
}

}  // namespace trajflow
